// Serial vs OpenMP for the data-parallel kernels.
#include "mts/casestudies.hpp"
#include "mts/parallel.hpp"
#include "mts/stability.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace mts;

namespace {

par::Execution exec_of(const benchmark::State& state) {
    return state.range(0) ? par::Execution::Parallel : par::Execution::Serial;
}

// A wide nonlinear field so that column evaluations dominate.
Vector wide_field(const Vector& x) {
    Vector y(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < x.size(); ++j) acc += std::sin(x[j] * static_cast<double>(i + 1)) * x[i];
        y[i] = acc;
    }
    return y;
}

void BM_FdJacobian(benchmark::State& state) {
    const Vector x = Vector::LinSpaced(static_cast<Eigen::Index>(state.range(1)), -1.0, 1.0);
    const Field f = wide_field;
    for (auto _ : state) benchmark::DoNotOptimize(par::finite_difference_jacobian(f, x, kDefaultFdStep, exec_of(state)));
}

std::vector<LinearStackConfig> suite(std::size_t n) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<LinearStackConfig> out;
    for (std::size_t k = 0; k < n; ++k) {
        LinearStackConfig c;
        c.dims = {3, 3, 3};
        c.blocks.assign(3, std::vector<Matrix>(3));
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) {
                Matrix m(3, 3);
                for (Eigen::Index r = 0; r < 9; ++r) m(r / 3, r % 3) = u(rng);
                if (i == j) m -= 3.0 * Matrix::Identity(3, 3);
                c.blocks[i][j] = m;
            }
        out.push_back(std::move(c));
    }
    return out;
}

void BM_StabilitySuite(benchmark::State& state) {
    const auto configs = suite(static_cast<std::size_t>(state.range(1)));
    const Vector origin = Vector::Zero(9);
    for (auto _ : state) {
        auto r = par::map_points(
            configs,
            [&](const LinearStackConfig& c) {
                return classify_local_stability(linear_stack(c), scheme::PredictiveSensitivity{}, origin,
                                                StabilityOptions{1e-8, 1e-9, 1e-6, JacobianMode::FiniteDifference})
                    .spectral_abscissa;
            },
            exec_of(state));
        benchmark::DoNotOptimize(r);
    }
}

}  // namespace

BENCHMARK(BM_FdJacobian)->ArgsProduct({{0, 1}, {64, 256}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_StabilitySuite)->ArgsProduct({{0, 1}, {200}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
