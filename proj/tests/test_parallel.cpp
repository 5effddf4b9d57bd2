#include "support.hpp"

#include "mts/errors.hpp"
#include "mts/parallel.hpp"
#include "mts/stability.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>

using namespace mts;
using namespace mts::testing;

TEST_CASE("parallel map matches the serial map bitwise") {
    std::mt19937_64 rng(41);
    std::vector<LinearStackConfig> configs;
    for (int k = 0; k < 64; ++k) configs.push_back(random_linear_config(rng));
    auto abscissa = [](const LinearStackConfig& c) {
        const auto s = linear_stack(c);
        const auto r = classify_local_stability(s, scheme::PredictiveSensitivity{}, Vector::Zero(total_dim(c)));
        return r.spectral_abscissa;
    };
    const auto serial = par::map_points(configs, abscissa, par::Execution::Serial);
    const auto parallel = par::map_points(configs, abscissa, par::Execution::Parallel);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t k = 0; k < serial.size(); ++k) CHECK(serial[k] == parallel[k]);
}

TEST_CASE("parallel finite-difference Jacobian matches the serial one") {
    const auto s = rlc_stack(RlcParams{});
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 5; ++trial) {
        const Vector x = uniform_point(rng, 8, -50.0, 50.0);
        const Field f = [&](const Vector& v) { return s.field(v); };
        const Matrix a = par::finite_difference_jacobian(f, x, kDefaultFdStep, par::Execution::Serial);
        const Matrix b = par::finite_difference_jacobian(f, x, kDefaultFdStep, par::Execution::Parallel);
        CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a - mts::finite_difference_jacobian(f, x)).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a - s.jacobian(x)).norm() <= 1e-5 * (1.0 + s.jacobian(x).norm()));
    }
}

TEST_CASE("for_each_index visits every index and rethrows the lowest failure") {
    std::vector<std::atomic<int>> hits(500);
    par::for_each_index(hits.size(), [&](std::size_t k) { hits[k]++; });
    for (const auto& h : hits) CHECK(h.load() == 1);

    for (auto exec : {par::Execution::Serial, par::Execution::Parallel}) {
        try {
            par::for_each_index(
                100,
                [](std::size_t k) {
                    if (k % 10 == 7) throw std::runtime_error(std::to_string(k));
                },
                exec);
            FAIL("expected an exception");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()) == "7");
        }
    }
    CHECK_THROWS_AS(par::for_each_index(
                        4, [](std::size_t) { throw SingularityError(2, 1e20); }, par::Execution::Parallel),
                    SingularityError);
    CHECK(par::max_threads() >= 1);
}
