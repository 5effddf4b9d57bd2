#include "support.hpp"

#include "mts/errors.hpp"
#include "mts/linalg.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

using namespace mts;
using namespace mts::testing;

namespace {

bool has_eigenvalue(const Spectrum& s, Complex z, double tol) {
    for (const auto& w : s)
        if (std::abs(w - z) <= tol) return true;
    return false;
}

// Smallest singular value of A - λI: zero exactly when λ is an eigenvalue.
double eigen_residual(const Matrix& a, Complex lambda) {
    const Eigen::MatrixXcd shifted =
        a.cast<Complex>() - lambda * Eigen::MatrixXcd::Identity(a.rows(), a.cols());
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted);
    return svd.singularValues().minCoeff();
}

}  // namespace

TEST_CASE("eigenvalues of small closed-form matrices") {
    const auto rot = eigenvalues(mat({{0.0, -1.0}, {1.0, 0.0}}));
    REQUIRE(rot.size() == 2);
    CHECK(has_eigenvalue(rot, Complex(0.0, 1.0), 1e-14));
    CHECK(has_eigenvalue(rot, Complex(0.0, -1.0), 1e-14));

    const auto comp = eigenvalues(mat({{-1.0, -1.0}, {1.0, 0.0}}));
    CHECK(has_eigenvalue(comp, Complex(-0.5, std::sqrt(3.0) / 2.0), 1e-14));
    CHECK(has_eigenvalue(comp, Complex(-0.5, -std::sqrt(3.0) / 2.0), 1e-14));

    const auto d = eigenvalues(mat({{2.5, 0.0}, {0.0, -7.0}}));
    CHECK(has_eigenvalue(d, Complex(2.5, 0.0), 0.0));
    CHECK(has_eigenvalue(d, Complex(-7.0, 0.0), 0.0));

    CHECK(eigenvalues(Matrix(0, 0)).empty());
    CHECK(eigenvalues(mat({{4.0}}))[0] == Complex(4.0, 0.0));
}

TEST_CASE("eigenvalues agree with an independent solver and have small residuals") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 1 + trial % 12;
        Matrix a(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) a(r, c) = g(rng) * (trial % 3 == 0 ? 1e3 : 1.0);
        const auto ours = eigenvalues(a);
        REQUIRE(ours.size() == static_cast<std::size_t>(n));
        const Eigen::EigenSolver<Matrix> es(a, false);
        Spectrum ref(es.eigenvalues().data(), es.eigenvalues().data() + n);
        const double scale = a.norm();
        CHECK(spectrum_distance(ours, ref) <= 1e-8 * scale);
        for (const auto& z : ours) CHECK(eigen_residual(a, z) <= 1e-8 * scale);
    }
}

TEST_CASE("eigenvalues of badly scaled and structured matrices") {
    // Companion matrix of (λ-1)(λ-2)(λ-3)(λ-4).
    const Matrix c = mat({{10.0, -35.0, 50.0, -24.0}, {1.0, 0.0, 0.0, 0.0}, {0.0, 1.0, 0.0, 0.0}, {0.0, 0.0, 1.0, 0.0}});
    const auto s = eigenvalues(c);
    for (double r : {1.0, 2.0, 3.0, 4.0}) CHECK(has_eigenvalue(s, Complex(r, 0.0), 1e-8));

    Matrix graded(3, 3);
    graded << 1.0, 1e6, 0.0, 1e-6, 1.0, 1e6, 0.0, 1e-6, 1.0;
    // Diagonally similar to tridiag(1, 1, 1): eigenvalues 1 and 1 ± √2. Eigen's
    // unbalanced solver is off by ~1e-4 here, so the exact values are the oracle.
    const Spectrum ref{Complex(1.0, 0.0), Complex(1.0 + std::sqrt(2.0), 0.0), Complex(1.0 - std::sqrt(2.0), 0.0)};
    CHECK(spectrum_distance(eigenvalues(graded), ref) <= 1e-12);

    const Matrix zero = Matrix::Zero(5, 5);
    for (const auto& z : eigenvalues(zero)) CHECK(std::abs(z) == 0.0);
}

TEST_CASE("eigenvalue input errors") {
    CHECK_THROWS_AS(eigenvalues(Matrix::Zero(2, 3)), InputError);
    Matrix bad = Matrix::Identity(2, 2);
    bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(eigenvalues(bad), InputError);
}

TEST_CASE("Hessenberg reduction is a similarity with zeros below the subdiagonal") {
    std::mt19937_64 rng(9);
    Matrix a = uniform_point(rng, 36, -1.0, 1.0).reshaped(6, 6);
    Matrix h = a;
    hessenberg_reduce(h);
    for (int r = 2; r < 6; ++r)
        for (int c = 0; c < r - 1; ++c) CHECK(h(r, c) == 0.0);
    const Eigen::EigenSolver<Matrix> es(a, false);
    Spectrum ref(es.eigenvalues().data(), es.eigenvalues().data() + 6);
    CHECK(spectrum_distance(eigenvalues(h), ref) <= 1e-10);
}

TEST_CASE("spectrum helpers") {
    const Spectrum s{Complex(-1, 2), Complex(0.5, 0), Complex(-1, -2)};
    CHECK(spectral_abscissa(s) == 0.5);
    const auto sorted = sorted_spectrum(s);
    CHECK(sorted.front().real() <= sorted.back().real());
    CHECK(spectrum_distance(s, sorted) == 0.0);
    CHECK(std::isinf(spectrum_distance(s, Spectrum{Complex(0, 0)})));
    CHECK(spectral_norm(mat({{3.0, 0.0}, {0.0, -4.0}})) == doctest::Approx(4.0));
    CHECK(min_symmetric_eigenvalue(mat({{2.0, 1.0}, {1.0, 2.0}})) == doctest::Approx(1.0));
    CHECK(max_symmetric_eigenvalue(mat({{2.0, 1.0}, {1.0, 2.0}})) == doctest::Approx(3.0));
}

TEST_CASE("checked LU") {
    const CheckedLu lu(mat({{2.0, 1.0}, {1.0, 3.0}}), 2);
    CHECK((lu.solve(vec({3.0, 4.0})) - vec({1.0, 1.0})).norm() < 1e-15);
    CHECK(lu.condition() < 10.0);
    try {
        CheckedLu bad(mat({{1.0, 2.0}, {2.0, 4.0}}), 3);
        FAIL("expected a singularity error");
    } catch (const SingularityError& e) {
        CHECK(e.level() == 3);
        CHECK(e.condition() > kSingularCondition);
    }
    CHECK_THROWS_AS(CheckedLu(mat({{1.0, 0.0}, {0.0, 1e-13}}), 2), SingularityError);
}
