#pragma once

#include "mts/model.hpp"

#include <complex>
#include <cstddef>
#include <vector>

namespace mts {

using Complex = std::complex<double>;
using Spectrum = std::vector<Complex>;

inline constexpr double kSingularCondition = 1e12;

/// LU with partial pivoting plus a condition estimate (1 / rcond, 1-norm).
/// `level` is only used to label the SingularityError.
class CheckedLu {
public:
    CheckedLu(const Matrix& a, std::size_t level, double max_condition = kSingularCondition);

    Matrix solve(const Matrix& rhs) const { return lu_.solve(rhs); }
    Vector solve(const Vector& rhs) const { return lu_.solve(rhs); }
    double condition() const noexcept { return condition_; }

private:
    Eigen::PartialPivLU<Matrix> lu_;
    double condition_;
};

/// All eigenvalues of a square real matrix: Householder reduction to upper
/// Hessenberg form followed by Francis double-shift QR with deflation.
/// Throws NumericalError if a block fails to deflate within 30·n sweeps.
Spectrum eigenvalues(const Matrix& a);

/// Reduces `a` to upper Hessenberg form in place (exposed for tests).
void hessenberg_reduce(Matrix& a);

double spectral_abscissa(const Spectrum& s);

/// Sort by (real, imag) so spectra can be listed deterministically.
Spectrum sorted_spectrum(Spectrum s);

/// Largest distance in a greedy nearest-neighbour matching of two spectra of
/// equal size (infinity if the sizes differ).
double spectrum_distance(const Spectrum& a, const Spectrum& b);

double spectral_norm(const Matrix& a);
double min_symmetric_eigenvalue(const Matrix& a);
double max_symmetric_eigenvalue(const Matrix& a);

}  // namespace mts
