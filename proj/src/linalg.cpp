#include "mts/linalg.hpp"

#include "mts/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mts {

CheckedLu::CheckedLu(const Matrix& a, std::size_t level, double max_condition) {
    if (a.rows() != a.cols()) throw DimensionError(level, "expected a square matrix");
    if (!a.allFinite()) throw SingularityError(level, std::numeric_limits<double>::infinity());
    lu_.compute(a);
    const double rcond = lu_.rcond();
    condition_ = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (!(condition_ <= max_condition)) throw SingularityError(level, condition_);
}

double spectral_abscissa(const Spectrum& s) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& z : s) m = std::max(m, z.real());
    return m;
}

Spectrum sorted_spectrum(Spectrum s) {
    std::sort(s.begin(), s.end(), [](const Complex& a, const Complex& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return s;
}

double spectrum_distance(const Spectrum& a, const Spectrum& b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    std::vector<bool> used(b.size(), false);
    double worst = 0.0;
    for (const auto& z : sorted_spectrum(a)) {
        std::size_t best = b.size();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < b.size(); ++k) {
            if (used[k]) continue;
            const double d = std::abs(z - b[k]);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        used[best] = true;
        worst = std::max(worst, best_d);
    }
    return worst;
}

double spectral_norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues()(0);
}

double min_symmetric_eigenvalue(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double max_symmetric_eigenvalue(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

}  // namespace mts
