#pragma once

#include "mts/conditioning.hpp"
#include "mts/linalg.hpp"
#include "mts/model.hpp"
#include "mts/sensitivity.hpp"

#include <string>
#include <vector>

namespace mts {

enum class JacobianMode {
    FiniteDifference,  // central differences on the conditioned field
    Analytic,          // M^{-1} ∇f, exact only where f = 0
};

Matrix jacobian_at(const SystemStack& stack, const Scheme& s, const Vector& point,
                   JacobianMode mode = JacobianMode::FiniteDifference, double fd_step = kDefaultFdStep);

struct BlockTriangularForm {
    Matrix tilde;                  // M J M^{-1}: zero below the block diagonal
    Matrix transform;              // T = M^{-1}, so J = T · tilde · T^{-1}
    std::vector<Matrix> steps;     // elementary factors L_j, applied as L_j A L_j^{-1} for j = N-1..1
    std::vector<Matrix> diagonal;  // D_{x_i} f_i
};

/// Similarity reduction of the predictive-sensitivity Jacobian at a steady
/// state. Throws PreconditionError if ‖f(point)‖∞ > steady_tol.
BlockTriangularForm block_triangular_form(const SystemStack& stack, const Vector& point, double steady_tol = 1e-8);

enum class Verdict { ExponentiallyStable, Unstable, Marginal };
std::string to_string(Verdict v);

struct StabilityReport {
    Spectrum eigenvalues;
    std::vector<Spectrum> block_eigenvalues;  // eig(H_i D_{x_i} f_i) per level
    Verdict verdict = Verdict::Marginal;
    double spectral_abscissa = 0.0;
    std::string scheme;
    // Predictive schemes only: full spectrum vs union of block spectra.
    bool block_check_applies = false;
    double block_mismatch = 0.0;
    bool blocks_match = true;
};

struct StabilityOptions {
    double steady_tol = 1e-8;      // ‖f‖∞ allowed at the "steady" point
    double marginal_tol = 1e-9;    // |max Re λ| below this is Marginal
    double block_match_tol = 1e-6;
    JacobianMode mode = JacobianMode::Analytic;
};

Verdict classify_spectrum(double abscissa, double marginal_tol);

StabilityReport classify_local_stability(const SystemStack& stack, const Scheme& s, const Vector& steady_point,
                                         const StabilityOptions& options = {});

struct ContractionCertificate {
    std::vector<Matrix> P, Q;
    std::vector<Vector> sample_points;
    bool holds = false;
    std::vector<double> inverse_bound;        // 2‖P_i‖₂ / λ_min(Q_i)
    std::vector<double> worst_residual;       // max eig of P_i G + G^T P_i + Q_i over samples
    std::vector<double> max_inverse_norm;     // max ‖G^{-1}‖₂ over samples (when holds)
    bool inverse_bound_verified = false;
};

/// Samples the contraction inequality P_i G_i + G_i^T P_i ⪯ -Q_i with
/// G_i = D_{x_i} f_i (which is ∇_{x_N} f_N at the last level). A 1×1 P or Q
/// stands for a scalar multiple of the identity. Throws InputError when P or
/// Q is not symmetric positive definite.
ContractionCertificate contraction_check(const SystemStack& stack, const std::vector<Matrix>& P,
                                         const std::vector<Matrix>& Q, const std::vector<Vector>& sample_points);

struct DistanceBoundResult {
    std::vector<double> worst_ratio;  // max ‖x_i - x_i^s‖ / (bound_i ‖f_i^r‖) per level
    bool holds = true;
};

/// ‖x_i − x_i^s(x_1..x_{i-1})‖ ≤ bound_i ‖f_i^r(x_1..x_i)‖ at every sample, per level.
DistanceBoundResult distance_bound_check(const SystemStack& stack, const ContractionCertificate& cert,
                                         const std::vector<Vector>& sample_points, const NewtonOptions& options = {});

}  // namespace mts
