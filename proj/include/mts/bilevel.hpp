#pragma once

#include "mts/model.hpp"
#include "mts/sensitivity.hpp"

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mts {

using ScalarObjective = std::function<double(const Vector& x1, const Vector& x2)>;
using BlockGradient = std::function<Vector(const Vector& x1, const Vector& x2)>;
using BlockHessian = std::function<Matrix(const Vector& x1, const Vector& x2)>;

/// min_{x1} F1(x1, x2*(x1))  s.t.  x2*(x1) = argmin_{x2} F2(x1, x2).
struct BilevelProblem {
    std::size_t n1 = 1, n2 = 1;
    ScalarObjective F1, F2;
    BlockGradient grad1_x1, grad1_x2, grad2_x2;
    // Central differences of grad2_x2 when absent.
    std::optional<BlockHessian> hess2_x2x2, hess2_x2x1;
    std::string name;
};

Matrix lower_hessian(const BilevelProblem& p, const Vector& x1, const Vector& x2);  // ∇²_{x2x2} F2
Matrix cross_hessian(const BilevelProblem& p, const Vector& x1, const Vector& x2);  // ∇²_{x2x1} F2

/// S = -(∇²_{x2x2}F2)^{-1} ∇²_{x2x1}F2. Throws SingularityError (level 2).
Matrix lower_sensitivity(const BilevelProblem& p, const Vector& x1, const Vector& x2);

/// D_{x1}F1 = ∇_{x1}F1 + Sᵀ ∇_{x2}F1.
Vector total_gradient(const BilevelProblem& p, const Vector& x1, const Vector& x2);

/// x2*(x1) by Newton on ∇_{x2}F2 = 0 from `x2_guess`.
Vector solve_lower(const BilevelProblem& p, const Vector& x1, const Vector& x2_guess,
                   const NewtonOptions& options = {});

/// Central differences of x1 ↦ D_{x1}F1(x1, x2*(x1)), re-solving the lower
/// level at each perturbed x1 (warm-started at x2_guess).
Matrix reduced_hessian_fd(const BilevelProblem& p, const Vector& x1, double fd_step = 1e-4,
                          const std::optional<Vector>& x2_guess = std::nullopt,
                          const NewtonOptions& inner = {});

enum class PointVerdict { StrictLocalSolutionCandidate, StationaryNotSufficient, NotStationary };
std::string to_string(PointVerdict v);

struct PointClassification {
    bool stationary = false;
    double lower_hessian_min_eig = 0.0;
    Matrix reduced_hessian;  // empty when the point is not stationary
    double reduced_hessian_min_eig = 0.0;
    PointVerdict verdict = PointVerdict::NotStationary;
};

PointClassification classify_point(const BilevelProblem& p, const Vector& x1, const Vector& x2, double tol = 1e-8,
                                   double definiteness_tol = 1e-8);

namespace bilevel_method {
struct PredictiveSensitivity {};
struct EpsGDA {
    double eps = 0.5;
};
}  // namespace bilevel_method
using BilevelMethod = std::variant<bilevel_method::PredictiveSensitivity, bilevel_method::EpsGDA>;
std::string method_name(const BilevelMethod& m);

struct IterateLog {
    std::vector<Vector> x1, x2;       // iterates, starting with x0
    std::vector<double> residuals;    // ‖(D_{x1}F1, ∇_{x2}F2)‖₂ per iterate
    bool converged = false;
    bool diverged = false;
    int iterations_used = 0;

    std::size_t size() const noexcept { return residuals.size(); }
    /// First iterate index with ‖(x1, x2)‖₂ ≤ radius, if any.
    std::optional<std::size_t> first_within(double radius) const;
};

struct DiscreteSolveOptions {
    double tau = 0.25;
    int max_iterations = 200;
    double tol = 1e-8;
    double divergence_threshold = 1e6;
};

/// Euler-forward descent. Both methods move x1 along -τ D_{x1}F1; the fast
/// variable uses either -(τ/ε)∇_{x2}F2 or -τ∇_{x2}F2 + S(-τ D_{x1}F1).
IterateLog solve_discrete(const BilevelProblem& p, const BilevelMethod& method, const Vector& x1_0,
                          const Vector& x2_0, const DiscreteSolveOptions& options = {});

/// Two-level stack with f1 = -D_{x1}F1 and f2 = -∇_{x2}F2.
SystemStack as_system_stack(const BilevelProblem& p);

}  // namespace mts
