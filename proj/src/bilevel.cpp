#include "mts/bilevel.hpp"

#include "mts/errors.hpp"
#include "mts/linalg.hpp"

#include <cmath>

namespace mts {

namespace {

void check_blocks(const BilevelProblem& p, const Vector& x1, const Vector& x2) {
    if (static_cast<std::size_t>(x1.size()) != p.n1) throw DimensionError(1, "x1 has the wrong length");
    if (static_cast<std::size_t>(x2.size()) != p.n2) throw DimensionError(2, "x2 has the wrong length");
}

Vector join(const Vector& a, const Vector& b) {
    Vector out(a.size() + b.size());
    out << a, b;
    return out;
}

}  // namespace

Matrix lower_hessian(const BilevelProblem& p, const Vector& x1, const Vector& x2) {
    check_blocks(p, x1, x2);
    if (p.hess2_x2x2) return (*p.hess2_x2x2)(x1, x2);
    return finite_difference_jacobian([&](const Vector& y) { return p.grad2_x2(x1, y); }, x2);
}

Matrix cross_hessian(const BilevelProblem& p, const Vector& x1, const Vector& x2) {
    check_blocks(p, x1, x2);
    if (p.hess2_x2x1) return (*p.hess2_x2x1)(x1, x2);
    return finite_difference_jacobian([&](const Vector& y) { return p.grad2_x2(y, x2); }, x1);
}

Matrix lower_sensitivity(const BilevelProblem& p, const Vector& x1, const Vector& x2) {
    const CheckedLu lu(lower_hessian(p, x1, x2), 2);
    return -lu.solve(cross_hessian(p, x1, x2));
}

Vector total_gradient(const BilevelProblem& p, const Vector& x1, const Vector& x2) {
    const Matrix s = lower_sensitivity(p, x1, x2);
    return p.grad1_x1(x1, x2) + s.transpose() * p.grad1_x2(x1, x2);
}

SystemStack as_system_stack(const BilevelProblem& p) {
    const auto n1 = static_cast<Eigen::Index>(p.n1);
    const auto n2 = static_cast<Eigen::Index>(p.n2);
    Subsystem upper;
    upper.dim = p.n1;
    upper.name = "upper";
    upper.field = [p, n1, n2](const Vector& x) -> Vector {
        return -total_gradient(p, x.head(n1), x.segment(n1, n2));
    };
    Subsystem lower;
    lower.dim = p.n2;
    lower.name = "lower";
    lower.field = [p, n1, n2](const Vector& x) -> Vector { return -p.grad2_x2(x.head(n1), x.segment(n1, n2)); };
    lower.jacobian = [p, n1, n2](const Vector& x) -> Matrix {
        const Vector x1 = x.head(n1), x2 = x.segment(n1, n2);
        Matrix rows(n2, n1 + n2);
        rows.leftCols(n1) = -cross_hessian(p, x1, x2);
        rows.rightCols(n2) = -lower_hessian(p, x1, x2);
        return rows;
    };
    return SystemStack({std::move(upper), std::move(lower)});
}

Vector solve_lower(const BilevelProblem& p, const Vector& x1, const Vector& x2_guess, const NewtonOptions& options) {
    check_blocks(p, x1, x2_guess);
    const auto stack = as_system_stack(p);
    const auto solved = steady_state_solve(stack, 1, join(x1, x2_guess), options);
    return solved.state.tail(static_cast<Eigen::Index>(p.n2));
}

Matrix reduced_hessian_fd(const BilevelProblem& p, const Vector& x1, double fd_step,
                          const std::optional<Vector>& x2_guess, const NewtonOptions& inner) {
    if (!(fd_step > 0.0)) throw InputError("reduced_hessian_fd: step must be positive");
    const Vector guess = x2_guess ? *x2_guess : Vector::Zero(static_cast<Eigen::Index>(p.n2));
    const Vector base = solve_lower(p, x1, guess, inner);
    const auto n1 = static_cast<Eigen::Index>(p.n1);
    Matrix h(n1, n1);
    for (Eigen::Index k = 0; k < n1; ++k) {
        Vector xp = x1, xm = x1;
        xp[k] += fd_step;
        xm[k] -= fd_step;
        const Vector dp = total_gradient(p, xp, solve_lower(p, xp, base, inner));
        const Vector dm = total_gradient(p, xm, solve_lower(p, xm, base, inner));
        h.col(k) = (dp - dm) / (2.0 * fd_step);
    }
    return h;
}

std::string to_string(PointVerdict v) {
    switch (v) {
        case PointVerdict::StrictLocalSolutionCandidate: return "StrictLocalSolutionCandidate";
        case PointVerdict::StationaryNotSufficient: return "StationaryNotSufficient";
        case PointVerdict::NotStationary: return "NotStationary";
    }
    return "NotStationary";
}

PointClassification classify_point(const BilevelProblem& p, const Vector& x1, const Vector& x2, double tol,
                                   double definiteness_tol) {
    check_blocks(p, x1, x2);
    PointClassification out;
    const Matrix h22 = lower_hessian(p, x1, x2);
    out.lower_hessian_min_eig = min_symmetric_eigenvalue(0.5 * (h22 + h22.transpose()));
    const double lower_res = p.grad2_x2(x1, x2).norm();
    const double upper_res = total_gradient(p, x1, x2).norm();
    out.stationary = lower_res <= tol && upper_res <= tol;
    if (!out.stationary) return out;

    out.reduced_hessian = reduced_hessian_fd(p, x1, 1e-4, x2);
    const Matrix sym = 0.5 * (out.reduced_hessian + out.reduced_hessian.transpose());
    out.reduced_hessian_min_eig = min_symmetric_eigenvalue(sym);
    out.verdict = (out.lower_hessian_min_eig > definiteness_tol && out.reduced_hessian_min_eig > definiteness_tol)
                      ? PointVerdict::StrictLocalSolutionCandidate
                      : PointVerdict::StationaryNotSufficient;
    return out;
}

std::string method_name(const BilevelMethod& m) {
    if (std::holds_alternative<bilevel_method::PredictiveSensitivity>(m)) return "ps";
    return "gda";
}

std::optional<std::size_t> IterateLog::first_within(double radius) const {
    for (std::size_t k = 0; k < x1.size(); ++k) {
        const double r = std::sqrt(x1[k].squaredNorm() + x2[k].squaredNorm());
        if (r <= radius) return k;
    }
    return std::nullopt;
}

IterateLog solve_discrete(const BilevelProblem& p, const BilevelMethod& method, const Vector& x1_0,
                          const Vector& x2_0, const DiscreteSolveOptions& options) {
    if (!(options.tau > 0.0)) throw InputError("solve_discrete: tau must be positive");
    const auto* gda = std::get_if<bilevel_method::EpsGDA>(&method);
    if (gda && !(gda->eps > 0.0)) throw InputError("solve_discrete: eps must be positive");
    check_blocks(p, x1_0, x2_0);

    IterateLog log;
    Vector x1 = x1_0, x2 = x2_0;
    const double tau = options.tau;
    for (int k = 0;; ++k) {
        Matrix s;
        try {
            s = lower_sensitivity(p, x1, x2);
        } catch (const SingularityError& e) {
            throw SingularityError(2, e.condition(),
                                   "singular lower Hessian at iterate " + std::to_string(k));
        }
        const Vector d = p.grad1_x1(x1, x2) + s.transpose() * p.grad1_x2(x1, x2);
        const Vector g2 = p.grad2_x2(x1, x2);
        log.x1.push_back(x1);
        log.x2.push_back(x2);
        log.residuals.push_back(std::sqrt(d.squaredNorm() + g2.squaredNorm()));

        if (log.residuals.back() <= options.tol) {
            log.converged = true;
            break;
        }
        const double norm = std::sqrt(x1.squaredNorm() + x2.squaredNorm());
        if (!std::isfinite(norm) || norm > options.divergence_threshold || !std::isfinite(log.residuals.back())) {
            log.diverged = true;
            break;
        }
        if (k == options.max_iterations) break;

        const Vector step1 = -tau * d;
        x2 = gda ? Vector(x2 - (tau / gda->eps) * g2) : Vector(x2 - tau * g2 + s * step1);
        x1 = x1 + step1;
        log.iterations_used = k + 1;
    }
    return log;
}

}  // namespace mts
