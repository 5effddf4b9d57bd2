#include "mts/stability.hpp"

#include "mts/errors.hpp"
#include "mts/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace mts {

Matrix jacobian_at(const SystemStack& stack, const Scheme& s, const Vector& point, JacobianMode mode,
                   double fd_step) {
    if (mode == JacobianMode::FiniteDifference) {
        return finite_difference_jacobian([&](const Vector& x) { return conditioned_field(stack, s, x); }, point,
                                          fd_step);
    }
    const auto cm = conditioning_matrix(stack, s, point);
    const Matrix grad = stack.jacobian(point);
    Matrix jac(grad.rows(), grad.cols());
    for (Eigen::Index c = 0; c < grad.cols(); ++c) jac.col(c) = cm.solve(grad.col(c));
    return jac;
}

BlockTriangularForm block_triangular_form(const SystemStack& stack, const Vector& point, double steady_tol) {
    const Vector f = stack.field(point);
    const double fnorm = f.lpNorm<Eigen::Infinity>();
    if (!(fnorm <= steady_tol))
        throw PreconditionError("block_triangular_form: point is not a steady state (|f| = " + std::to_string(fnorm) +
                                ")");
    const auto table = total_derivative_table(stack, point);
    const auto cm = conditioning_matrix(stack, scheme::PredictiveSensitivity{}, point);
    const Matrix grad = stack.jacobian(point);

    BlockTriangularForm form;
    form.transform = cm.inverse();
    // J = M^{-1} ∇f, so M J M^{-1} = ∇f M^{-1}.
    Matrix j_full = form.transform * grad;
    const auto n = stack.total_dim();
    // M = L_1 L_2 ... L_{N-1}, L_j carrying column block j of M.
    Matrix a = j_full;
    for (std::size_t jj = stack.size() - 1; jj-- > 0;) {
        Matrix lj = Matrix::Identity(n, n);
        Matrix lj_inv = Matrix::Identity(n, n);
        for (std::size_t ii = jj + 1; ii < stack.size(); ++ii) {
            const auto blk = table.S(ii, jj);
            lj.block(stack.offset(ii), stack.offset(jj), stack.dim(ii), stack.dim(jj)) = -blk;
            lj_inv.block(stack.offset(ii), stack.offset(jj), stack.dim(ii), stack.dim(jj)) = blk;
        }
        a = lj * a * lj_inv;
        form.steps.push_back(std::move(lj));
    }
    form.tilde = std::move(a);
    for (std::size_t i = 0; i < stack.size(); ++i) form.diagonal.push_back(table.D(i, i));
    return form;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::ExponentiallyStable: return "ExponentiallyStable";
        case Verdict::Unstable: return "Unstable";
        case Verdict::Marginal: return "Marginal";
    }
    return "Marginal";
}

Verdict classify_spectrum(double abscissa, double marginal_tol) {
    if (abscissa < -marginal_tol) return Verdict::ExponentiallyStable;
    if (abscissa > marginal_tol) return Verdict::Unstable;
    return Verdict::Marginal;
}

StabilityReport classify_local_stability(const SystemStack& stack, const Scheme& s, const Vector& steady_point,
                                         const StabilityOptions& options) {
    validate_scheme(stack, s);
    const Vector f = stack.field(steady_point);
    const double fnorm = f.lpNorm<Eigen::Infinity>();
    if (!(fnorm <= options.steady_tol))
        throw PreconditionError("classify_local_stability: point is not a steady state (|f| = " +
                                std::to_string(fnorm) + ")");

    StabilityReport report;
    report.scheme = scheme_name(s);
    report.eigenvalues = sorted_spectrum(eigenvalues(jacobian_at(stack, s, steady_point, options.mode)));
    report.spectral_abscissa = spectral_abscissa(report.eigenvalues);
    report.verdict = classify_spectrum(report.spectral_abscissa, options.marginal_tol);

    const bool predictive = std::holds_alternative<scheme::PredictiveSensitivity>(s) ||
                            std::holds_alternative<scheme::Preconditioned>(s);
    try {
        const auto table = total_derivative_table(stack, steady_point);
        const auto gains = conditioning_matrix(stack, s, steady_point).gains;
        Spectrum all_blocks;
        for (std::size_t i = 0; i < stack.size(); ++i) {
            Spectrum b = sorted_spectrum(eigenvalues(gains[i] * table.D(i, i)));
            all_blocks.insert(all_blocks.end(), b.begin(), b.end());
            report.block_eigenvalues.push_back(std::move(b));
        }
        if (predictive) {
            report.block_check_applies = true;
            report.block_mismatch = spectrum_distance(report.eigenvalues, all_blocks);
            report.blocks_match = report.block_mismatch <= options.block_match_tol;
        }
    } catch (const SingularityError&) {
        if (predictive) throw;
        // Reduced blocks are informational for the diagonal schemes.
        report.block_eigenvalues.clear();
    }
    return report;
}

namespace {

Matrix expand(const Matrix& m, std::size_t dim) {
    if (m.rows() == 1 && m.cols() == 1 && dim != 1) return m(0, 0) * Matrix::Identity(dim, dim);
    return m;
}

void require_spd(const Matrix& m, std::size_t level, const char* name) {
    if (m.rows() != m.cols()) throw DimensionError(level, std::string(name) + " must be square");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw InputError(std::string(name) + "_" + std::to_string(level) + " is not symmetric");
    if (!(min_symmetric_eigenvalue(m) > 0.0))
        throw InputError(std::string(name) + "_" + std::to_string(level) + " is not positive definite");
}

}  // namespace

ContractionCertificate contraction_check(const SystemStack& stack, const std::vector<Matrix>& P,
                                         const std::vector<Matrix>& Q, const std::vector<Vector>& sample_points) {
    if (P.size() != stack.size() || Q.size() != stack.size())
        throw InputError("contraction_check needs one P and one Q per subsystem");
    ContractionCertificate cert;
    cert.sample_points = sample_points;
    const std::size_t n = stack.size();
    for (std::size_t i = 0; i < n; ++i) {
        Matrix p = expand(P[i], stack.dim(i));
        Matrix q = expand(Q[i], stack.dim(i));
        if (static_cast<std::size_t>(p.rows()) != stack.dim(i) || static_cast<std::size_t>(q.rows()) != stack.dim(i))
            throw DimensionError(i + 1, "P/Q dimension does not match the subsystem");
        require_spd(p, i + 1, "P");
        require_spd(q, i + 1, "Q");
        cert.inverse_bound.push_back(2.0 * max_symmetric_eigenvalue(p) / min_symmetric_eigenvalue(q));
        cert.P.push_back(std::move(p));
        cert.Q.push_back(std::move(q));
    }

    struct SampleResult {
        std::vector<double> residual;
        std::vector<double> inverse_norm;
    };
    const auto per_sample = par::map_points(sample_points, [&](const Vector& x) {
        SampleResult r;
        const auto table = total_derivative_table(stack, x);
        for (std::size_t i = 0; i < n; ++i) {
            const Matrix& g = table.D(i, i);
            const Matrix lhs = cert.P[i] * g + g.transpose() * cert.P[i] + cert.Q[i];
            r.residual.push_back(max_symmetric_eigenvalue(0.5 * (lhs + lhs.transpose())));
            Eigen::JacobiSVD<Matrix> svd(g);
            const double smin = svd.singularValues().minCoeff();
            r.inverse_norm.push_back(smin > 0.0 ? 1.0 / smin : std::numeric_limits<double>::infinity());
        }
        return r;
    });

    cert.worst_residual.assign(n, -std::numeric_limits<double>::infinity());
    cert.max_inverse_norm.assign(n, 0.0);
    for (const auto& r : per_sample) {
        for (std::size_t i = 0; i < n; ++i) {
            cert.worst_residual[i] = std::max(cert.worst_residual[i], r.residual[i]);
            cert.max_inverse_norm[i] = std::max(cert.max_inverse_norm[i], r.inverse_norm[i]);
        }
    }
    cert.holds = !sample_points.empty() &&
                 std::all_of(cert.worst_residual.begin(), cert.worst_residual.end(), [](double v) { return v <= 1e-10; });
    if (cert.holds) {
        cert.inverse_bound_verified = true;
        for (std::size_t i = 0; i < n; ++i)
            if (cert.max_inverse_norm[i] > cert.inverse_bound[i] * (1.0 + 1e-12)) cert.inverse_bound_verified = false;
    }
    return cert;
}

DistanceBoundResult distance_bound_check(const SystemStack& stack, const ContractionCertificate& cert,
                                         const std::vector<Vector>& sample_points, const NewtonOptions& options) {
    DistanceBoundResult out;
    out.worst_ratio.assign(stack.size(), 0.0);
    for (const auto& x : sample_points) {
        for (std::size_t i = 0; i < stack.size(); ++i) {
            // x_i^s solves level i (and faster) with x_1..x_{i-1} fixed.
            const auto solved = steady_state_solve(stack, i, x, options);
            const double dist = (stack.block(x, i) - stack.block(solved.state, i)).norm();
            const double fr = reduced_field(stack, i, x, options).norm();
            const double allowed = cert.inverse_bound[i] * fr;
            if (dist == 0.0) continue;
            const double ratio = allowed > 0.0 ? dist / allowed : std::numeric_limits<double>::infinity();
            out.worst_ratio[i] = std::max(out.worst_ratio[i], ratio);
        }
    }
    out.holds = std::all_of(out.worst_ratio.begin(), out.worst_ratio.end(), [](double r) { return r <= 1.0 + 1e-9; });
    return out;
}

}  // namespace mts
