#include "mts/sensitivity.hpp"

#include "mts/errors.hpp"
#include "mts/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mts {

JacobianGrid JacobianGrid::from_full(const Matrix& jac, const std::vector<std::size_t>& dims) {
    std::vector<std::size_t> offsets;
    std::size_t total = 0;
    for (auto d : dims) {
        offsets.push_back(total);
        total += d;
    }
    if (static_cast<std::size_t>(jac.rows()) != total || static_cast<std::size_t>(jac.cols()) != total)
        throw InputError("jacobian shape does not match block dimensions");
    JacobianGrid grid;
    grid.blocks.resize(dims.size());
    for (std::size_t i = 0; i < dims.size(); ++i) {
        for (std::size_t j = 0; j < dims.size(); ++j) {
            grid.blocks[i].push_back(jac.block(offsets[i], offsets[j], dims[i], dims[j]));
        }
    }
    return grid;
}

SensitivityTable total_derivative_table(const Matrix& jacobian, const std::vector<std::size_t>& dims,
                                        const Vector& point) {
    const JacobianGrid grid = JacobianGrid::from_full(jacobian, dims);
    const std::size_t n = dims.size();
    SensitivityTable table;
    table.point = point;
    table.total.assign(n, std::vector<Matrix>(n));
    table.sens.assign(n, std::vector<Matrix>(n));

    // Column j is finished before column j-1 starts: D_{x_j} f_i needs
    // D_{x_k} f_i (k > j) and S_{x_j}^{x_k} (k > i), both already available
    // when i runs from N down to 1.
    for (std::size_t jj = n; jj-- > 0;) {
        for (std::size_t ii = n; ii-- > 0;) {
            Matrix d = grid(ii, jj);
            for (std::size_t k = std::max(ii, jj) + 1; k < n; ++k) d += table.total[ii][k] * table.sens[k][jj];
            table.total[ii][jj] = std::move(d);
            if (ii > jj) {
                // D_{x_i} f_i was completed in column i's pass.
                CheckedLu lu(table.total[ii][ii], ii + 1);
                table.sens[ii][jj] = -lu.solve(table.total[ii][jj]);
            }
        }
    }
    return table;
}

SensitivityTable total_derivative_table(const SystemStack& stack, const Vector& point) {
    return total_derivative_table(stack.jacobian(point), stack.dims(), point);
}

namespace {

Vector tail_residual(const SystemStack& stack, std::size_t level, const Vector& x) {
    const std::size_t start = stack.offset(level);
    const std::size_t len = stack.total_dim() - start;
    Vector r(len);
    for (std::size_t j = level; j < stack.size(); ++j) {
        Vector fj = stack.field(j, x);
        if (static_cast<std::size_t>(fj.size()) != stack.dim(j))
            throw DimensionError(j + 1, "field output has the wrong length");
        r.segment(stack.offset(j) - start, stack.dim(j)) = fj;
    }
    return r;
}

double max_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

[[noreturn]] void throw_singular_newton(const SystemStack& stack, std::size_t level, const Vector& x, double cond) {
    // Name the level whose total derivative breaks down, if the table can tell.
    try {
        total_derivative_table(stack, x);
    } catch (const SingularityError& e) {
        if (e.level() > level) throw;
    }
    throw SingularityError(level + 1, cond);
}

}  // namespace

SteadyStateResult steady_state_solve(const SystemStack& stack, std::size_t level, const Vector& state,
                                     const NewtonOptions& options) {
    if (level >= stack.size()) throw InputError("steady_state_solve: level out of range");
    if (static_cast<std::size_t>(state.size()) != stack.total_dim())
        throw InputError("steady_state_solve: state has the wrong length");
    const std::size_t start = stack.offset(level);
    const std::size_t len = stack.total_dim() - start;
    constexpr double eps = std::numeric_limits<double>::epsilon();

    Vector x = state;
    Vector r = tail_residual(stack, level, x);
    if (!r.allFinite()) throw EvaluationError("steady_state_solve: non-finite residual at the initial guess");
    double res = max_norm(r);
    for (int it = 0; it < options.max_iterations; ++it) {
        if (res <= options.tol) return {x, res, it};
        const Matrix jac = stack.jacobian(x).bottomRightCorner(len, len);
        Eigen::PartialPivLU<Matrix> lu(jac);
        const double rcond = lu.rcond();
        const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
        if (!(cond <= kSingularCondition) || !jac.allFinite()) throw_singular_newton(stack, level, x, cond);
        const Vector step = lu.solve(r);

        double lambda = 1.0;
        Vector trial = x;
        double trial_res = 0.0;
        bool improved = false;
        for (int halving = 0; halving < 30; ++halving) {
            trial.tail(len) = x.tail(len) - lambda * step;
            const Vector tr = tail_residual(stack, level, trial);
            trial_res = tr.allFinite() ? max_norm(tr) : std::numeric_limits<double>::infinity();
            if (trial_res < res) {
                improved = true;
                r = tr;
                break;
            }
            lambda *= 0.5;
        }
        const double step_size = max_norm(step);
        const bool rounding_level = step_size <= 8.0 * eps * (1.0 + max_norm(x.tail(len)));
        if (!improved) {
            // Residual is at its rounding floor for this problem.
            if (rounding_level) return {x, res, it};
            throw NonConvergenceError("steady_state_solve: damped Newton stalled", res);
        }
        x = trial;
        res = trial_res;
        if (rounding_level) return {x, res, it + 1};
    }
    if (res <= options.tol) return {x, res, options.max_iterations};
    throw NonConvergenceError("steady_state_solve: no convergence within " + std::to_string(options.max_iterations) +
                                  " iterations",
                              res);
}

Vector reduced_field(const SystemStack& stack, std::size_t level, const Vector& state, const NewtonOptions& options) {
    if (level >= stack.size()) throw InputError("reduced_field: level out of range");
    if (level + 1 == stack.size()) return stack.field(level, state);
    const auto solved = steady_state_solve(stack, level + 1, state, options);
    return stack.field(level, solved.state);
}

}  // namespace mts
