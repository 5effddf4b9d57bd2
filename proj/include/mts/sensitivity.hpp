#pragma once

#include "mts/model.hpp"

#include <cstddef>
#include <vector>

namespace mts {

/// Partial-derivative blocks ∇_{x_j} f_i at one point (0-based i, j).
struct JacobianGrid {
    std::vector<std::vector<Matrix>> blocks;

    static JacobianGrid from_full(const Matrix& jac, const std::vector<std::size_t>& dims);
    const Matrix& operator()(std::size_t i, std::size_t j) const { return blocks.at(i).at(j); }
};

/// Extended total derivatives D_{x_j} f_i for every (i, j) and extended
/// sensitivities S_{x_j}^{x_i} for j < i, evaluated at `point`.
struct SensitivityTable {
    std::vector<std::vector<Matrix>> total;  // total[i][j] = D_{x_j} f_i
    std::vector<std::vector<Matrix>> sens;   // sens[i][j] = S_{x_j}^{x_i}, filled for j < i
    Vector point;

    const Matrix& D(std::size_t i, std::size_t j) const { return total.at(i).at(j); }
    const Matrix& S(std::size_t i, std::size_t j) const { return sens.at(i).at(j); }
    std::size_t levels() const noexcept { return total.size(); }
};

/// Runs the recursion from the fastest level down to the slowest:
///   D_{x_N} f_i = ∇_{x_N} f_i
///   D_{x_j} f_i = ∇_{x_j} f_i + Σ_{k>max(i,j)} D_{x_k} f_i S_{x_j}^{x_k}
///   S_{x_j}^{x_i} = -(D_{x_i} f_i)^{-1} D_{x_j} f_i,  j < i
/// Throws SingularityError (1-based level) if some D_{x_i} f_i, i > 1, has a
/// condition estimate above 1e12.
SensitivityTable total_derivative_table(const SystemStack& stack, const Vector& point);

/// Same recursion on an already assembled full Jacobian.
SensitivityTable total_derivative_table(const Matrix& jacobian, const std::vector<std::size_t>& dims,
                                        const Vector& point = Vector());

struct NewtonOptions {
    double tol = 1e-12;
    int max_iterations = 100;
};

struct SteadyStateResult {
    Vector state;      // full stacked state with levels >= `level` solved
    double residual;   // max-norm of (f_level, ..., f_N) at `state`
    int iterations;
};

/// Solves f_j = 0 for all levels j >= `level` (0-based) in the unknowns
/// x_level..x_N, keeping x_1..x_{level-1} fixed at their values in `state`.
/// The remaining blocks of `state` are the initial guess. Damped Newton with
/// step halving on residual increase.
SteadyStateResult steady_state_solve(const SystemStack& stack, std::size_t level, const Vector& state,
                                     const NewtonOptions& options = {});

/// f_level evaluated with the downstream levels at their steady states.
/// Levels below `level+1` are taken from `state`; faster blocks of `state`
/// serve as the Newton guess.
Vector reduced_field(const SystemStack& stack, std::size_t level, const Vector& state,
                     const NewtonOptions& options = {});

}  // namespace mts
