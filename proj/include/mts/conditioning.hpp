#pragma once

#include "mts/model.hpp"
#include "mts/sensitivity.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace mts {

// Lower-triangular sensitivity blocks: blocks[i][j] for j < i.
using SensitivityBlocks = std::vector<std::vector<Matrix>>;

namespace scheme {

struct Plain {};

/// ε_1 = 1 ≥ ε_2 ≥ ... ≥ ε_N > 0; level i is accelerated by 1/ε_i.
struct SingularPerturbation {
    std::vector<double> eps;
};

struct PredictiveSensitivity {};

/// H_i per level; a 1×1 matrix stands for the scalar h_i · I.
struct Preconditioned {
    std::vector<Matrix> gains;
};

/// Predictive-sensitivity with an approximate Ŝ from a user provider.
struct ApproximateSensitivity {
    std::function<SensitivityBlocks(const SystemStack&, const Vector&)> provider;
    std::string label = "approx";
};

}  // namespace scheme

using Scheme = std::variant<scheme::Plain, scheme::SingularPerturbation, scheme::PredictiveSensitivity,
                            scheme::Preconditioned, scheme::ApproximateSensitivity>;

std::string scheme_name(const Scheme& s);

/// Checks ε positivity/monotonicity, gain invertibility and dimensions.
void validate_scheme(const SystemStack& stack, const Scheme& s);

/// Ŝ frozen at the exact sensitivities of `reference`.
scheme::ApproximateSensitivity frozen_sensitivity(const SystemStack& stack, const Vector& reference);

/// Ŝ = S + σ·E with E a fixed matrix per block, entries uniform in [-1, 1]
/// drawn once from `seed`; deterministic in the state.
scheme::ApproximateSensitivity noisy_sensitivity(const SystemStack& stack, double sigma, std::uint64_t seed = 7);

/// ẋ solving M(x) ẋ = f(x), computed by block forward substitution:
///   ẋ_i = H_i f_i + Σ_{j<i} S_{x_j}^{x_i} ẋ_j
/// with H_i = I and S = 0 for the plain scheme, H_i = 1/ε_i for singular
/// perturbation, S exact or approximate for the predictive schemes.
Vector conditioned_field(const SystemStack& stack, const Scheme& s, const Vector& state);

/// Same, reusing an already computed table (and raw field).
Vector conditioned_field(const SystemStack& stack, const Scheme& s, const Vector& state, const Vector& raw_field,
                         const SensitivityTable* table);

struct ConditioningMatrix {
    Matrix M;
    std::vector<std::size_t> dims;
    SensitivityBlocks sens;        // the S or Ŝ used (empty for diagonal schemes)
    std::vector<Matrix> gains;     // H_i per level (identity for plain/predictive)

    /// M^{-1} f by forward substitution.
    Vector solve(const Vector& f) const;
    /// M^{-1} as an explicit matrix (column-wise forward substitution).
    Matrix inverse() const;
};

ConditioningMatrix conditioning_matrix(const SystemStack& stack, const Scheme& s, const Vector& state);

/// x_{k+1} = x_k + M^{-1} f(x_k). Step size is expected to be folded into the
/// fields (see scale_stack).
Vector discrete_step(const SystemStack& stack, const Scheme& s, const Vector& state);

}  // namespace mts
