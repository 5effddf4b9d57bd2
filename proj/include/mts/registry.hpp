#pragma once

#include "mts/conditioning.hpp"
#include "mts/model.hpp"

#include <string>
#include <vector>

namespace mts {

struct BuiltinStack {
    std::string name;
    SystemStack stack;
    Vector initial_state;
    Vector equilibrium;
};

/// r2, tracking, linear3, cascade, rlc, bilevel-example. ConfigError otherwise.
BuiltinStack builtin_stack(const std::string& name);
const std::vector<std::string>& builtin_names();

/// plain | singular:<ε2,…,εN> | predsens | precond:<h1,…,hN> | approx:<frozen|noise:σ>
/// A leading ε1 = 1 in the singular list is accepted. `frozen` freezes Ŝ at
/// `reference`. ConfigError on malformed text or a dimension mismatch.
Scheme parse_scheme(const std::string& text, const SystemStack& stack, const Vector& reference);

/// Comma-separated reals.
std::vector<double> parse_real_list(const std::string& text);

}  // namespace mts
