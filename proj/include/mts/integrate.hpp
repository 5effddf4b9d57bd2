#pragma once

#include "mts/conditioning.hpp"
#include "mts/model.hpp"
#include "mts/sensitivity.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace mts {

enum class Method { ExplicitEuler, RK4 };

struct IntegrationSettings {
    Method method = Method::RK4;
    double dt = 1e-3;
    double t_end = 1.0;
    double divergence_threshold = 1e6;  // on the max-norm of the state
    int record_every = 1;               // keep every k-th step (the last step is always kept)
    // Extra divergence criterion (e.g. a magnitude limit on one block).
    std::function<bool(const Vector&)> diverged_if;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<std::size_t> dims;
    bool diverged = false;
    std::optional<double> divergence_time;

    std::size_t size() const noexcept { return times.size(); }
    StatePoint point(std::size_t k) const { return StatePoint::split(states.at(k), dims); }
};

using VectorField = std::function<Vector(const Vector&)>;

/// Fixed-step integration of ẋ = field(x) from x0, sampled every dt up to
/// t_end. Stops early with diverged=true when the state leaves the
/// threshold or turns non-finite. Field errors are rethrown as
/// IntegrationError carrying the failing time.
Trajectory integrate_field(const VectorField& field, const Vector& x0, const IntegrationSettings& settings,
                           std::vector<std::size_t> dims = {});

/// integrate_field on conditioned_field(stack, scheme, ·).
Trajectory integrate_ode(const SystemStack& stack, const Scheme& scheme, const Vector& x0,
                         const IntegrationSettings& settings);

struct ManifoldErrorSeries {
    std::size_t first_level = 0;  // 0-based level p
    // error[k][i - first_level] is ‖x_i(t_k) - x_i^s(x_1(t_k), ..., x_{i-1}(t_k))‖,
    // empty when the steady-state solve failed at that sample.
    std::vector<std::vector<std::optional<double>>> error;

    /// Largest available entry, all levels and samples.
    double max_error() const;
    std::size_t missing() const;
};

/// Distance of each trajectory sample from the steady-state manifold for
/// every level >= `first_level` (0-based). Newton is warm-started from the
/// previous sample's solution.
ManifoldErrorSeries manifold_error(const SystemStack& stack, const Trajectory& trajectory, std::size_t first_level,
                                   const NewtonOptions& options = {});

}  // namespace mts
