#include "mts/integrate.hpp"

#include "mts/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mts {

Trajectory integrate_field(const VectorField& field, const Vector& x0, const IntegrationSettings& settings,
                           std::vector<std::size_t> dims) {
    if (!(settings.dt > 0.0) || !(settings.t_end > 0.0)) throw InputError("dt and t_end must be positive");
    if (settings.dt > settings.t_end) throw InputError("dt must not exceed t_end");
    if (!x0.allFinite()) throw InputError("initial state is not finite");
    if (settings.record_every < 1) throw InputError("record_every must be at least 1");
    if (dims.empty()) dims.push_back(static_cast<std::size_t>(x0.size()));

    const auto steps = static_cast<std::size_t>(std::llround(settings.t_end / settings.dt));
    const double dt = settings.dt;
    Trajectory traj;
    traj.dims = std::move(dims);
    const auto stride = static_cast<std::size_t>(settings.record_every);
    traj.times.reserve(steps / stride + 2);
    traj.states.reserve(steps / stride + 2);
    traj.times.push_back(0.0);
    traj.states.push_back(x0);

    auto eval = [&](const Vector& x, double t) -> Vector {
        try {
            return field(x);
        } catch (const IntegrationError&) {
            throw;
        } catch (const Error& e) {
            throw IntegrationError(t, e.what());
        }
    };

    Vector x = x0;
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        if (settings.method == Method::ExplicitEuler) {
            x += dt * eval(x, t);
        } else {
            const Vector k1 = eval(x, t);
            const Vector k2 = eval(x + 0.5 * dt * k1, t + 0.5 * dt);
            const Vector k3 = eval(x + 0.5 * dt * k2, t + 0.5 * dt);
            const Vector k4 = eval(x + dt * k3, t + dt);
            x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        const double t_next = static_cast<double>(k + 1) * dt;
        const bool blew_up = !x.allFinite() || x.lpNorm<Eigen::Infinity>() > settings.divergence_threshold ||
                             (settings.diverged_if && settings.diverged_if(x));
        if ((k + 1) % stride == 0 || k + 1 == steps || blew_up) {
            traj.times.push_back(t_next);
            traj.states.push_back(x);
        }
        if (blew_up) {
            traj.diverged = true;
            traj.divergence_time = t_next;
            break;
        }
    }
    return traj;
}

Trajectory integrate_ode(const SystemStack& stack, const Scheme& scheme, const Vector& x0,
                         const IntegrationSettings& settings) {
    if (static_cast<std::size_t>(x0.size()) != stack.total_dim())
        throw InputError("initial state has " + std::to_string(x0.size()) + " entries, expected " +
                         std::to_string(stack.total_dim()));
    validate_scheme(stack, scheme);
    return integrate_field([&](const Vector& x) { return conditioned_field(stack, scheme, x); }, x0, settings,
                           stack.dims());
}

double ManifoldErrorSeries::max_error() const {
    double m = 0.0;
    for (const auto& row : error)
        for (const auto& e : row)
            if (e) m = std::max(m, *e);
    return m;
}

std::size_t ManifoldErrorSeries::missing() const {
    std::size_t count = 0;
    for (const auto& row : error)
        for (const auto& e : row)
            if (!e) ++count;
    return count;
}

ManifoldErrorSeries manifold_error(const SystemStack& stack, const Trajectory& trajectory, std::size_t first_level,
                                   const NewtonOptions& options) {
    if (first_level >= stack.size()) throw InputError("manifold_error: level out of range");
    ManifoldErrorSeries series;
    series.first_level = first_level;
    series.error.reserve(trajectory.size());
    // One warm start per level: the solved tail from the previous sample.
    std::vector<std::optional<Vector>> warm(stack.size());
    for (const auto& x : trajectory.states) {
        std::vector<std::optional<double>> row;
        for (std::size_t i = first_level; i < stack.size(); ++i) {
            Vector guess = x;
            if (warm[i]) guess.tail(stack.total_dim() - stack.offset(i)) = warm[i]->tail(stack.total_dim() - stack.offset(i));
            try {
                const auto solved = steady_state_solve(stack, i, guess, options);
                warm[i] = solved.state;
                row.emplace_back((stack.block(x, i) - stack.block(solved.state, i)).norm());
            } catch (const NumericalError&) {
                warm[i].reset();
                row.emplace_back(std::nullopt);
            }
        }
        series.error.push_back(std::move(row));
    }
    return series;
}

}  // namespace mts
