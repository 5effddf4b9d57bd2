#pragma once

#include "mts/model.hpp"

#include <cstddef>
#include <functional>
#include <vector>

// OpenMP-backed loops over independent work items. Every parallel routine has
// a serial twin that computes the same thing in the same order per item, so
// results are bitwise identical and the serial path doubles as the test oracle.
namespace mts::par {

enum class Execution { Serial, Parallel };

/// Runs body(k) for k in [0, n). The first exception thrown by any item is
/// rethrown after the loop.
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& body,
                    Execution exec = Execution::Parallel);

int max_threads();

template <class In, class Fn>
auto map_points(const std::vector<In>& items, Fn&& fn, Execution exec = Execution::Parallel) {
    using Out = decltype(fn(items.front()));
    std::vector<Out> out(items.size());
    for_each_index(
        items.size(), [&](std::size_t k) { out[k] = fn(items[k]); }, exec);
    return out;
}

/// Central-difference Jacobian with columns computed concurrently. Same
/// formula as mts::finite_difference_jacobian.
Matrix finite_difference_jacobian(const Field& field, const Vector& point, double step = kDefaultFdStep,
                                  Execution exec = Execution::Parallel);

}  // namespace mts::par
