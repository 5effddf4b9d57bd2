#include "mts/parallel.hpp"

#include "mts/errors.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <string>

#include <omp.h>

namespace mts::par {

int max_threads() { return omp_get_max_threads(); }

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& body, Execution exec) {
    if (exec == Execution::Serial || n < 2) {
        for (std::size_t k = 0; k < n; ++k) body(k);
        return;
    }
    std::exception_ptr first;
    std::size_t first_index = n;
    std::mutex guard;
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
    for (long long k = 0; k < count; ++k) {
        try {
            body(static_cast<std::size_t>(k));
        } catch (...) {
            std::lock_guard<std::mutex> lock(guard);
            // Report the lowest failing index so the error matches the serial run.
            if (static_cast<std::size_t>(k) < first_index) {
                first_index = static_cast<std::size_t>(k);
                first = std::current_exception();
            }
        }
    }
    if (first) std::rethrow_exception(first);
}

Matrix finite_difference_jacobian(const Field& field, const Vector& point, double step, Execution exec) {
    if (!(step > 0.0)) throw InputError("finite-difference step must be positive");
    const auto n = static_cast<std::size_t>(point.size());
    if (n == 0) return Matrix();
    std::vector<Vector> cols(n);
    for_each_index(
        n,
        [&](std::size_t k) {
            Vector x = point;
            const double h = step * (1.0 + std::abs(point[k]));
            x[k] = point[k] + h;
            Vector fp = field(x);
            x[k] = point[k] - h;
            Vector fm = field(x);
            if (!fp.allFinite() || !fm.allFinite())
                throw EvaluationError("non-finite field value while differencing coordinate " + std::to_string(k));
            cols[k] = (fp - fm) / (2.0 * h);
        },
        exec);
    Matrix jac(cols.front().size(), n);
    for (std::size_t k = 0; k < n; ++k) jac.col(k) = cols[k];
    return jac;
}

}  // namespace mts::par
