#pragma once

#include "mts/casestudies.hpp"
#include "mts/linalg.hpp"
#include "mts/model.hpp"

#include <random>
#include <vector>

namespace mts::testing {

inline Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index k = 0;
    for (double x : v) out[k++] = x;
    return out;
}

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index r = 0;
    for (const auto& row : rows) {
        Eigen::Index c = 0;
        for (double x : row) m(r, c++) = x;
        ++r;
    }
    return m;
}

inline Vector uniform_point(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vector x(n);
    for (Eigen::Index k = 0; k < n; ++k) x[k] = u(rng);
    return x;
}

/// Random linear stack, N ∈ {2, 3}, block sizes 1..3, entries in [-1, 1],
/// diagonal blocks shifted by -3I.
inline LinearStackConfig random_linear_config(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> levels(2, 3), size(1, 3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    LinearStackConfig c;
    const int n = levels(rng);
    for (int i = 0; i < n; ++i) c.dims.push_back(static_cast<std::size_t>(size(rng)));
    for (int i = 0; i < n; ++i) {
        std::vector<Matrix> row;
        for (int j = 0; j < n; ++j) {
            Matrix b(c.dims[i], c.dims[j]);
            for (Eigen::Index r = 0; r < b.rows(); ++r)
                for (Eigen::Index k = 0; k < b.cols(); ++k) b(r, k) = u(rng);
            if (i == j) b -= 3.0 * Matrix::Identity(b.rows(), b.cols());
            row.push_back(std::move(b));
        }
        c.blocks.push_back(std::move(row));
    }
    return c;
}

inline std::size_t total_dim(const LinearStackConfig& c) {
    std::size_t n = 0;
    for (auto d : c.dims) n += d;
    return n;
}

}  // namespace mts::testing
