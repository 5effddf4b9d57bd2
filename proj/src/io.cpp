#include "mts/io.hpp"

#include "mts/errors.hpp"

#include <cstdio>
#include <ostream>

namespace mts::io {

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Json to_json(const Spectrum& s) {
    Json out = Json::array();
    for (const auto& z : s) out.push_back({z.real(), z.imag()});
    return out;
}

Json to_json(const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

namespace {

Json vector_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v[k]);
    return out;
}

template <class T>
Json optional_json(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

}  // namespace

Json to_json(const StabilityReport& r) {
    Json blocks = Json::array();
    for (const auto& b : r.block_eigenvalues) blocks.push_back(to_json(b));
    Json j{{"scheme", r.scheme},
           {"verdict", to_string(r.verdict)},
           {"spectral_abscissa", r.spectral_abscissa},
           {"eigenvalues", to_json(r.eigenvalues)},
           {"block_eigenvalues", std::move(blocks)}};
    if (r.block_check_applies) {
        j["blocks_match"] = r.blocks_match;
        j["block_mismatch"] = r.block_mismatch;
    }
    return j;
}

Json to_json(const CascadeMatrices& m) {
    return Json{{"A", to_json(m.A)},
                {"B", vector_json(m.B)},
                {"T", to_json(m.T)},
                {"TA", to_json(m.TA)},
                {"A_tilde", to_json(m.A_tilde)},
                {"S", to_json(m.S)},
                {"S_row", {m.S_row[0], m.S_row[1]}},
                {"eig_A", to_json(sorted_spectrum(eigenvalues(m.A)))},
                {"eig_TA", to_json(sorted_spectrum(eigenvalues(m.TA)))}};
}

Json to_json(const BlackStartMetrics& m) {
    return Json{{"overshoot_pu", m.overshoot_pu},
                {"settling_time_s", optional_json(m.settling_time_s)},
                {"frequency_settling_time_s", optional_json(m.frequency_settling_time_s)},
                {"stable", m.stable},
                {"divergence_time_s", optional_json(m.divergence_time_s)},
                {"final_voltage_pu", m.final_voltage_pu},
                {"final_frequency_hz", m.final_frequency_hz},
                {"samples", m.time_s.size()}};
}

Json to_json(const PointClassification& c) {
    Json j{{"stationary", c.stationary},
           {"lower_hessian_min_eig", c.lower_hessian_min_eig},
           {"verdict", to_string(c.verdict)}};
    if (c.reduced_hessian.size() > 0) {
        j["reduced_hessian"] = to_json(c.reduced_hessian);
        j["reduced_hessian_min_eig"] = c.reduced_hessian_min_eig;
    }
    return j;
}

Json trajectory_summary(const Trajectory& t) {
    Json j{{"diverged", t.diverged},
           {"divergence_time", optional_json(t.divergence_time)},
           {"samples", t.size()}};
    if (!t.times.empty()) {
        j["t_final"] = t.times.back();
        j["final_state"] = vector_json(t.states.back());
        j["final_max_norm"] = t.states.back().lpNorm<Eigen::Infinity>();
    }
    return j;
}

Json iterate_summary(const IterateLog& log) {
    Json j{{"converged", log.converged},
           {"diverged", log.diverged},
           {"iterations_used", log.iterations_used},
           {"iterates", log.size()}};
    if (log.size() > 0) {
        j["final_residual"] = log.residuals.back();
        j["final_x1"] = vector_json(log.x1.back());
        j["final_x2"] = vector_json(log.x2.back());
    }
    return j;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& t) {
    os << "t";
    for (std::size_t i = 0; i < t.dims.size(); ++i)
        for (std::size_t c = 0; c < t.dims[i]; ++c) os << ",x" << i + 1 << "_" << c + 1;
    os << "\n";
    for (std::size_t k = 0; k < t.size(); ++k) {
        os << format_number(t.times[k]);
        const auto& x = t.states[k];
        for (Eigen::Index c = 0; c < x.size(); ++c) os << ',' << format_number(x[c]);
        os << "\n";
    }
}

void write_black_start_csv(std::ostream& os, const Trajectory& t, const BlackStartMetrics& m) {
    os << "t,v_re,v_im,zeta_v_re,zeta_v_im,i_re,i_im,zeta_i_re,zeta_i_im,v_mag_pu,freq_hz\n";
    for (std::size_t k = 0; k < t.size(); ++k) {
        os << format_number(t.times[k]);
        const auto& x = t.states[k];
        for (Eigen::Index c = 0; c < x.size(); ++c) os << ',' << format_number(x[c]);
        os << ',' << format_number(m.voltage_magnitude_pu.at(k)) << ',' << format_number(m.frequency_hz.at(k))
           << "\n";
    }
}

void write_iterate_csv(std::ostream& os, const IterateLog& log) {
    os << "iter";
    const auto n1 = log.x1.empty() ? 0 : log.x1.front().size();
    const auto n2 = log.x2.empty() ? 0 : log.x2.front().size();
    for (Eigen::Index c = 0; c < n1; ++c) os << ",x1_" << c + 1;
    for (Eigen::Index c = 0; c < n2; ++c) os << ",x2_" << c + 1;
    os << ",residual\n";
    for (std::size_t k = 0; k < log.size(); ++k) {
        os << k;
        for (Eigen::Index c = 0; c < n1; ++c) os << ',' << format_number(log.x1[k][c]);
        for (Eigen::Index c = 0; c < n2; ++c) os << ',' << format_number(log.x2[k][c]);
        os << ',' << format_number(log.residuals[k]) << "\n";
    }
}

namespace {

std::string where(std::size_t i, std::size_t j) {
    return "blocks[" + std::to_string(i) + "][" + std::to_string(j) + "]";
}

double number_at(const Json& j, const std::string& ctx) {
    if (!j.is_number()) throw ConfigError(ctx + " must be a number");
    return j.get<double>();
}

Matrix parse_matrix(const Json& j, std::size_t rows, std::size_t cols, const std::string& ctx) {
    if (j.is_number()) {
        if (rows != 1 || cols != 1)
            throw ConfigError(ctx + " is a scalar but must be " + std::to_string(rows) + "x" + std::to_string(cols));
        return Matrix::Constant(1, 1, j.get<double>());
    }
    if (!j.is_array() || j.size() != rows)
        throw ConfigError(ctx + " must be an array of " + std::to_string(rows) + " rows");
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto& row = j[r];
        if (row.is_number() && cols == 1) {
            m(r, 0) = row.get<double>();
            continue;
        }
        if (!row.is_array() || row.size() != cols)
            throw ConfigError(ctx + " row " + std::to_string(r) + " must have " + std::to_string(cols) +
                              " entries (ragged matrix)");
        for (std::size_t c = 0; c < cols; ++c)
            m(r, c) = number_at(row[c], ctx + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
    return m;
}

Vector parse_vector(const Json& j, std::size_t n, const std::string& ctx) {
    if (j.is_number()) {
        if (n != 1) throw ConfigError(ctx + " is a scalar but must have length " + std::to_string(n));
        return Vector::Constant(1, j.get<double>());
    }
    if (!j.is_array() || j.size() != n) throw ConfigError(ctx + " must have length " + std::to_string(n));
    Vector v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = number_at(j[k], ctx + "[" + std::to_string(k) + "]");
    return v;
}

}  // namespace

LinearStackConfig parse_linear_config(const Json& j) {
    if (!j.is_object()) throw ConfigError("linear stack config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (key != "dims" && key != "blocks" && key != "offsets")
            throw ConfigError("unknown linear stack key '" + key + "'");
    if (!j.contains("dims") || !j["dims"].is_array() || j["dims"].empty())
        throw ConfigError("linear stack config needs a non-empty 'dims' array");
    LinearStackConfig c;
    for (std::size_t i = 0; i < j["dims"].size(); ++i) {
        const auto& d = j["dims"][i];
        if (!d.is_number_integer() || d.get<long long>() <= 0)
            throw ConfigError("dims[" + std::to_string(i) + "] must be a positive integer");
        c.dims.push_back(d.get<std::size_t>());
    }
    const auto n = c.dims.size();
    if (!j.contains("blocks") || !j["blocks"].is_array() || j["blocks"].size() != n)
        throw ConfigError("'blocks' must have " + std::to_string(n) + " rows of matrices");
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = j["blocks"][i];
        if (!row.is_array() || row.size() != n)
            throw ConfigError("blocks[" + std::to_string(i) + "] must have " + std::to_string(n) + " matrices");
        std::vector<Matrix> mats;
        for (std::size_t jj = 0; jj < n; ++jj) mats.push_back(parse_matrix(row[jj], c.dims[i], c.dims[jj], where(i, jj)));
        c.blocks.push_back(std::move(mats));
    }
    if (j.contains("offsets")) {
        const auto& off = j["offsets"];
        if (!off.is_array() || off.size() != n)
            throw ConfigError("'offsets' must have " + std::to_string(n) + " entries");
        for (std::size_t i = 0; i < n; ++i)
            c.offsets.push_back(parse_vector(off[i], c.dims[i], "offsets[" + std::to_string(i) + "]"));
    }
    validate_linear_config(c);
    return c;
}

SystemStack parse_linear_stack(const Json& j) { return linear_stack(parse_linear_config(j)); }

Json to_json(const LinearStackConfig& c) {
    Json blocks = Json::array();
    for (const auto& row : c.blocks) {
        Json r = Json::array();
        for (const auto& m : row) r.push_back(m.size() == 1 ? Json(m(0, 0)) : to_json(m));
        blocks.push_back(std::move(r));
    }
    Json j{{"dims", c.dims}, {"blocks", std::move(blocks)}};
    if (!c.offsets.empty()) {
        Json off = Json::array();
        for (const auto& v : c.offsets) off.push_back(v.size() == 1 ? Json(v[0]) : vector_json(v));
        j["offsets"] = std::move(off);
    }
    return j;
}

void write_json(std::ostream& os, const Json& j) { os << j.dump(2) << "\n"; }

}  // namespace mts::io
