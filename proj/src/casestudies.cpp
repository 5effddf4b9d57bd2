#include "mts/casestudies.hpp"

#include "mts/errors.hpp"
#include "mts/linalg.hpp"

#include <cmath>
#include <numbers>

namespace mts {

// ---- linear stacks -------------------------------------------------------

bool LinearStackConfig::operator==(const LinearStackConfig& other) const {
    if (dims != other.dims || blocks.size() != other.blocks.size() || offsets.size() != other.offsets.size())
        return false;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].size() != other.blocks[i].size()) return false;
        for (std::size_t j = 0; j < blocks[i].size(); ++j) {
            const auto& a = blocks[i][j];
            const auto& b = other.blocks[i][j];
            if (a.rows() != b.rows() || a.cols() != b.cols() || a != b) return false;
        }
    }
    for (std::size_t i = 0; i < offsets.size(); ++i)
        if (offsets[i].size() != other.offsets[i].size() || offsets[i] != other.offsets[i]) return false;
    return true;
}

void validate_linear_config(const LinearStackConfig& config) {
    const auto n = config.dims.size();
    if (n == 0) throw ConfigError("linear stack needs at least one level");
    for (std::size_t i = 0; i < n; ++i)
        if (config.dims[i] == 0) throw ConfigError("dims[" + std::to_string(i) + "] must be positive");
    if (config.blocks.size() != n) throw ConfigError("blocks must have one row per level");
    for (std::size_t i = 0; i < n; ++i) {
        if (config.blocks[i].size() != n)
            throw ConfigError("blocks[" + std::to_string(i) + "] must have one matrix per level");
        for (std::size_t j = 0; j < n; ++j) {
            const auto& b = config.blocks[i][j];
            if (static_cast<std::size_t>(b.rows()) != config.dims[i] ||
                static_cast<std::size_t>(b.cols()) != config.dims[j])
                throw ConfigError("blocks[" + std::to_string(i) + "][" + std::to_string(j) + "] must be " +
                                  std::to_string(config.dims[i]) + "x" + std::to_string(config.dims[j]));
            if (!b.allFinite())
                throw ConfigError("blocks[" + std::to_string(i) + "][" + std::to_string(j) + "] is not finite");
        }
    }
    if (!config.offsets.empty()) {
        if (config.offsets.size() != n) throw ConfigError("offsets must have one vector per level");
        for (std::size_t i = 0; i < n; ++i)
            if (static_cast<std::size_t>(config.offsets[i].size()) != config.dims[i])
                throw ConfigError("offsets[" + std::to_string(i) + "] must have length " +
                                  std::to_string(config.dims[i]));
    }
}

SystemStack linear_stack(const LinearStackConfig& config) {
    validate_linear_config(config);
    const auto n = config.dims.size();
    std::size_t total = 0;
    for (auto d : config.dims) total += d;
    std::vector<Subsystem> subs;
    for (std::size_t i = 0; i < n; ++i) {
        Matrix rows(config.dims[i], total);
        Eigen::Index col = 0;
        for (std::size_t j = 0; j < n; ++j) {
            rows.middleCols(col, config.dims[j]) = config.blocks[i][j];
            col += static_cast<Eigen::Index>(config.dims[j]);
        }
        const Vector c = config.offsets.empty() ? Vector::Zero(config.dims[i]) : config.offsets[i];
        Subsystem s;
        s.dim = config.dims[i];
        s.name = "level" + std::to_string(i + 1);
        s.field = [rows, c](const Vector& x) -> Vector { return rows * x + c; };
        s.jacobian = [rows](const Vector&) -> Matrix { return rows; };
        subs.push_back(std::move(s));
    }
    return SystemStack(std::move(subs));
}

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

LinearStackConfig scalar_config(const std::vector<std::vector<double>>& a) {
    LinearStackConfig c;
    c.dims.assign(a.size(), 1);
    for (const auto& row : a) {
        std::vector<Matrix> blocks;
        for (double v : row) blocks.push_back(scalar(v));
        c.blocks.push_back(std::move(blocks));
    }
    return c;
}

}  // namespace

LinearStackConfig r2_config() { return scalar_config({{1.0, -2.0}, {0.5, -0.5}}); }
LinearStackConfig tracking_config() { return scalar_config({{-1.0, 0.0}, {1.0, -1.0}}); }
LinearStackConfig linear3_config() { return scalar_config({{-1.0, 1.0, 1.0}, {1.0, -2.0, 1.0}, {1.0, 1.0, -3.0}}); }

// ---- cascade PI ----------------------------------------------------------

std::string to_string(FeedForward ff) {
    switch (ff) {
        case FeedForward::State: return "state";
        case FeedForward::Reference: return "reference";
        case FeedForward::None: return "none";
    }
    return "state";
}

void validate(const CascadeParams& p) {
    if (p.b1 == 0.0 || p.b2 == 0.0) throw InputError("cascade plant gains b1, b2 must be nonzero");
    for (double v : {p.a1, p.b1, p.a2, p.b2, p.kp1, p.ki1, p.kp2, p.ki2, p.x1_ref})
        if (!std::isfinite(v)) throw InputError("cascade parameters must be finite");
}

bool cascade_separated_loops_stable(const CascadeParams& p) {
    switch (p.feed_forward) {
        case FeedForward::State: return p.kp1 > 0 && p.ki1 > 0 && p.kp2 > 0 && p.ki2 > 0;
        case FeedForward::Reference: return p.kp1 > p.a1 && p.ki1 > 0 && p.kp2 > p.a2 && p.ki2 > 0;
        case FeedForward::None:
            return p.a1 - p.b1 * p.kp1 < 0 && p.ki1 > 0 && p.a2 - p.b2 * p.kp2 < 0 && p.ki2 > 0;
    }
    return false;
}

namespace {

// Outer reference x2^r = px x1 + pz ζ1 + pr x1^r and inner law
// ẋ2 = kself x2 + kerr (x2 - x2^r) + kint ζ2.
struct CascadeLaws {
    double px, pz, pr;
    double kself, kerr, kint;
};

CascadeLaws cascade_laws(const CascadeParams& p) {
    CascadeLaws c{};
    switch (p.feed_forward) {
        case FeedForward::State:
            c = {-(p.a1 + p.kp1) / p.b1, -p.ki1 / p.b1, p.kp1 / p.b1, 0.0, -p.kp2, -p.ki2};
            break;
        case FeedForward::Reference:
            c = {-p.kp1 / p.b1, -p.ki1 / p.b1, (p.kp1 - p.a1) / p.b1, 0.0, p.a2 - p.kp2, -p.ki2};
            break;
        case FeedForward::None:
            c = {-p.kp1, -p.ki1, p.kp1, p.a2, -p.b2 * p.kp2, -p.b2 * p.ki2};
            break;
    }
    return c;
}

}  // namespace

CascadeMatrices cascade_matrices(const CascadeParams& p) {
    validate(p);
    const auto c = cascade_laws(p);
    if (c.kint == 0.0) throw InputError("cascade inner integral gain must be nonzero");
    CascadeMatrices m;
    m.A.resize(4, 4);
    m.A << p.a1, 0.0, p.b1, 0.0,                           //
        1.0, 0.0, 0.0, 0.0,                                //
        -c.kerr * c.px, -c.kerr * c.pz, c.kself + c.kerr, c.kint,  //
        -c.px, -c.pz, 1.0, 0.0;
    m.B.resize(4);
    m.B << 0.0, -1.0, -c.kerr * c.pr, -c.pr;
    m.S.resize(2, 2);
    m.S << c.px, c.pz,  //
        -c.kself / c.kint * c.px, -c.kself / c.kint * c.pz;
    m.S_row = m.S.row(0);
    m.T = Matrix::Identity(4, 4);
    m.T.block(2, 0, 2, 2) = m.S;
    m.TA = m.T * m.A;
    Matrix t_inv = Matrix::Identity(4, 4);
    t_inv.block(2, 0, 2, 2) = -m.S;
    m.A_tilde = t_inv * m.TA * m.T;
    return m;
}

SystemStack cascade_stack(const CascadeParams& p) {
    const auto m = cascade_matrices(p);
    LinearStackConfig c;
    c.dims = {2, 2};
    c.blocks = {{m.A.block(0, 0, 2, 2), m.A.block(0, 2, 2, 2)}, {m.A.block(2, 0, 2, 2), m.A.block(2, 2, 2, 2)}};
    const Vector b = m.B * p.x1_ref;
    c.offsets = {b.head(2), b.tail(2)};
    return linear_stack(c);
}

Vector cascade_equilibrium(const CascadeParams& p) {
    const auto m = cascade_matrices(p);
    const CheckedLu lu(m.A, 1);
    return lu.solve(Vector(-m.B * p.x1_ref));
}

// ---- DC/AC converter with RLC filter -------------------------------------

RlcParams RlcParams::table(double kpi, double kii) {
    RlcParams p;
    p.kpi = kpi;
    p.kii = kii;
    return p;
}

void validate(const RlcParams& p) {
    if (!(p.R > 0.0) || !(p.L > 0.0) || !(p.C > 0.0) || !(p.omega >= 0.0))
        throw InputError("RLC parameters need R, L, C > 0 and omega >= 0");
    if (!p.v_ref.allFinite() || !std::isfinite(p.kpv) || !std::isfinite(p.kiv) || !std::isfinite(p.kpi) ||
        !std::isfinite(p.kii))
        throw InputError("RLC parameters must be finite");
}

namespace {

const Eigen::Matrix2d kRot = (Eigen::Matrix2d() << 0.0, -1.0, 1.0, 0.0).finished();

}  // namespace

Eigen::Vector2d rlc_current_reference(const RlcParams& p, const Vector& x) {
    const Eigen::Vector2d v = x.segment<2>(0), zv = x.segment<2>(2);
    return p.omega * p.C * (kRot * v) + p.C * (-p.kpv * (v - p.v_ref) - p.kiv * zv);
}

Eigen::Vector2d rlc_modulation_voltage(const RlcParams& p, const Vector& x) {
    const Eigen::Vector2d v = x.segment<2>(0), i = x.segment<2>(4), zi = x.segment<2>(6);
    const Eigen::Vector2d ir = rlc_current_reference(p, x);
    const Eigen::Matrix2d z = p.R * Eigen::Matrix2d::Identity() + p.omega * p.L * kRot;
    return z * i + v + p.L * (-p.kpi * (i - ir) - p.kii * zi);
}

SystemStack rlc_stack(const RlcParams& p) {
    validate(p);
    const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
    const Eigen::Matrix2d dir_dv = p.omega * p.C * kRot - p.C * p.kpv * I;
    const Eigen::Matrix2d dir_dzv = -p.C * p.kiv * I;

    Subsystem outer;
    outer.dim = 4;
    outer.name = "voltage";
    outer.field = [p](const Vector& x) -> Vector {
        Vector f(4);
        f.head<2>() = x.segment<2>(4) / p.C - p.omega * (kRot * x.segment<2>(0));
        f.tail<2>() = x.segment<2>(0) - p.v_ref;
        return f;
    };
    Matrix j1 = Matrix::Zero(4, 8);
    j1.block<2, 2>(0, 0) = -p.omega * kRot;
    j1.block<2, 2>(0, 4) = I / p.C;
    j1.block<2, 2>(2, 0) = I;
    outer.jacobian = [j1](const Vector&) -> Matrix { return j1; };

    Subsystem inner;
    inner.dim = 4;
    inner.name = "current";
    inner.field = [p](const Vector& x) -> Vector {
        const Eigen::Vector2d err = x.segment<2>(4) - rlc_current_reference(p, x);
        Vector f(4);
        f.head<2>() = -p.kpi * err - p.kii * x.segment<2>(6);
        f.tail<2>() = err;
        return f;
    };
    Matrix j2 = Matrix::Zero(4, 8);
    j2.block<2, 2>(0, 0) = p.kpi * dir_dv;
    j2.block<2, 2>(0, 2) = p.kpi * dir_dzv;
    j2.block<2, 2>(0, 4) = -p.kpi * I;
    j2.block<2, 2>(0, 6) = -p.kii * I;
    j2.block<2, 2>(2, 0) = -dir_dv;
    j2.block<2, 2>(2, 2) = -dir_dzv;
    j2.block<2, 2>(2, 4) = I;
    inner.jacobian = [j2](const Vector&) -> Matrix { return j2; };

    return SystemStack({std::move(outer), std::move(inner)});
}

Vector rlc_equilibrium(const RlcParams& p) {
    Vector x = Vector::Zero(8);
    x.segment<2>(0) = p.v_ref;
    x.segment<2>(4) = p.omega * p.C * (kRot * p.v_ref);
    return x;
}

std::vector<double> frequency_estimate(const std::vector<double>& t, const std::vector<Eigen::Vector2d>& v,
                                       double omega) {
    const auto n = t.size();
    std::vector<double> freq(n, omega / (2.0 * std::numbers::pi));
    if (n < 2) return freq;
    std::vector<double> phase(n);
    for (std::size_t k = 0; k < n; ++k) {
        phase[k] = std::atan2(v[k][1], v[k][0]);
        if (k > 0) {
            double d = phase[k] - phase[k - 1];
            // Unwrap relative to the already unwrapped predecessor.
            d -= 2.0 * std::numbers::pi * std::round((phase[k] - phase[k - 1]) / (2.0 * std::numbers::pi));
            phase[k] = phase[k - 1] + d;
        }
    }
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t lo = k == 0 ? 0 : k - 1;
        const std::size_t hi = k + 1 == n ? k : k + 1;
        const double rate = (phase[hi] - phase[lo]) / (t[hi] - t[lo]);
        freq[k] = (omega + rate) / (2.0 * std::numbers::pi);
    }
    return freq;
}

namespace {

std::optional<double> settle_time(const std::vector<double>& t, const std::vector<double>& y, double target,
                                  double band) {
    if (y.empty() || std::abs(y.back() - target) > band) return std::nullopt;
    std::size_t k = y.size();
    while (k > 0 && std::abs(y[k - 1] - target) <= band) --k;
    return t[k == 0 ? 0 : k];
}

}  // namespace

BlackStartMetrics black_start_metrics(const RlcParams& p, const Trajectory& traj) {
    BlackStartMetrics m;
    const double vref = p.v_ref.norm();
    std::vector<Eigen::Vector2d> v;
    v.reserve(traj.size());
    for (const auto& x : traj.states) v.emplace_back(x.segment<2>(0));
    m.time_s = traj.times;
    m.voltage_magnitude_pu.reserve(v.size());
    for (const auto& vk : v) m.voltage_magnitude_pu.push_back(vref > 0.0 ? vk.norm() / vref : vk.norm());
    m.frequency_hz = frequency_estimate(traj.times, v, p.omega);
    double peak = 0.0;
    for (double y : m.voltage_magnitude_pu) peak = std::max(peak, y);
    m.overshoot_pu = peak - 1.0;
    m.stable = !traj.diverged;
    if (traj.diverged) m.divergence_time_s = traj.divergence_time;
    if (!m.voltage_magnitude_pu.empty()) {
        m.final_voltage_pu = m.voltage_magnitude_pu.back();
        m.final_frequency_hz = m.frequency_hz.back();
    }
    if (m.stable) {
        m.settling_time_s = settle_time(m.time_s, m.voltage_magnitude_pu, 1.0, 0.01);
        m.frequency_settling_time_s =
            settle_time(m.time_s, m.frequency_hz, p.omega / (2.0 * std::numbers::pi), 0.5);
    }
    return m;
}

BlackStartResult run_black_start(const RlcParams& p, const Scheme& scheme, const BlackStartSettings& settings) {
    const auto stack = rlc_stack(p);
    IntegrationSettings is;
    is.method = settings.method;
    is.dt = settings.dt;
    is.t_end = settings.t_end;
    is.record_every = settings.record_every;
    is.divergence_threshold = std::numeric_limits<double>::infinity();
    const double limit = settings.divergence_pu * p.v_ref.norm();
    is.diverged_if = [limit](const Vector& x) { return x.segment<2>(0).norm() > limit; };
    BlackStartResult r;
    r.trajectory = integrate_ode(stack, scheme, Vector::Zero(8), is);
    r.metrics = black_start_metrics(p, r.trajectory);
    return r;
}

// ---- bilevel example -----------------------------------------------------

BilevelProblem bilevel_example_problem() {
    BilevelProblem p;
    p.n1 = 1;
    p.n2 = 1;
    p.name = "scaled";
    auto g = [](double a, double b) { return b * b / 4.0 - a * b / 2.0; };
    auto e = [](double b) { return std::exp(-b * b / 2.0); };
    // ∂F2/∂x2 = e·h with h = ∂g/∂x2 - x2 g.
    auto h = [g](double a, double b) { return b / 2.0 - a / 2.0 - b * g(a, b); };
    p.F1 = [](const Vector& x1, const Vector& x2) { return -x1[0] * x1[0] / 2.0 + x2[0] * x2[0]; };
    p.F2 = [g, e](const Vector& x1, const Vector& x2) { return g(x1[0], x2[0]) * e(x2[0]); };
    p.grad1_x1 = [](const Vector& x1, const Vector&) -> Vector { return Vector::Constant(1, -x1[0]); };
    p.grad1_x2 = [](const Vector&, const Vector& x2) -> Vector { return Vector::Constant(1, 2.0 * x2[0]); };
    p.grad2_x2 = [e, h](const Vector& x1, const Vector& x2) -> Vector {
        return Vector::Constant(1, e(x2[0]) * h(x1[0], x2[0]));
    };
    p.hess2_x2x2 = [g, e, h](const Vector& x1, const Vector& x2) -> Matrix {
        const double a = x1[0], b = x2[0];
        const double dh = 0.5 - g(a, b) - b * (b / 2.0 - a / 2.0);
        return Matrix::Constant(1, 1, e(b) * (dh - b * h(a, b)));
    };
    p.hess2_x2x1 = [e](const Vector&, const Vector& x2) -> Matrix {
        const double b = x2[0];
        return Matrix::Constant(1, 1, e(b) * (-0.5 + b * b / 2.0));
    };
    return p;
}

}  // namespace mts
