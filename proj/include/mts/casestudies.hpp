#pragma once

#include "mts/bilevel.hpp"
#include "mts/conditioning.hpp"
#include "mts/integrate.hpp"
#include "mts/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mts {

// ---- linear stacks -------------------------------------------------------

/// f_i = Σ_j blocks[i][j] x_j + offsets[i].
struct LinearStackConfig {
    std::vector<std::size_t> dims;
    std::vector<std::vector<Matrix>> blocks;
    std::vector<Vector> offsets;  // empty or one per level

    bool operator==(const LinearStackConfig& other) const;
};

/// Checks shapes; ConfigError names the offending (i, j).
void validate_linear_config(const LinearStackConfig& config);
SystemStack linear_stack(const LinearStackConfig& config);

LinearStackConfig r2_config();        // f1 = x1 - 2x2, f2 = x1/2 - x2/2
LinearStackConfig tracking_config();  // f1 = -x1, f2 = -(x2 - x1)
LinearStackConfig linear3_config();   // f1 = -x1+x2+x3, f2 = x1-2x2+x3, f3 = x1+x2-3x3

// ---- cascade PI ----------------------------------------------------------

enum class FeedForward {
    State,      // a_i x_i compensation (stable iff K_P,i > 0, K_I,i > 0)
    Reference,  // a_i x_i^r compensation (stable iff K_P,i > a_i, K_I,i > 0)
    None,       // no compensation (stable iff a_i - b_i K_P,i < 0, K_I,i > 0)
};
std::string to_string(FeedForward ff);

struct CascadeParams {
    double a1 = 0.0, b1 = 1.0, a2 = 0.0, b2 = 1.0;
    double kp1 = 1.0, ki1 = 1.0, kp2 = 1.0, ki2 = 1.0;
    FeedForward feed_forward = FeedForward::State;
    double x1_ref = 1.0;
};

void validate(const CascadeParams& p);

/// Conditions under which the ideally separated loops are stable.
bool cascade_separated_loops_stable(const CascadeParams& p);

struct CascadeMatrices {
    Matrix A;        // ẋ = A x + B x1^r without conditioning, x = (x1, ζ1, x2, ζ2)
    Vector B;
    Matrix S;        // 2×2 sensitivity of (x2, ζ2) w.r.t. (x1, ζ1)
    Eigen::RowVector2d S_row;  // first row of S
    Matrix T;        // [[I, 0], [S, I]]; TA is the conditioned system matrix
    Matrix TA;
    Matrix A_tilde;  // T^{-1} (TA) T
};

CascadeMatrices cascade_matrices(const CascadeParams& p);
SystemStack cascade_stack(const CascadeParams& p);
Vector cascade_equilibrium(const CascadeParams& p);

// ---- DC/AC converter with RLC filter -------------------------------------

struct RlcParams {
    double R = 1e-3;
    double L = 1e-3;
    double C = 300e-6;
    double omega = 2.0 * 3.14159265358979323846 * 50.0;
    Eigen::Vector2d v_ref{120.0, 0.0};
    double kpv = 30.0, kiv = 0.3;
    double kpi = 50.0, kii = 100.0;

    /// Nominal filter and outer loop with the given inner gains.
    static RlcParams table(double kpi, double kii);
};

void validate(const RlcParams& p);

/// State order (v_re, v_im, ζv_re, ζv_im, i_re, i_im, ζi_re, ζi_im).
SystemStack rlc_stack(const RlcParams& p);
Vector rlc_equilibrium(const RlcParams& p);
/// Current reference produced by the outer loop.
Eigen::Vector2d rlc_current_reference(const RlcParams& p, const Vector& state);
/// Converter voltage realizing the inner dynamics.
Eigen::Vector2d rlc_modulation_voltage(const RlcParams& p, const Vector& state);

struct BlackStartSettings {
    Method method = Method::RK4;
    double dt = 1e-5;
    double t_end = 5.0;
    double divergence_pu = 10.0;  // on |v| / |v^r|
    int record_every = 10;
};

struct BlackStartMetrics {
    std::vector<double> time_s;
    std::vector<double> voltage_magnitude_pu;
    std::vector<double> frequency_hz;
    double overshoot_pu = 0.0;
    std::optional<double> settling_time_s;            // |v| stays within ±1% of 1 p.u.
    std::optional<double> frequency_settling_time_s;  // f stays within ±0.5 Hz of nominal
    bool stable = false;
    std::optional<double> divergence_time_s;
    double final_voltage_pu = 0.0;
    double final_frequency_hz = 0.0;
};

struct BlackStartResult {
    Trajectory trajectory;
    BlackStartMetrics metrics;
};

/// Instantaneous frequency of the rotating-frame voltage series.
std::vector<double> frequency_estimate(const std::vector<double>& t, const std::vector<Eigen::Vector2d>& v,
                                       double omega);

BlackStartMetrics black_start_metrics(const RlcParams& p, const Trajectory& traj);

BlackStartResult run_black_start(const RlcParams& p, const Scheme& scheme, const BlackStartSettings& settings = {});

// ---- bilevel example -----------------------------------------------------

/// F1 = -x1²/2 + x2², F2 = (x2²/4 - x1 x2/2) exp(-x2²/2), analytic derivatives.
BilevelProblem bilevel_example_problem();

}  // namespace mts
