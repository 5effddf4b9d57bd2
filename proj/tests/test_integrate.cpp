#include "support.hpp"

#include "mts/bilevel.hpp"
#include "mts/casestudies.hpp"
#include "mts/errors.hpp"
#include "mts/integrate.hpp"

#include <doctest.h>

#include <cmath>

using namespace mts;
using namespace mts::testing;

namespace {

const VectorField decay = [](const Vector& x) { return Vector(-x); };

double final_error(Method m, double dt) {
    IntegrationSettings s;
    s.method = m;
    s.dt = dt;
    s.t_end = 1.0;
    const auto t = integrate_field(decay, vec({1.0}), s);
    return std::abs(t.states.back()[0] - std::exp(-1.0));
}

}  // namespace

TEST_CASE("scalar decay") {
    IntegrationSettings s;
    s.dt = 0.01;
    s.t_end = 1.0;
    const auto t = integrate_field(decay, vec({1.0}), s);
    CHECK(t.size() == 101);
    CHECK(t.times.back() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(t.states.back()[0] - 0.3678794) <= 1e-7);
    CHECK(std::abs(t.states.back()[0] - std::exp(-1.0)) <= 1e-8);
    CHECK_FALSE(t.diverged);
}

TEST_CASE("order of accuracy") {
    const double rk_ratio = final_error(Method::RK4, 0.02) / final_error(Method::RK4, 0.01);
    CHECK(rk_ratio == doctest::Approx(16.0).epsilon(0.05));
    const double eu_ratio = final_error(Method::ExplicitEuler, 0.02) / final_error(Method::ExplicitEuler, 0.01);
    CHECK(eu_ratio == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("equilibrium start stays put") {
    const auto r2 = linear_stack(r2_config());
    IntegrationSettings s;
    s.t_end = 0.5;
    const auto t = integrate_ode(r2, scheme::PredictiveSensitivity{}, Vector::Zero(2), s);
    for (const auto& x : t.states) CHECK(x.isZero(0.0));
}

TEST_CASE("recording stride keeps the final sample") {
    IntegrationSettings s;
    s.dt = 0.01;
    s.t_end = 1.0;
    s.record_every = 7;
    const auto t = integrate_field(decay, vec({1.0}), s);
    CHECK(t.times.front() == 0.0);
    CHECK(t.times.back() == doctest::Approx(1.0));
    CHECK(t.size() == 1 + 100 / 7 + 1);
    s.record_every = 0;
    CHECK_THROWS_AS(integrate_field(decay, vec({1.0}), s), InputError);
}

TEST_CASE("tracking stack stays on the manifold") {
    const auto tr = linear_stack(tracking_config());
    IntegrationSettings s;
    s.dt = 1e-3;
    s.t_end = 2.0;
    const auto t = integrate_ode(tr, scheme::PredictiveSensitivity{}, vec({1.0, 1.0}), s);
    double dev = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double exact = std::exp(-t.times[k]);
        dev = std::max({dev, std::abs(t.states[k][0] - exact), std::abs(t.states[k][1] - exact)});
    }
    CHECK(dev <= 1e-9);
    const auto err = manifold_error(tr, t, 1);
    CHECK(err.missing() == 0);
    CHECK(err.max_error() <= 1e-9);
}

TEST_CASE("plain scheme lags the manifold") {
    const auto tr = linear_stack(tracking_config());
    IntegrationSettings s;
    s.dt = 1e-3;
    s.t_end = 5.0;
    const auto t = integrate_ode(tr, scheme::Plain{}, vec({1.0, 0.0}), s);
    const auto err = manifold_error(tr, t, 1);
    REQUIRE(err.error.size() == t.size());
    CHECK(*err.error.front()[0] == doctest::Approx(1.0));
    CHECK(*err.error.back()[0] < 0.1);
    CHECK(*err.error.back()[0] < *err.error[err.error.size() / 2][0]);
}

TEST_CASE("manifold error at a global equilibrium is zero") {
    const auto l3 = linear_stack(linear3_config());
    IntegrationSettings s;
    s.t_end = 0.1;
    const auto t = integrate_ode(l3, scheme::PredictiveSensitivity{}, Vector::Zero(3), s);
    const auto err = manifold_error(l3, t, 1);
    CHECK(err.max_error() == 0.0);
    CHECK(err.error.front().size() == 2);
}

TEST_CASE("manifold invariance is fourth order on a nonlinear stack") {
    // Start on the lower-level manifold of the bilevel example flow.
    const auto p = bilevel_example_problem();
    const auto stack = as_system_stack(p);
    const Vector x1 = vec({0.6});
    Vector x0(2);
    x0 << x1, solve_lower(p, x1, vec({0.6}));
    auto run = [&](double dt) {
        IntegrationSettings s;
        s.dt = dt;
        s.t_end = 2.0;
        return manifold_error(stack, integrate_ode(stack, scheme::PredictiveSensitivity{}, x0, s), 1).max_error();
    };
    const double e1 = run(0.04), e4 = run(0.01);
    MESSAGE("manifold error dt=0.04: " << e1 << ", dt=0.01: " << e4);
    CHECK(e1 > 0.0);
    CHECK(e1 >= 15.0 * e4);
    CHECK(e1 <= 1e-4);
}

TEST_CASE("divergence detection") {
    const auto r2 = linear_stack(r2_config());
    IntegrationSettings s;
    s.dt = 1e-2;
    s.t_end = 400.0;
    const auto bad = integrate_ode(r2, scheme::SingularPerturbation{{1.0, 0.6}}, vec({1.0, 0.0}), s);
    CHECK(bad.diverged);
    REQUIRE(bad.divergence_time);
    CHECK(*bad.divergence_time < 400.0);
    CHECK(bad.states.back().lpNorm<Eigen::Infinity>() > 1e6);
    const auto good = integrate_ode(r2, scheme::SingularPerturbation{{1.0, 0.4}}, vec({1.0, 0.0}), s);
    CHECK_FALSE(good.diverged);
    CHECK(good.states.back().norm() < 1e-3);

    IntegrationSettings q;
    q.t_end = 1.0;
    q.diverged_if = [](const Vector& x) { return x[0] < 0.5; };
    const auto cut = integrate_field(decay, vec({1.0}), q);
    CHECK(cut.diverged);
    CHECK(*cut.divergence_time == doctest::Approx(std::log(2.0)).epsilon(2e-3));
}

TEST_CASE("integration errors carry the failing time") {
    const VectorField fails = [](const Vector& x) -> Vector {
        if (x[0] < 0.5) throw EvaluationError("boom");
        return Vector(-x);
    };
    IntegrationSettings s;
    s.dt = 1e-2;
    s.t_end = 2.0;
    try {
        integrate_field(fails, vec({1.0}), s);
        FAIL("expected an integration error");
    } catch (const IntegrationError& e) {
        CHECK(e.time() == doctest::Approx(0.69).epsilon(0.02));
    }
    CHECK_THROWS_AS(integrate_field(decay, vec({1.0}), IntegrationSettings{Method::RK4, -1.0, 1.0, 1e6, 1, {}}),
                    InputError);
}
