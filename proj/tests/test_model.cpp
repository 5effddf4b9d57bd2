#include "support.hpp"

#include "mts/bilevel.hpp"
#include "mts/casestudies.hpp"
#include "mts/errors.hpp"
#include "mts/model.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>

using namespace mts;
using namespace mts::testing;

namespace {

SystemStack scalar_pair(Field f1, Field f2, std::size_t dim2 = 1) {
    Subsystem a{1, std::move(f1), std::nullopt, "a"};
    Subsystem b{dim2, std::move(f2), std::nullopt, "b"};
    return SystemStack({a, b});
}

}  // namespace

TEST_CASE("stack bookkeeping") {
    const auto s = linear_stack(linear3_config());
    CHECK(s.size() == 3);
    CHECK(s.total_dim() == 3);
    CHECK(s.offset(2) == 2);
    CHECK_THROWS_AS(SystemStack(std::vector<Subsystem>{}), InputError);
    CHECK_THROWS_AS(s.field(vec({1.0, 2.0})), InputError);
    CHECK_THROWS_AS(s.jacobian(vec({1.0, 2.0, 3.0, 4.0})), InputError);
}

TEST_CASE("split and flatten are exact inverses") {
    std::mt19937_64 rng(11);
    const std::vector<std::size_t> dims{2, 1, 3};
    for (int trial = 0; trial < 50; ++trial) {
        const Vector flat = uniform_point(rng, 6, -1e3, 1e3);
        const auto p = StatePoint::split(flat, dims);
        const Vector back = p.flatten();
        REQUIRE(back.size() == flat.size());
        CHECK(std::memcmp(back.data(), flat.data(), sizeof(double) * 6) == 0);
        CHECK(StatePoint::split(back, dims) == p);
    }
    CHECK_THROWS_AS(StatePoint::split(Vector::Zero(5), dims), InputError);
    CHECK_THROWS_AS(StatePoint::split(Vector::Zero(7), dims), InputError);
}

TEST_CASE("validate_stack") {
    const auto ok = scalar_pair([](const Vector& x) { return Vector::Constant(1, x[0]); },
                                [](const Vector& x) { return Vector::Constant(1, x[1]); });
    const auto rep = validate_stack(ok, Vector::Zero(2));
    CHECK(rep.output_dims == std::vector<std::size_t>{1, 1});
    CHECK(rep.analytic_jacobian == std::vector<bool>{false, false});

    const auto bad = scalar_pair([](const Vector& x) { return Vector::Constant(1, x[0]); },
                                 [](const Vector&) { return Vector::Zero(2); });
    try {
        validate_stack(bad, Vector::Zero(2));
        FAIL("expected a dimension error");
    } catch (const DimensionError& e) {
        CHECK(e.level() == 2);
    }
    CHECK_THROWS_AS(validate_stack(ok, Vector::Zero(3)), InputError);

    const auto rlc = rlc_stack(RlcParams{});
    const auto r = validate_stack(rlc, Vector::Zero(8));
    CHECK(r.output_dims == std::vector<std::size_t>{4, 4});
    CHECK(r.analytic_jacobian == std::vector<bool>{true, true});
}

TEST_CASE("finite-difference Jacobian") {
    const Field sq = [](const Vector& x) { return Vector::Constant(1, x[0] * x[0]); };
    CHECK(finite_difference_jacobian(sq, vec({2.0}), 1e-6)(0, 0) == doctest::Approx(4.0).epsilon(1e-6));

    const Field constant = [](const Vector&) { return vec({3.0, -1.0}); };
    CHECK(finite_difference_jacobian(constant, vec({0.3, 0.7})).isZero(0.0));

    const Matrix a = mat({{1.0, -2.0}, {0.5, -0.5}});
    const Field lin = [a](const Vector& x) { return Vector(a * x); };
    CHECK((finite_difference_jacobian(lin, vec({0.4, -1.2})) - a).cwiseAbs().maxCoeff() < 1e-9);

    const Field nan = [](const Vector&) { return Vector::Constant(1, std::nan("")); };
    CHECK_THROWS_AS(finite_difference_jacobian(nan, vec({0.0})), EvaluationError);
    CHECK_THROWS_AS(finite_difference_jacobian(sq, vec({1.0}), 0.0), InputError);
}

TEST_CASE("analytic Jacobians of bundled stacks agree with central differences") {
    std::vector<SystemStack> stacks;
    stacks.push_back(rlc_stack(RlcParams{}));
    stacks.push_back(rlc_stack(RlcParams::table(250.0, 500.0)));
    stacks.push_back(cascade_stack(CascadeParams{}));
    CascadeParams other;
    other.a1 = 0.3;
    other.b1 = 1.7;
    other.a2 = -0.4;
    other.b2 = 0.8;
    other.feed_forward = FeedForward::None;
    stacks.push_back(cascade_stack(other));
    stacks.push_back(as_system_stack(bilevel_example_problem()));
    stacks.push_back(linear_stack(r2_config()));
    stacks.push_back(linear_stack(linear3_config()));

    std::mt19937_64 rng(3);
    for (const auto& s : stacks) {
        for (int trial = 0; trial < 100; ++trial) {
            const Vector x = uniform_point(rng, static_cast<Eigen::Index>(s.total_dim()), -2.0, 2.0);
            for (std::size_t i = 0; i < s.size(); ++i) {
                const auto& sub = s.subsystem(i);
                if (!sub.jacobian) continue;
                const Matrix analytic = (*sub.jacobian)(x);
                const Matrix fd = finite_difference_jacobian(sub.field, x, 1e-6);
                CHECK((analytic - fd).norm() <= 1e-5 * (1.0 + analytic.norm()));
            }
        }
    }
}

TEST_CASE("scale_stack multiplies fields and Jacobians") {
    const auto s = rlc_stack(RlcParams{});
    const auto t = scale_stack(s, 0.1);
    const Vector x = Vector::LinSpaced(8, -1.0, 1.0);
    CHECK((t.field(x) - 0.1 * s.field(x)).norm() <= 1e-12 * s.field(x).norm());
    CHECK((t.jacobian(x) - 0.1 * s.jacobian(x)).norm() <= 1e-12 * s.jacobian(x).norm());
}
