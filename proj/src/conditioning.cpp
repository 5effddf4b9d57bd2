#include "mts/conditioning.hpp"

#include "mts/errors.hpp"
#include "mts/linalg.hpp"

#include <random>

namespace mts {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Matrix gain_matrix(const Matrix& g, std::size_t dim) {
    if (g.rows() == 1 && g.cols() == 1 && dim != 1) return g(0, 0) * Matrix::Identity(dim, dim);
    return g;
}

SensitivityBlocks sensitivities_for(const SystemStack& stack, const Scheme& s, const Vector& state,
                                    const SensitivityTable* table) {
    if (const auto* approx = std::get_if<scheme::ApproximateSensitivity>(&s)) return approx->provider(stack, state);
    if (table) return table->sens;
    return total_derivative_table(stack, state).sens;
}

bool uses_sensitivity(const Scheme& s) {
    return std::holds_alternative<scheme::PredictiveSensitivity>(s) ||
           std::holds_alternative<scheme::Preconditioned>(s) ||
           std::holds_alternative<scheme::ApproximateSensitivity>(s);
}

std::vector<Matrix> gains_for(const SystemStack& stack, const Scheme& s) {
    std::vector<Matrix> gains;
    for (std::size_t i = 0; i < stack.size(); ++i) {
        const auto d = stack.dim(i);
        if (const auto* sp = std::get_if<scheme::SingularPerturbation>(&s)) {
            gains.push_back(Matrix::Identity(d, d) / sp->eps.at(i));
        } else if (const auto* pc = std::get_if<scheme::Preconditioned>(&s)) {
            gains.push_back(gain_matrix(pc->gains.at(i), d));
        } else {
            gains.push_back(Matrix::Identity(d, d));
        }
    }
    return gains;
}

}  // namespace

std::string scheme_name(const Scheme& s) {
    return std::visit(overloaded{[](const scheme::Plain&) { return std::string("plain"); },
                                 [](const scheme::SingularPerturbation&) { return std::string("singular"); },
                                 [](const scheme::PredictiveSensitivity&) { return std::string("predsens"); },
                                 [](const scheme::Preconditioned&) { return std::string("precond"); },
                                 [](const scheme::ApproximateSensitivity& a) { return a.label; }},
                      s);
}

void validate_scheme(const SystemStack& stack, const Scheme& s) {
    if (const auto* sp = std::get_if<scheme::SingularPerturbation>(&s)) {
        if (sp->eps.size() != stack.size())
            throw InputError("singular perturbation needs " + std::to_string(stack.size()) + " values of eps");
        if (sp->eps.front() != 1.0) throw InputError("singular perturbation requires eps_1 = 1");
        for (std::size_t i = 0; i < sp->eps.size(); ++i) {
            if (!(sp->eps[i] > 0.0)) throw InputError("eps_" + std::to_string(i + 1) + " must be positive");
            if (i > 0 && sp->eps[i] > sp->eps[i - 1])
                throw InputError("eps must be nonincreasing from slow to fast");
        }
    } else if (const auto* pc = std::get_if<scheme::Preconditioned>(&s)) {
        if (pc->gains.size() != stack.size())
            throw InputError("preconditioned scheme needs " + std::to_string(stack.size()) + " gains");
        for (std::size_t i = 0; i < stack.size(); ++i) {
            const Matrix h = gain_matrix(pc->gains[i], stack.dim(i));
            if (static_cast<std::size_t>(h.rows()) != stack.dim(i) || h.rows() != h.cols())
                throw DimensionError(i + 1, "preconditioner has the wrong shape");
            try {
                CheckedLu check(h, i + 1);
            } catch (const SingularityError&) {
                throw InputError("preconditioner H_" + std::to_string(i + 1) + " is not invertible");
            }
        }
    } else if (const auto* ap = std::get_if<scheme::ApproximateSensitivity>(&s)) {
        if (!ap->provider) throw InputError("approximate sensitivity scheme has no provider");
    }
}

scheme::ApproximateSensitivity frozen_sensitivity(const SystemStack& stack, const Vector& reference) {
    auto frozen = total_derivative_table(stack, reference).sens;
    return {[frozen](const SystemStack&, const Vector&) { return frozen; }, "approx:frozen"};
}

scheme::ApproximateSensitivity noisy_sensitivity(const SystemStack& stack, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    SensitivityBlocks noise(stack.size(), std::vector<Matrix>(stack.size()));
    for (std::size_t i = 0; i < stack.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            Matrix e(stack.dim(i), stack.dim(j));
            for (Eigen::Index r = 0; r < e.rows(); ++r)
                for (Eigen::Index c = 0; c < e.cols(); ++c) e(r, c) = unit(rng);
            noise[i][j] = sigma * e;
        }
    }
    return {[noise](const SystemStack& st, const Vector& x) {
                auto sens = total_derivative_table(st, x).sens;
                for (std::size_t i = 0; i < sens.size(); ++i)
                    for (std::size_t j = 0; j < i; ++j) sens[i][j] += noise[i][j];
                return sens;
            },
            "approx:noise"};
}

Vector conditioned_field(const SystemStack& stack, const Scheme& s, const Vector& state, const Vector& raw_field,
                         const SensitivityTable* table) {
    Vector xdot(stack.total_dim());
    const auto gains = gains_for(stack, s);
    SensitivityBlocks sens;
    const bool predictive = uses_sensitivity(s);
    if (predictive) sens = sensitivities_for(stack, s, state, table);
    for (std::size_t i = 0; i < stack.size(); ++i) {
        // H_i scales only the own field; the feed-forward of faster-known ẋ_j is unscaled.
        Vector xi = gains[i] * stack.block(raw_field, i);
        if (predictive) {
            for (std::size_t j = 0; j < i; ++j) xi.noalias() += sens[i][j] * stack.block(xdot, j);
        }
        stack.block(xdot, i) = xi;
    }
    if (!xdot.allFinite()) throw EvaluationError("conditioned field is not finite");
    return xdot;
}

Vector conditioned_field(const SystemStack& stack, const Scheme& s, const Vector& state) {
    const Vector f = stack.field(state);
    if (!f.allFinite()) throw EvaluationError("field value is not finite");
    return conditioned_field(stack, s, state, f, nullptr);
}

ConditioningMatrix conditioning_matrix(const SystemStack& stack, const Scheme& s, const Vector& state) {
    ConditioningMatrix cm;
    cm.dims = stack.dims();
    cm.gains = gains_for(stack, s);
    const auto n = static_cast<Eigen::Index>(stack.total_dim());
    cm.M = Matrix::Zero(n, n);
    if (uses_sensitivity(s)) cm.sens = sensitivities_for(stack, s, state, nullptr);
    for (std::size_t i = 0; i < stack.size(); ++i) {
        // Row block i of M is H_i^{-1} [ -S_{x_1}^{x_i} ... -S_{x_{i-1}}^{x_i}  I  0 ... ].
        const Matrix hinv = cm.gains[i].inverse();
        const auto oi = stack.offset(i);
        const auto di = stack.dim(i);
        cm.M.block(oi, oi, di, di) = hinv;
        if (!cm.sens.empty()) {
            for (std::size_t j = 0; j < i; ++j)
                cm.M.block(oi, stack.offset(j), di, stack.dim(j)) = -hinv * cm.sens[i][j];
        }
    }
    return cm;
}

Vector ConditioningMatrix::solve(const Vector& f) const {
    Vector x(f.size());
    std::size_t oi = 0;
    std::vector<std::size_t> offsets;
    for (auto d : dims) {
        offsets.push_back(oi);
        oi += d;
    }
    for (std::size_t i = 0; i < dims.size(); ++i) {
        Vector xi = gains[i] * f.segment(offsets[i], dims[i]);
        if (!sens.empty()) {
            for (std::size_t j = 0; j < i; ++j) xi.noalias() += sens[i][j] * x.segment(offsets[j], dims[j]);
        }
        x.segment(offsets[i], dims[i]) = xi;
    }
    return x;
}

Matrix ConditioningMatrix::inverse() const {
    const auto n = M.rows();
    Matrix inv(n, n);
    for (Eigen::Index c = 0; c < n; ++c) inv.col(c) = solve(Vector::Unit(n, c));
    return inv;
}

Vector discrete_step(const SystemStack& stack, const Scheme& s, const Vector& state) {
    return state + conditioned_field(stack, s, state);
}

}  // namespace mts
