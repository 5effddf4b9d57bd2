#include "mts/model.hpp"

#include "mts/errors.hpp"

#include <cmath>
#include <utility>

namespace mts {

SystemStack::SystemStack(std::vector<Subsystem> subsystems) : subsystems_(std::move(subsystems)) {
    if (subsystems_.empty()) throw InputError("system stack needs at least one subsystem");
    for (std::size_t i = 0; i < subsystems_.size(); ++i) {
        const auto& s = subsystems_[i];
        if (s.dim == 0) throw DimensionError(i + 1, "dimension must be positive");
        if (!s.field) throw InputError("subsystem " + std::to_string(i + 1) + " has no field");
        offsets_.push_back(total_dim_);
        dims_.push_back(s.dim);
        total_dim_ += s.dim;
    }
}

void SystemStack::check_state(const Vector& state) const {
    if (static_cast<std::size_t>(state.size()) != total_dim_)
        throw InputError("state has " + std::to_string(state.size()) + " entries, stack total_dim is " +
                         std::to_string(total_dim_));
}

Vector SystemStack::field(std::size_t i, const Vector& state) const {
    return subsystems_.at(i).field(state);
}

Vector SystemStack::field(const Vector& state) const {
    check_state(state);
    Vector out(total_dim_);
    for (std::size_t i = 0; i < subsystems_.size(); ++i) {
        Vector fi = subsystems_[i].field(state);
        if (static_cast<std::size_t>(fi.size()) != dims_[i])
            throw DimensionError(i + 1, "field returned " + std::to_string(fi.size()) + " entries, expected " +
                                            std::to_string(dims_[i]));
        out.segment(offsets_[i], dims_[i]) = fi;
    }
    return out;
}

Matrix SystemStack::jacobian_rows(std::size_t i, const Vector& state) const {
    const auto& s = subsystems_.at(i);
    if (s.jacobian) return (*s.jacobian)(state);
    return finite_difference_jacobian(s.field, state);
}

Matrix SystemStack::jacobian(const Vector& state) const {
    check_state(state);
    Matrix jac(total_dim_, total_dim_);
    for (std::size_t i = 0; i < subsystems_.size(); ++i) {
        jac.middleRows(offsets_[i], dims_[i]) = jacobian_rows(i, state);
    }
    return jac;
}

StatePoint StatePoint::split(const Vector& flat, const std::vector<std::size_t>& dims) {
    std::vector<Vector> blocks;
    blocks.reserve(dims.size());
    std::size_t offset = 0;
    for (auto d : dims) {
        if (offset + d > static_cast<std::size_t>(flat.size()))
            throw InputError("state vector too short for the given block dimensions");
        blocks.emplace_back(flat.segment(offset, d));
        offset += d;
    }
    if (offset != static_cast<std::size_t>(flat.size()))
        throw InputError("state vector longer than the sum of block dimensions");
    return StatePoint(std::move(blocks));
}

Vector StatePoint::flatten() const {
    Eigen::Index total = 0;
    for (const auto& b : blocks_) total += b.size();
    Vector flat(total);
    Eigen::Index offset = 0;
    for (const auto& b : blocks_) {
        flat.segment(offset, b.size()) = b;
        offset += b.size();
    }
    return flat;
}

bool operator==(const StatePoint& a, const StatePoint& b) {
    if (a.blocks_.size() != b.blocks_.size()) return false;
    for (std::size_t i = 0; i < a.blocks_.size(); ++i) {
        if (a.blocks_[i].size() != b.blocks_[i].size()) return false;
        if ((a.blocks_[i].array() != b.blocks_[i].array()).any()) return false;
    }
    return true;
}

ValidationReport validate_stack(const SystemStack& stack, const Vector& probe) {
    if (static_cast<std::size_t>(probe.size()) != stack.total_dim())
        throw InputError("probe has " + std::to_string(probe.size()) + " entries, stack total_dim is " +
                         std::to_string(stack.total_dim()));
    ValidationReport report;
    for (std::size_t i = 0; i < stack.size(); ++i) {
        const auto& s = stack.subsystem(i);
        Vector fi = s.field(probe);
        if (static_cast<std::size_t>(fi.size()) != s.dim)
            throw DimensionError(i + 1, "field returned " + std::to_string(fi.size()) + " entries, expected " +
                                            std::to_string(s.dim));
        if (s.jacobian) {
            Matrix jac = (*s.jacobian)(probe);
            if (static_cast<std::size_t>(jac.rows()) != s.dim ||
                static_cast<std::size_t>(jac.cols()) != stack.total_dim())
                throw DimensionError(i + 1, "jacobian is " + std::to_string(jac.rows()) + "x" +
                                                std::to_string(jac.cols()) + ", expected " + std::to_string(s.dim) +
                                                "x" + std::to_string(stack.total_dim()));
        }
        report.output_dims.push_back(static_cast<std::size_t>(fi.size()));
        report.analytic_jacobian.push_back(s.jacobian.has_value());
    }
    return report;
}

bool all_finite(const Vector& v) { return v.allFinite(); }

Matrix finite_difference_jacobian(const Field& field, const Vector& point, double step) {
    if (!(step > 0.0)) throw InputError("finite-difference step must be positive");
    Vector x = point;
    Matrix jac;
    for (Eigen::Index k = 0; k < point.size(); ++k) {
        const double h = step * (1.0 + std::abs(point[k]));
        x[k] = point[k] + h;
        Vector fp = field(x);
        x[k] = point[k] - h;
        Vector fm = field(x);
        x[k] = point[k];
        if (!fp.allFinite() || !fm.allFinite())
            throw EvaluationError("non-finite field value while differencing coordinate " + std::to_string(k));
        if (k == 0) jac.resize(fp.size(), point.size());
        jac.col(k) = (fp - fm) / (2.0 * h);
    }
    return jac;
}

SystemStack scale_stack(const SystemStack& stack, double factor) {
    std::vector<Subsystem> scaled;
    for (const auto& s : stack.subsystems()) {
        Subsystem t;
        t.dim = s.dim;
        t.name = s.name;
        t.field = [f = s.field, factor](const Vector& x) -> Vector { return factor * f(x); };
        if (s.jacobian)
            t.jacobian = [j = *s.jacobian, factor](const Vector& x) -> Matrix { return factor * j(x); };
        scaled.push_back(std::move(t));
    }
    return SystemStack(std::move(scaled));
}

}  // namespace mts
