#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mts {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A field maps the full stacked state (all subsystems, slow to fast) to the
// derivative of one subsystem's block.
using Field = std::function<Vector(const Vector& state)>;

// Returns the row block [∇_{x_1} f_i, ..., ∇_{x_N} f_i], i.e. dim × total_dim.
using JacobianProvider = std::function<Matrix(const Vector& state)>;

inline constexpr double kDefaultFdStep = 1e-6;

struct Subsystem {
    std::size_t dim = 0;
    Field field;
    std::optional<JacobianProvider> jacobian;
    std::string name;
};

/// Ordered list of subsystems, index 0 = slowest. Blocks are stored
/// contiguously in this order in every stacked vector and matrix.
class SystemStack {
public:
    SystemStack() = default;
    explicit SystemStack(std::vector<Subsystem> subsystems);

    std::size_t size() const noexcept { return subsystems_.size(); }
    std::size_t total_dim() const noexcept { return total_dim_; }
    std::size_t dim(std::size_t i) const { return subsystems_.at(i).dim; }
    std::size_t offset(std::size_t i) const { return offsets_.at(i); }
    const std::vector<std::size_t>& dims() const noexcept { return dims_; }
    const Subsystem& subsystem(std::size_t i) const { return subsystems_.at(i); }
    const std::vector<Subsystem>& subsystems() const noexcept { return subsystems_; }

    /// Stacked field f(x) = (f_1(x), ..., f_N(x)).
    Vector field(const Vector& state) const;
    /// f_i(x) only.
    Vector field(std::size_t i, const Vector& state) const;
    /// Row block of the Jacobian for subsystem i (analytic if provided, else central FD).
    Matrix jacobian_rows(std::size_t i, const Vector& state) const;
    /// Full ∇f, total_dim × total_dim.
    Matrix jacobian(const Vector& state) const;

    auto block(Vector& v, std::size_t i) const { return v.segment(offsets_.at(i), dims_.at(i)); }
    auto block(const Vector& v, std::size_t i) const { return v.segment(offsets_.at(i), dims_.at(i)); }

private:
    void check_state(const Vector& state) const;

    std::vector<Subsystem> subsystems_;
    std::vector<std::size_t> dims_;
    std::vector<std::size_t> offsets_;
    std::size_t total_dim_ = 0;
};

/// Per-subsystem view of a stacked state.
class StatePoint {
public:
    StatePoint() = default;
    explicit StatePoint(std::vector<Vector> blocks) : blocks_(std::move(blocks)) {}

    static StatePoint split(const Vector& flat, const std::vector<std::size_t>& dims);
    Vector flatten() const;

    std::size_t size() const noexcept { return blocks_.size(); }
    const Vector& operator[](std::size_t i) const { return blocks_.at(i); }
    Vector& operator[](std::size_t i) { return blocks_.at(i); }
    const std::vector<Vector>& blocks() const noexcept { return blocks_; }

    friend bool operator==(const StatePoint& a, const StatePoint& b);

private:
    std::vector<Vector> blocks_;
};

struct ValidationReport {
    std::vector<std::size_t> output_dims;
    std::vector<bool> analytic_jacobian;
};

/// Evaluates every field (and analytic Jacobian, when present) at `probe` and
/// checks the output shapes. Throws DimensionError naming the first bad level.
ValidationReport validate_stack(const SystemStack& stack, const Vector& probe);

/// Central differences with per-coordinate step `step * (1 + |x_k|)`.
/// Throws EvaluationError if the field returns a non-finite value.
Matrix finite_difference_jacobian(const Field& field, const Vector& point, double step = kDefaultFdStep);

/// Stack whose fields (and Jacobians) are multiplied by `factor`, e.g. the
/// step size τ of an Euler discretization.
SystemStack scale_stack(const SystemStack& stack, double factor);

bool all_finite(const Vector& v);

}  // namespace mts
