#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "b2opt/ad/matrix.hpp"

namespace b2opt::ad {

/// A learnable tensor. `grad` accumulates across backward passes until zero_grad().
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    Parameter() = default;
    Parameter(std::string name_, Matrix value_)
        : name(std::move(name_)), value(std::move(value_)), grad(value.rows(), value.cols())
    {
    }

    void zero_grad() { grad.fill(0.0); }
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives and is not cleared.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    const Matrix& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    bool requires_grad() const;
    std::size_t id() const { return id_; }
    Tape& tape() const { return *tape_; }
    bool valid() const { return tape_ != nullptr; }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

enum class GradMode { enabled, disabled };

/// Define-by-run reverse-mode record. Nodes are appended in evaluation order, so the node list
/// is already topologically sorted; backward walks it once in reverse.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    explicit Tape(GradMode mode = GradMode::enabled) : mode_(mode) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool grad_enabled() const { return mode_ == GradMode::enabled; }

    Var constant(Matrix value) { return push("constant", std::move(value), {}, false, nullptr); }

    // A leaf that collects a gradient but is not a Parameter (e.g. a population we differentiate w.r.t.).
    Var variable(Matrix value) { return push("variable", std::move(value), {}, grad_enabled(), nullptr); }

    // Parameters map to one leaf per tape, so shared weights accumulate naturally.
    Var parameter(Parameter& p)
    {
        if (auto it = param_nodes_.find(&p); it != param_nodes_.end())
            return {this, it->second};
        Var v = push("parameter", p.value, {}, grad_enabled(), nullptr);
        nodes_[v.id()].param = &p;
        param_nodes_.emplace(&p, v.id());
        param_order_.push_back(&p);
        return v;
    }

    Var stop_gradient(Var v) { return push("stop_gradient", value(v.id()), {}, false, nullptr); }

    /// Appends an op result. `backward` is dropped when no input needs a gradient.
    Var record(const char* op, Matrix value, std::initializer_list<Var> inputs, BackwardFn backward)
    {
        bool needs = false;
        std::vector<std::size_t> ids;
        ids.reserve(inputs.size());
        for (const Var& in : inputs) {
            if (in.valid() && &in.tape() != this)
                throw ContractError(fmt::format("{}: input from a different tape", op));
            ids.push_back(in.id());
            needs = needs || nodes_[in.id()].requires_grad;
        }
        needs = needs && grad_enabled();
        return push(op, std::move(value), std::move(ids), needs, needs ? std::move(backward) : BackwardFn{});
    }

    const Matrix& value(std::size_t id) const { return nodes_.at(id).value; }
    bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
    const char* op(std::size_t id) const { return nodes_.at(id).op; }
    const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_.at(id).inputs; }
    std::size_t size() const { return nodes_.size(); }

    /// Gradient of the last backward's loss w.r.t. node `id` (zeros if it received none).
    Matrix grad(std::size_t id) const
    {
        const Node& n = nodes_.at(id);
        return n.grad_ready ? n.grad : Matrix(n.value.rows(), n.value.cols());
    }

    /// Adds `g` into the adjoint of `id`; called from backward rules.
    void accumulate(std::size_t id, const Matrix& g)
    {
        Node& n = nodes_[id];
        if (!n.requires_grad)
            return;
        grad_slot(n) += g;
    }

    // In-place access to a node adjoint for rules that scatter element-wise.
    Matrix& grad_ref(std::size_t id) { return grad_slot(nodes_[id]); }

    /// Computes node adjoints for scalar `loss`, then adds parameter adjoints into Parameter::grad.
    void backward(Var loss, double seed = 1.0)
    {
        backward_nodes(loss, seed);
        accumulate_parameter_grads();
    }

    /// Node adjoints only; Parameter::grad is left untouched. Safe to run on a worker thread
    /// when parameters are shared read-only.
    void backward_nodes(Var loss, double seed = 1.0)
    {
        if (&loss.tape() != this)
            throw ContractError("backward: loss lives on a different tape");
        const Matrix& lv = value(loss.id());
        if (lv.size() != 1)
            throw ContractError(fmt::format("backward: loss must be scalar, got {}", lv.shape()));
        for (Node& n : nodes_)
            n.grad_ready = false;
        visits_ = 0;
        if (!nodes_[loss.id()].requires_grad)
            return;
        grad_slot(nodes_[loss.id()]).fill(seed);
        for (std::size_t id = loss.id() + 1; id-- > 0;) {
            Node& n = nodes_[id];
            if (!n.grad_ready)
                continue;
            ++visits_;
            if (n.backward)
                n.backward(*this, id);
        }
    }

    void accumulate_parameter_grads() const
    {
        for (Parameter* p : param_order_) {
            const Node& n = nodes_[param_nodes_.at(p)];
            if (n.grad_ready)
                p->grad += n.grad;
        }
    }

    /// Adjoint of a parameter leaf from the last backward, or nullptr if the parameter is not on this tape.
    const Matrix* parameter_grad(const Parameter& p) const
    {
        auto it = param_nodes_.find(&p);
        if (it == param_nodes_.end() || !nodes_[it->second].grad_ready)
            return nullptr;
        return &nodes_[it->second].grad;
    }

    // Number of nodes whose rule ran in the last backward.
    std::size_t backward_visits() const { return visits_; }

    void clear()
    {
        nodes_.clear();
        param_nodes_.clear();
        param_order_.clear();
        visits_ = 0;
    }

private:
    struct Node {
        const char* op;
        Matrix value;
        Matrix grad;
        bool grad_ready = false;
        bool requires_grad = false;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        Parameter* param = nullptr;
    };

    Var push(const char* op, Matrix value, std::vector<std::size_t> inputs, bool requires_grad, BackwardFn backward)
    {
        const std::size_t id = nodes_.size();
        if (!value.all_finite())
            throw NumericError(fmt::format("node {} ({}) produced non-finite values", id, op));
        nodes_.push_back(Node{op, std::move(value), Matrix(), false, requires_grad, std::move(inputs), std::move(backward)});
        return {this, id};
    }

    Matrix& grad_slot(Node& n)
    {
        if (!n.grad_ready) {
            if (!n.grad.same_shape(n.value))
                n.grad = Matrix(n.value.rows(), n.value.cols());
            else
                n.grad.fill(0.0);
            n.grad_ready = true;
        }
        return n.grad;
    }

    GradMode mode_;
    std::deque<Node> nodes_;
    std::unordered_map<const Parameter*, std::size_t> param_nodes_;
    std::vector<Parameter*> param_order_;
    std::size_t visits_ = 0;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }
inline bool Var::requires_grad() const { return tape_->requires_grad(id_); }

} // namespace b2opt::ad
