#pragma once

#include <functional>
#include <vector>

#include "aimc/tensor.hpp"

namespace aimc {

class Tape;
using NodeId = std::int32_t;

struct TapeNode {
    const char* op = "leaf";
    std::vector<NodeId> parents;
    Tensor value;
    Tensor grad;  // empty until backward touches the node
    bool requires_grad = false;
    bool pinned = false;  // value overridden externally; replay will not recompute it
    // Recomputes value from parent values (replay support). Null for leaves.
    std::function<Tensor(const Tape&, const TapeNode&)> forward_fn;
    // Accumulates into parents' grads given this node's grad. Null for leaves.
    std::function<void(Tape&, const TapeNode&)> backward_fn;
};

// Reverse-mode tape. Nodes are appended in forward order, so node index order
// is a topological order of the (acyclic) graph; backward walks indices in
// reverse and therefore visits each node exactly once.
class Tape {
public:
    NodeId leaf(Tensor v, bool requires_grad = false) {
        TapeNode n;
        n.value = std::move(v);
        n.requires_grad = requires_grad;
        nodes_.push_back(std::move(n));
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    NodeId constant(Tensor v) { return leaf(std::move(v), false); }

    NodeId add(const char* op, std::vector<NodeId> parents,
               std::function<Tensor(const Tape&, const TapeNode&)> fwd,
               std::function<void(Tape&, const TapeNode&)> bwd) {
        TapeNode n;
        n.op = op;
        n.parents = std::move(parents);
        for (NodeId p : n.parents) {
            if (p < 0 || p >= static_cast<NodeId>(nodes_.size()))
                throw UsageError("tape parent out of range (graph must be built forward)");
            if (nodes_[static_cast<std::size_t>(p)].requires_grad) n.requires_grad = true;
        }
        n.forward_fn = std::move(fwd);
        n.backward_fn = std::move(bwd);
        n.value = n.forward_fn(*this, n);
        nodes_.push_back(std::move(n));
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    const Tensor& value(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }

    const Tensor& grad(NodeId id) const {
        const TapeNode& n = nodes_[static_cast<std::size_t>(id)];
        if (n.grad.numel() == 0) {
            static thread_local Tensor zero;
            zero = Tensor::zeros(n.value.shape());
            return zero;
        }
        return n.grad;
    }

    TapeNode& node(NodeId id) { return nodes_[static_cast<std::size_t>(id)]; }
    const TapeNode& node(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }
    std::size_t size() const { return nodes_.size(); }

    // Replaces a leaf's value; used to re-run a recorded graph on new inputs.
    void set_leaf(NodeId id, Tensor v) {
        TapeNode& n = node(id);
        if (n.forward_fn) throw UsageError("set_leaf on a non-leaf node");
        if (!v.same_shape(n.value)) throw DimensionError("set_leaf shape mismatch");
        n.value = std::move(v);
    }

    // Freezes any node at an externally supplied value (proxy-graph use).
    void pin(NodeId id, Tensor v) {
        TapeNode& n = node(id);
        if (!v.same_shape(n.value)) throw DimensionError("pin shape mismatch");
        n.value = std::move(v);
        n.pinned = true;
    }

    // Recomputes every unpinned non-leaf node in forward order.
    void replay() {
        for (auto& n : nodes_) {
            if (n.forward_fn && !n.pinned) n.value = n.forward_fn(*this, n);
        }
    }

    void zero_grad() {
        for (auto& n : nodes_) n.grad = Tensor();
    }

    // Reverse accumulation from a scalar loss node.
    void backward(NodeId loss) {
        TapeNode& l = node(loss);
        if (l.value.numel() != 1) throw UsageError("backward requires a scalar loss");
        if (!l.requires_grad)
            throw UsageError("backward on a detached graph: loss does not reach any gradient leaf");
        l.grad = Tensor::full(l.value.shape(), 1.0f);
        for (NodeId id = loss; id >= 0; --id) {
            TapeNode& n = node(id);
            if (n.grad.numel() == 0 || !n.backward_fn || !n.requires_grad) continue;
            n.backward_fn(*this, n);
        }
    }

    // Accumulation helper for backward closures.
    void accumulate_grad(NodeId id, const Tensor& g) {
        TapeNode& n = node(id);
        if (!n.requires_grad) return;
        if (n.grad.numel() == 0) n.grad = Tensor::zeros(n.value.shape());
        if (!n.grad.same_shape(g)) throw DimensionError("gradient shape mismatch");
        float* dst = n.grad.data();
        const float* src = g.data();
        for (std::int64_t i = 0; i < g.numel(); ++i) dst[i] += src[i];
    }

private:
    std::vector<TapeNode> nodes_;
};

}  // namespace aimc
