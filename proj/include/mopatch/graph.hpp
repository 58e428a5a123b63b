#pragma once

#include <string>
#include <vector>

#include "mopatch/tensor.hpp"

namespace mopatch {

// Reverse-mode autodiff over a tape of dense f32 ops. Nodes are created in
// topological order (an op's inputs always exist before it), values are
// computed eagerly, and backward() walks the tape in reverse. All kernels
// have a fixed accumulation order, so identical graphs and inputs produce
// bitwise identical outputs on one platform.
class Graph {
public:
    using NodeId = int;

    // leaves
    NodeId input(Tensor value, std::string name = "");
    NodeId param(std::string name, const Tensor& value);

    // op set
    NodeId matmul(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);          // same shape, or [..., n] + [n] bias
    NodeId mul(NodeId a, NodeId b);          // elementwise
    NodeId scale(NodeId a, float s);
    NodeId softmax(NodeId a);                // last axis
    NodeId log_softmax(NodeId a);            // last axis, max-subtracted
    NodeId layer_norm(NodeId x, NodeId gamma, NodeId beta, float eps = 1e-5f);
    NodeId gelu(NodeId a);                   // tanh approximation
    NodeId mean(NodeId a);                   // full reduction -> [1]
    NodeId concat(NodeId a, NodeId b, int axis);  // rank 1 or 2
    NodeId slice(NodeId a, int axis, int start, int len);
    NodeId transpose(NodeId a);              // rank 2
    NodeId embedding(NodeId table, std::vector<int> ids);
    NodeId l2_normalize(NodeId a, float eps = 1e-12f);

    const Tensor& value(NodeId id) const;
    const std::vector<int>& shape(NodeId id) const { return value(id).shape; }

    // fills gradients for every node reachable from `loss`; the gradient of
    // any other node (e.g. an unused parameter) is exactly zero
    void backward(NodeId loss);
    const Tensor& grad(NodeId id) const;

    // param nodes in creation order, for optimizers and checkers
    struct ParamRef { NodeId id; std::string name; };
    const std::vector<ParamRef>& params() const { return params_; }

    size_t node_count() const { return nodes_.size(); }

private:
    enum class Op {
        Input, Param, MatMul, Add, Mul, Scale, Softmax, LogSoftmax,
        LayerNorm, Gelu, Mean, Concat, Slice, Transpose, Embedding, L2Normalize
    };

    struct Node {
        Op op;
        std::vector<NodeId> in;
        Tensor value;
        Tensor grad;
        float scalar = 0.0f;          // scale factor / eps
        int axis = 0, start = 0, len = 0;
        std::vector<int> ids;         // embedding lookup
        std::vector<float> aux;       // rowwise stats saved for backward
        std::string name;
    };

    NodeId push(Node n);
    const Node& at(NodeId id) const;
    Node& at(NodeId id);
    void check_finite(NodeId id) const;
    [[noreturn]] void op_fail(const std::string& op, const std::string& msg) const;

    std::vector<Node> nodes_;
    std::vector<ParamRef> params_;
    bool grads_ready_ = false;
};

}  // namespace mopatch
