#include "mopatch/graph.hpp"

#include <cmath>

#include "mopatch/kernels.hpp"

namespace mopatch {

namespace {

bool is_matrix(const Tensor& t) { return t.rank() == 2; }

}  // namespace

Graph::NodeId Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    NodeId id = NodeId(nodes_.size()) - 1;
    check_finite(id);
    return id;
}

const Graph::Node& Graph::at(NodeId id) const {
    if (id < 0 || size_t(id) >= nodes_.size()) fail("graph: invalid node id " + std::to_string(id));
    return nodes_[size_t(id)];
}

Graph::Node& Graph::at(NodeId id) { return const_cast<Node&>(const_cast<const Graph*>(this)->at(id)); }

void Graph::check_finite(NodeId id) const {
    for (float v : nodes_[size_t(id)].value.data) {
        if (!std::isfinite(v))
            fail("graph: non-finite value in node " + std::to_string(id));
    }
}

void Graph::op_fail(const std::string& op, const std::string& msg) const {
    fail("graph." + op + ": " + msg);
}

const Tensor& Graph::value(NodeId id) const { return at(id).value; }

const Tensor& Graph::grad(NodeId id) const {
    if (!grads_ready_) fail("graph: backward() has not run");
    return at(id).grad;
}

Graph::NodeId Graph::input(Tensor value, std::string name) {
    Node n;
    n.op = Op::Input;
    n.value = std::move(value);
    n.name = std::move(name);
    return push(std::move(n));
}

Graph::NodeId Graph::param(std::string name, const Tensor& value) {
    Node n;
    n.op = Op::Param;
    n.value = value;
    n.name = name;
    NodeId id = push(std::move(n));
    params_.push_back({id, std::move(name)});
    return id;
}

Graph::NodeId Graph::matmul(NodeId a, NodeId b) {
    const Tensor& ta = at(a).value;
    const Tensor& tb = at(b).value;
    if (!is_matrix(ta) || !is_matrix(tb)) op_fail("matmul", "operands must be rank 2");
    if (ta.dim(1) != tb.dim(0))
        op_fail("matmul", "inner dims differ: " + shape_str(ta.shape) + " x " + shape_str(tb.shape));
    Node n;
    n.op = Op::MatMul;
    n.in = {a, b};
    n.value = Tensor({ta.dim(0), tb.dim(1)});
    kernels::matmul_nn(n.value.data.data(), ta.data.data(), tb.data.data(), ta.dim(0), ta.dim(1), tb.dim(1));
    return push(std::move(n));
}

Graph::NodeId Graph::add(NodeId a, NodeId b) {
    const Tensor& ta = at(a).value;
    const Tensor& tb = at(b).value;
    Node n;
    n.op = Op::Add;
    n.in = {a, b};
    if (ta.same_shape(tb)) {
        n.value = Tensor(ta.shape);
        for (int64_t i = 0; i < ta.size(); ++i) n.value.data[size_t(i)] = ta.data[size_t(i)] + tb.data[size_t(i)];
    } else if (tb.rank() == 1 && ta.cols() == tb.dim(0)) {
        // bias add: broadcast b over the leading axes of a
        n.value = Tensor(ta.shape);
        const int64_t rows = ta.rows(), cols = ta.cols();
        for (int64_t r = 0; r < rows; ++r)
            for (int64_t c = 0; c < cols; ++c)
                n.value.data[size_t(r * cols + c)] = ta.data[size_t(r * cols + c)] + tb.data[size_t(c)];
    } else {
        op_fail("add", "shape mismatch: " + shape_str(ta.shape) + " vs " + shape_str(tb.shape));
    }
    return push(std::move(n));
}

Graph::NodeId Graph::mul(NodeId a, NodeId b) {
    const Tensor& ta = at(a).value;
    const Tensor& tb = at(b).value;
    if (!ta.same_shape(tb)) op_fail("mul", "shape mismatch: " + shape_str(ta.shape) + " vs " + shape_str(tb.shape));
    Node n;
    n.op = Op::Mul;
    n.in = {a, b};
    n.value = Tensor(ta.shape);
    for (int64_t i = 0; i < ta.size(); ++i) n.value.data[size_t(i)] = ta.data[size_t(i)] * tb.data[size_t(i)];
    return push(std::move(n));
}

Graph::NodeId Graph::scale(NodeId a, float s) {
    const Tensor& ta = at(a).value;
    Node n;
    n.op = Op::Scale;
    n.in = {a};
    n.scalar = s;
    n.value = Tensor(ta.shape);
    for (int64_t i = 0; i < ta.size(); ++i) n.value.data[size_t(i)] = ta.data[size_t(i)] * s;
    return push(std::move(n));
}

Graph::NodeId Graph::softmax(NodeId a) {
    const Tensor& ta = at(a).value;
    Node n;
    n.op = Op::Softmax;
    n.in = {a};
    n.value = Tensor(ta.shape);
    kernels::softmax_rows(n.value.data.data(), ta.data.data(), ta.rows(), int(ta.cols()));
    return push(std::move(n));
}

Graph::NodeId Graph::log_softmax(NodeId a) {
    const Tensor& ta = at(a).value;
    Node n;
    n.op = Op::LogSoftmax;
    n.in = {a};
    n.value = Tensor(ta.shape);
    kernels::log_softmax_rows(n.value.data.data(), ta.data.data(), ta.rows(), int(ta.cols()));
    return push(std::move(n));
}

Graph::NodeId Graph::layer_norm(NodeId x, NodeId gamma, NodeId beta, float eps) {
    const Tensor& tx = at(x).value;
    const Tensor& tg = at(gamma).value;
    const Tensor& tb = at(beta).value;
    const int cols = int(tx.cols());
    if (tg.rank() != 1 || tg.dim(0) != cols || tb.rank() != 1 || tb.dim(0) != cols)
        op_fail("layer_norm", "gamma/beta must be rank 1 of size " + std::to_string(cols));
    Node n;
    n.op = Op::LayerNorm;
    n.in = {x, gamma, beta};
    n.scalar = eps;
    n.value = Tensor(tx.shape);
    const int64_t rows = tx.rows();
    n.aux.resize(size_t(rows) * 2);  // mean, inv_std per row
    kernels::layer_norm_rows(n.value.data.data(), n.aux.data(), n.aux.data() + rows,
                             tx.data.data(), tg.data.data(), tb.data.data(), rows, cols, eps);
    return push(std::move(n));
}

Graph::NodeId Graph::gelu(NodeId a) {
    const Tensor& ta = at(a).value;
    Node n;
    n.op = Op::Gelu;
    n.in = {a};
    n.value = Tensor(ta.shape);
    kernels::gelu(n.value.data.data(), ta.data.data(), ta.size());
    return push(std::move(n));
}

Graph::NodeId Graph::mean(NodeId a) {
    const Tensor& ta = at(a).value;
    Node n;
    n.op = Op::Mean;
    n.in = {a};
    n.value = Tensor({1});
    float acc = 0.0f;
    for (float v : ta.data) acc += v;
    n.value.data[0] = acc / float(ta.size());
    return push(std::move(n));
}

Graph::NodeId Graph::concat(NodeId a, NodeId b, int axis) {
    const Tensor& ta = at(a).value;
    const Tensor& tb = at(b).value;
    if (ta.rank() != tb.rank() || ta.rank() < 1 || ta.rank() > 2)
        op_fail("concat", "operands must be rank 1 or 2 of equal rank");
    if (axis < 0 || axis >= ta.rank()) op_fail("concat", "bad axis");
    Node n;
    n.op = Op::Concat;
    n.in = {a, b};
    n.axis = axis;
    if (ta.rank() == 1) {
        n.value = Tensor({ta.dim(0) + tb.dim(0)});
        std::copy(ta.data.begin(), ta.data.end(), n.value.data.begin());
        std::copy(tb.data.begin(), tb.data.end(), n.value.data.begin() + ta.dim(0));
    } else if (axis == 0) {
        if (ta.dim(1) != tb.dim(1)) op_fail("concat", "column counts differ");
        n.value = Tensor({ta.dim(0) + tb.dim(0), ta.dim(1)});
        std::copy(ta.data.begin(), ta.data.end(), n.value.data.begin());
        std::copy(tb.data.begin(), tb.data.end(), n.value.data.begin() + ta.size());
    } else {
        if (ta.dim(0) != tb.dim(0)) op_fail("concat", "row counts differ");
        const int rows = ta.dim(0), ca = ta.dim(1), cb = tb.dim(1);
        n.value = Tensor({rows, ca + cb});
        for (int r = 0; r < rows; ++r) {
            std::copy(&ta.data[size_t(r) * ca], &ta.data[size_t(r) * ca] + ca,
                      &n.value.data[size_t(r) * (ca + cb)]);
            std::copy(&tb.data[size_t(r) * cb], &tb.data[size_t(r) * cb] + cb,
                      &n.value.data[size_t(r) * (ca + cb) + ca]);
        }
    }
    return push(std::move(n));
}

Graph::NodeId Graph::slice(NodeId a, int axis, int start, int len) {
    const Tensor& ta = at(a).value;
    if (ta.rank() < 1 || ta.rank() > 2) op_fail("slice", "operand must be rank 1 or 2");
    if (axis < 0 || axis >= ta.rank()) op_fail("slice", "bad axis");
    if (start < 0 || len < 1 || start + len > ta.dim(axis)) op_fail("slice", "range out of bounds");
    Node n;
    n.op = Op::Slice;
    n.in = {a};
    n.axis = axis;
    n.start = start;
    n.len = len;
    if (ta.rank() == 1) {
        n.value = Tensor({len});
        std::copy(ta.data.begin() + start, ta.data.begin() + start + len, n.value.data.begin());
    } else if (axis == 0) {
        const int cols = ta.dim(1);
        n.value = Tensor({len, cols});
        std::copy(&ta.data[size_t(start) * cols], &ta.data[size_t(start + len) * cols], n.value.data.begin());
    } else {
        const int rows = ta.dim(0), cols = ta.dim(1);
        n.value = Tensor({rows, len});
        for (int r = 0; r < rows; ++r)
            std::copy(&ta.data[size_t(r) * cols + start], &ta.data[size_t(r) * cols + start] + len,
                      &n.value.data[size_t(r) * len]);
    }
    return push(std::move(n));
}

Graph::NodeId Graph::transpose(NodeId a) {
    const Tensor& ta = at(a).value;
    if (!is_matrix(ta)) op_fail("transpose", "operand must be rank 2");
    Node n;
    n.op = Op::Transpose;
    n.in = {a};
    const int rows = ta.dim(0), cols = ta.dim(1);
    n.value = Tensor({cols, rows});
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            n.value.data[size_t(c) * rows + size_t(r)] = ta.data[size_t(r) * cols + size_t(c)];
    return push(std::move(n));
}

Graph::NodeId Graph::embedding(NodeId table, std::vector<int> ids) {
    const Tensor& tt = at(table).value;
    if (!is_matrix(tt)) op_fail("embedding", "table must be rank 2");
    if (ids.empty()) op_fail("embedding", "empty id list");
    for (int id : ids)
        if (id < 0 || id >= tt.dim(0)) op_fail("embedding", "id " + std::to_string(id) + " out of vocabulary");
    Node n;
    n.op = Op::Embedding;
    n.in = {table};
    const int cols = tt.dim(1);
    n.value = Tensor({int(ids.size()), cols});
    for (size_t i = 0; i < ids.size(); ++i)
        std::copy(&tt.data[size_t(ids[i]) * cols], &tt.data[size_t(ids[i]) * cols] + cols,
                  &n.value.data[i * size_t(cols)]);
    n.ids = std::move(ids);
    return push(std::move(n));
}

Graph::NodeId Graph::l2_normalize(NodeId a, float eps) {
    const Tensor& ta = at(a).value;
    Node n;
    n.op = Op::L2Normalize;
    n.in = {a};
    n.scalar = eps;
    n.value = Tensor(ta.shape);
    const int64_t rows = ta.rows();
    n.aux.resize(size_t(rows));
    kernels::l2_normalize_rows(n.value.data.data(), n.aux.data(), ta.data.data(), rows, int(ta.cols()), eps);
    return push(std::move(n));
}

void Graph::backward(NodeId loss) {
    if (at(loss).value.size() != 1) fail("graph.backward: loss node must be scalar");

    for (auto& n : nodes_) {
        n.grad = Tensor(n.value.shape);  // zero-filled
    }
    nodes_[size_t(loss)].grad.data[0] = 1.0f;
    grads_ready_ = true;

    for (NodeId id = NodeId(nodes_.size()) - 1; id >= 0; --id) {
        Node& n = nodes_[size_t(id)];
        const Tensor& dy = n.grad;
        bool all_zero = true;
        for (float v : dy.data)
            if (v != 0.0f) { all_zero = false; break; }
        if (all_zero) continue;

        switch (n.op) {
            case Op::Input:
            case Op::Param:
                break;
            case Op::MatMul: {
                const Tensor& a = at(n.in[0]).value;
                const Tensor& b = at(n.in[1]).value;
                Tensor& da = at(n.in[0]).grad;
                Tensor& db = at(n.in[1]).grad;
                const int m = a.dim(0), k = a.dim(1), p = b.dim(1);
                // dA += dC * B^T ; dB += A^T * dC
                Tensor tmp({m, k});
                kernels::matmul_nt(tmp.data.data(), dy.data.data(), b.data.data(), m, p, k);
                for (int64_t i = 0; i < tmp.size(); ++i) da.data[size_t(i)] += tmp.data[size_t(i)];
                Tensor tmp2({k, p});
                kernels::matmul_tn(tmp2.data.data(), a.data.data(), dy.data.data(), k, m, p);
                for (int64_t i = 0; i < tmp2.size(); ++i) db.data[size_t(i)] += tmp2.data[size_t(i)];
                break;
            }
            case Op::Add: {
                Tensor& da = at(n.in[0]).grad;
                Tensor& db = at(n.in[1]).grad;
                if (da.same_shape(dy)) {
                    for (int64_t i = 0; i < dy.size(); ++i) da.data[size_t(i)] += dy.data[size_t(i)];
                }
                if (db.same_shape(dy)) {
                    for (int64_t i = 0; i < dy.size(); ++i) db.data[size_t(i)] += dy.data[size_t(i)];
                } else {
                    // bias: sum over rows
                    const int64_t rows = dy.rows(), cols = dy.cols();
                    for (int64_t r = 0; r < rows; ++r)
                        for (int64_t c = 0; c < cols; ++c) db.data[size_t(c)] += dy.data[size_t(r * cols + c)];
                }
                break;
            }
            case Op::Mul: {
                const Tensor& a = at(n.in[0]).value;
                const Tensor& b = at(n.in[1]).value;
                Tensor& da = at(n.in[0]).grad;
                Tensor& db = at(n.in[1]).grad;
                for (int64_t i = 0; i < dy.size(); ++i) {
                    da.data[size_t(i)] += dy.data[size_t(i)] * b.data[size_t(i)];
                    db.data[size_t(i)] += dy.data[size_t(i)] * a.data[size_t(i)];
                }
                break;
            }
            case Op::Scale: {
                Tensor& da = at(n.in[0]).grad;
                for (int64_t i = 0; i < dy.size(); ++i) da.data[size_t(i)] += dy.data[size_t(i)] * n.scalar;
                break;
            }
            case Op::Softmax: {
                Tensor& da = at(n.in[0]).grad;
                const Tensor& y = n.value;
                const int64_t rows = y.rows(), cols = y.cols();
                for (int64_t r = 0; r < rows; ++r) {
                    const float* yr = &y.data[size_t(r * cols)];
                    const float* dr = &dy.data[size_t(r * cols)];
                    float dot = 0.0f;
                    for (int64_t c = 0; c < cols; ++c) dot += dr[c] * yr[c];
                    for (int64_t c = 0; c < cols; ++c)
                        da.data[size_t(r * cols + c)] += yr[c] * (dr[c] - dot);
                }
                break;
            }
            case Op::LogSoftmax: {
                Tensor& da = at(n.in[0]).grad;
                const Tensor& y = n.value;  // log-probs
                const int64_t rows = y.rows(), cols = y.cols();
                for (int64_t r = 0; r < rows; ++r) {
                    const float* yr = &y.data[size_t(r * cols)];
                    const float* dr = &dy.data[size_t(r * cols)];
                    float sum = 0.0f;
                    for (int64_t c = 0; c < cols; ++c) sum += dr[c];
                    for (int64_t c = 0; c < cols; ++c)
                        da.data[size_t(r * cols + c)] += dr[c] - std::exp(yr[c]) * sum;
                }
                break;
            }
            case Op::LayerNorm: {
                const Tensor& x = at(n.in[0]).value;
                const Tensor& gamma = at(n.in[1]).value;
                Tensor& dx = at(n.in[0]).grad;
                Tensor& dg = at(n.in[1]).grad;
                Tensor& db = at(n.in[2]).grad;
                const int64_t rows = x.rows(), cols = x.cols();
                const float* means = n.aux.data();
                const float* inv_stds = n.aux.data() + rows;
                for (int64_t r = 0; r < rows; ++r) {
                    const float mean = means[r], inv_std = inv_stds[r];
                    const float* xr = &x.data[size_t(r * cols)];
                    const float* dr = &dy.data[size_t(r * cols)];
                    float sum_dxhat = 0.0f, sum_dxhat_xhat = 0.0f;
                    for (int64_t c = 0; c < cols; ++c) {
                        float xhat = (xr[c] - mean) * inv_std;
                        float dxhat = dr[c] * gamma.data[size_t(c)];
                        sum_dxhat += dxhat;
                        sum_dxhat_xhat += dxhat * xhat;
                        dg.data[size_t(c)] += dr[c] * xhat;
                        db.data[size_t(c)] += dr[c];
                    }
                    const float inv_cols = 1.0f / float(cols);
                    for (int64_t c = 0; c < cols; ++c) {
                        float xhat = (xr[c] - mean) * inv_std;
                        float dxhat = dr[c] * gamma.data[size_t(c)];
                        dx.data[size_t(r * cols + c)] +=
                            inv_std * (dxhat - inv_cols * sum_dxhat - xhat * inv_cols * sum_dxhat_xhat);
                    }
                }
                break;
            }
            case Op::Gelu: {
                const Tensor& x = at(n.in[0]).value;
                Tensor& dx = at(n.in[0]).grad;
                Tensor tmp(x.shape);
                kernels::gelu_grad(tmp.data.data(), x.data.data(), dy.data.data(), x.size());
                for (int64_t i = 0; i < x.size(); ++i) dx.data[size_t(i)] += tmp.data[size_t(i)];
                break;
            }
            case Op::Mean: {
                Tensor& da = at(n.in[0]).grad;
                const float g = dy.data[0] / float(da.size());
                for (auto& v : da.data) v += g;
                break;
            }
            case Op::Concat: {
                Tensor& da = at(n.in[0]).grad;
                Tensor& db = at(n.in[1]).grad;
                if (da.rank() == 1 || n.axis == 0) {
                    for (int64_t i = 0; i < da.size(); ++i) da.data[size_t(i)] += dy.data[size_t(i)];
                    for (int64_t i = 0; i < db.size(); ++i) db.data[size_t(i)] += dy.data[size_t(da.size() + i)];
                } else {
                    const int rows = da.dim(0), ca = da.dim(1), cb = db.dim(1);
                    for (int r = 0; r < rows; ++r) {
                        for (int c = 0; c < ca; ++c) da.data[size_t(r) * ca + size_t(c)] += dy.data[size_t(r) * (ca + cb) + size_t(c)];
                        for (int c = 0; c < cb; ++c) db.data[size_t(r) * cb + size_t(c)] += dy.data[size_t(r) * (ca + cb) + size_t(ca + c)];
                    }
                }
                break;
            }
            case Op::Slice: {
                Tensor& da = at(n.in[0]).grad;
                if (da.rank() == 1) {
                    for (int i = 0; i < n.len; ++i) da.data[size_t(n.start + i)] += dy.data[size_t(i)];
                } else if (n.axis == 0) {
                    const int cols = da.dim(1);
                    for (int64_t i = 0; i < dy.size(); ++i)
                        da.data[size_t(n.start) * cols + size_t(i)] += dy.data[size_t(i)];
                } else {
                    const int rows = da.dim(0), cols = da.dim(1);
                    for (int r = 0; r < rows; ++r)
                        for (int c = 0; c < n.len; ++c)
                            da.data[size_t(r) * cols + size_t(n.start + c)] += dy.data[size_t(r) * n.len + size_t(c)];
                }
                break;
            }
            case Op::Transpose: {
                Tensor& da = at(n.in[0]).grad;
                const int rows = da.dim(0), cols = da.dim(1);
                for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < cols; ++c)
                        da.data[size_t(r) * cols + size_t(c)] += dy.data[size_t(c) * rows + size_t(r)];
                break;
            }
            case Op::Embedding: {
                Tensor& dt = at(n.in[0]).grad;
                const int cols = dt.dim(1);
                for (size_t i = 0; i < n.ids.size(); ++i)
                    for (int c = 0; c < cols; ++c)
                        dt.data[size_t(n.ids[i]) * cols + size_t(c)] += dy.data[i * size_t(cols) + size_t(c)];
                break;
            }
            case Op::L2Normalize: {
                const Tensor& y = n.value;
                Tensor& dx = at(n.in[0]).grad;
                const int64_t rows = y.rows(), cols = y.cols();
                for (int64_t r = 0; r < rows; ++r) {
                    const float inv_norm = 1.0f / n.aux[size_t(r)];
                    const float* yr = &y.data[size_t(r * cols)];
                    const float* dr = &dy.data[size_t(r * cols)];
                    float dot = 0.0f;
                    for (int64_t c = 0; c < cols; ++c) dot += dr[c] * yr[c];
                    for (int64_t c = 0; c < cols; ++c)
                        dx.data[size_t(r * cols + c)] += inv_norm * (dr[c] - yr[c] * dot);
                }
                break;
            }
        }
    }
}

}  // namespace mopatch
