#include "seqclr/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace seqclr {

namespace {

thread_local bool g_grad_enabled = true;

long shape_numel(const std::vector<int>& shape) {
    long n = 1;
    for (int d : shape) n *= d;
    return n;
}

void check(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor Tensor::from_array(Array values, std::vector<int> shape, bool requires_grad) {
    check(values.size() == shape_numel(shape), "Tensor::from_array: shape/size mismatch");
    Tensor t;
    t.node_ = std::make_shared<TensorNode>();
    t.node_->shape = std::move(shape);
    t.node_->value = std::move(values);
    t.node_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    Array v = Array::Zero(shape_numel(shape));
    return from_array(std::move(v), std::move(shape), requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double value) {
    Array v = Array::Constant(shape_numel(shape), value);
    return from_array(std::move(v), std::move(shape), false);
}

Tensor Tensor::uniform(std::vector<int> shape, double lo, double hi, Rng& rng,
                       bool requires_grad) {
    Array v(shape_numel(shape));
    for (long i = 0; i < v.size(); ++i) v[i] = rng.uniform(lo, hi);
    return from_array(std::move(v), std::move(shape), requires_grad);
}

Array& Tensor::grad() {
    node_->ensure_grad();
    return node_->grad;
}

double Tensor::item() const {
    check(numel() == 1, "Tensor::item: tensor is not a scalar");
    return node_->value[0];
}

void Tensor::zero_grad() {
    if (node_->grad.size() > 0) node_->grad.setZero();
}

MatMap Tensor::grad_mat() {
    node_->ensure_grad();
    return MatMap(node_->grad.data(), rows(), cols());
}

Tensor make_op(std::vector<int> shape, Array value, std::vector<Tensor> inputs,
               std::function<void(TensorNode&)> backward_fn) {
    bool needs = false;
    if (g_grad_enabled) {
        for (const Tensor& t : inputs)
            if (t.requires_grad()) needs = true;
    }
    Tensor out = Tensor::from_array(std::move(value), std::move(shape), needs);
    if (needs) {
        out.node()->inputs = std::move(inputs);
        out.node()->backward = std::move(backward_fn);
    }
    return out;
}

void backward(const Tensor& root) {
    check(root.numel() == 1, "backward: root must be a scalar");
    // Iterative post-order over the graph.
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> visited;
    std::vector<std::pair<TensorNode*, std::size_t>> stack;
    stack.emplace_back(root.node(), 0);
    visited.insert(root.node());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            TensorNode* child = node->inputs[next].node();
            ++next;
            if (child->requires_grad && !visited.count(child)) {
                visited.insert(child);
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    root.node()->ensure_grad();
    root.node()->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* node = *it;
        if (node->backward) {
            for (Tensor& input : node->inputs)
                if (input.requires_grad()) input.node()->ensure_grad();
            node->backward(*node);
        }
    }
}

// ---------------------------------------------------------------- elementwise

Tensor add(const Tensor& a, const Tensor& b) {
    check(a.numel() == b.numel(), "add: size mismatch");
    return make_op(a.shape(), a.value() + b.value(), {a, b}, [](TensorNode& n) {
        if (n.inputs[0].requires_grad()) n.inputs[0].node()->grad += n.grad;
        if (n.inputs[1].requires_grad()) n.inputs[1].node()->grad += n.grad;
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check(a.numel() == b.numel(), "sub: size mismatch");
    return make_op(a.shape(), a.value() - b.value(), {a, b}, [](TensorNode& n) {
        if (n.inputs[0].requires_grad()) n.inputs[0].node()->grad += n.grad;
        if (n.inputs[1].requires_grad()) n.inputs[1].node()->grad -= n.grad;
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check(a.numel() == b.numel(), "mul: size mismatch");
    return make_op(a.shape(), a.value() * b.value(), {a, b}, [](TensorNode& n) {
        if (n.inputs[0].requires_grad())
            n.inputs[0].node()->grad += n.grad * n.inputs[1].value();
        if (n.inputs[1].requires_grad())
            n.inputs[1].node()->grad += n.grad * n.inputs[0].value();
    });
}

Tensor scale(const Tensor& a, double s) {
    return make_op(a.shape(), a.value() * s, {a}, [s](TensorNode& n) {
        if (n.inputs[0].requires_grad()) n.inputs[0].node()->grad += n.grad * s;
    });
}

Tensor add_rowvec(const Tensor& x, const Tensor& bias) {
    check(x.ndim() == 2 && bias.numel() == x.cols(), "add_rowvec: shape mismatch");
    const int rows = x.rows(), cols = x.cols();
    Array out = x.value();
    MatMap(out.data(), rows, cols).rowwise() +=
        Eigen::Map<const Eigen::RowVectorXd>(bias.value().data(), cols);
    return make_op(x.shape(), std::move(out), {x, bias}, [rows, cols](TensorNode& n) {
        if (n.inputs[0].requires_grad()) n.inputs[0].node()->grad += n.grad;
        if (n.inputs[1].requires_grad()) {
            ConstMatMap g(n.grad.data(), rows, cols);
            Eigen::Map<Eigen::RowVectorXd>(n.inputs[1].node()->grad.data(), cols) +=
                g.colwise().sum();
        }
    });
}

Tensor relu(const Tensor& x) {
    return make_op(x.shape(), x.value().max(0.0), {x}, [](TensorNode& n) {
        if (!n.inputs[0].requires_grad()) return;
        n.inputs[0].node()->grad += n.grad * (n.inputs[0].value() > 0.0).cast<double>();
    });
}

Tensor tanh_of(const Tensor& x) {
    Array y = x.value().tanh();
    return make_op(x.shape(), std::move(y), {x}, [](TensorNode& n) {
        if (!n.inputs[0].requires_grad()) return;
        n.inputs[0].node()->grad += n.grad * (1.0 - n.value.square());
    });
}

Tensor sigmoid(const Tensor& x) {
    Array y = 1.0 / (1.0 + (-x.value()).exp());
    return make_op(x.shape(), std::move(y), {x}, [](TensorNode& n) {
        if (!n.inputs[0].requires_grad()) return;
        n.inputs[0].node()->grad += n.grad * n.value * (1.0 - n.value);
    });
}

// ------------------------------------------------------------- linear algebra

Tensor matmul(const Tensor& a, const Tensor& b) {
    check(a.ndim() == 2 && b.ndim() == 2 && a.cols() == b.rows(), "matmul: shape mismatch");
    const int m = a.rows(), k = a.cols(), n = b.cols();
    Array out(static_cast<long>(m) * n);
    MatMap(out.data(), m, n).noalias() = a.mat() * b.mat();
    return make_op({m, n}, std::move(out), {a, b}, [m, k, n](TensorNode& node) {
        ConstMatMap g(node.grad.data(), m, n);
        const Tensor& a_in = node.inputs[0];
        const Tensor& b_in = node.inputs[1];
        if (a_in.requires_grad())
            MatMap(a_in.node()->grad.data(), m, k).noalias() += g * b_in.mat().transpose();
        if (b_in.requires_grad())
            MatMap(b_in.node()->grad.data(), k, n).noalias() += a_in.mat().transpose() * g;
    });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    check(a.ndim() == 2 && b.ndim() == 2 && a.cols() == b.cols(), "matmul_nt: shape mismatch");
    const int m = a.rows(), k = a.cols(), n = b.rows();
    Array out(static_cast<long>(m) * n);
    MatMap(out.data(), m, n).noalias() = a.mat() * b.mat().transpose();
    return make_op({m, n}, std::move(out), {a, b}, [m, k, n](TensorNode& node) {
        ConstMatMap g(node.grad.data(), m, n);
        const Tensor& a_in = node.inputs[0];
        const Tensor& b_in = node.inputs[1];
        if (a_in.requires_grad())
            MatMap(a_in.node()->grad.data(), m, k).noalias() += g * b_in.mat();
        if (b_in.requires_grad())
            MatMap(b_in.node()->grad.data(), n, k).noalias() += g.transpose() * a_in.mat();
    });
}

// ------------------------------------------------------------------- shape

Tensor reshape(const Tensor& x, std::vector<int> shape) {
    check(shape_numel(shape) == x.numel(), "reshape: element count mismatch");
    return make_op(std::move(shape), x.value(), {x}, [](TensorNode& n) {
        if (n.inputs[0].requires_grad()) n.inputs[0].node()->grad += n.grad;
    });
}

Tensor slice_rows(const Tensor& x, int r0, int r1) {
    check(x.ndim() == 2 && 0 <= r0 && r0 < r1 && r1 <= x.rows(), "slice_rows: bad range");
    const int cols = x.cols();
    const int out_rows = r1 - r0;
    Array out = x.value().segment(static_cast<long>(r0) * cols,
                                  static_cast<long>(out_rows) * cols);
    return make_op({out_rows, cols}, std::move(out), {x}, [r0, out_rows, cols](TensorNode& n) {
        if (!n.inputs[0].requires_grad()) return;
        n.inputs[0].node()->grad.segment(static_cast<long>(r0) * cols,
                                         static_cast<long>(out_rows) * cols) += n.grad;
    });
}

Tensor slice_cols(const Tensor& x, int c0, int c1) {
    check(x.ndim() == 2 && 0 <= c0 && c0 < c1 && c1 <= x.cols(), "slice_cols: bad range");
    const int rows = x.rows(), cols = x.cols(), out_cols = c1 - c0;
    Array out(static_cast<long>(rows) * out_cols);
    MatMap(out.data(), rows, out_cols) = x.mat().middleCols(c0, out_cols);
    return make_op({rows, out_cols}, std::move(out), {x}, [rows, cols, c0, out_cols](TensorNode& n) {
        if (!n.inputs[0].requires_grad()) return;
        ConstMatMap g(n.grad.data(), rows, out_cols);
        MatMap(n.inputs[0].node()->grad.data(), rows, cols).middleCols(c0, out_cols) += g;
    });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    check(a.ndim() == 2 && b.ndim() == 2 && a.rows() == b.rows(), "concat_cols: row mismatch");
    const int rows = a.rows(), ca = a.cols(), cb = b.cols();
    Array out(static_cast<long>(rows) * (ca + cb));
    MatMap o(out.data(), rows, ca + cb);
    o.leftCols(ca) = a.mat();
    o.rightCols(cb) = b.mat();
    return make_op({rows, ca + cb}, std::move(out), {a, b}, [rows, ca, cb](TensorNode& n) {
        ConstMatMap g(n.grad.data(), rows, ca + cb);
        if (n.inputs[0].requires_grad())
            MatMap(n.inputs[0].node()->grad.data(), rows, ca) += g.leftCols(ca);
        if (n.inputs[1].requires_grad())
            MatMap(n.inputs[1].node()->grad.data(), rows, cb) += g.rightCols(cb);
    });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    check(!parts.empty(), "concat_rows: no parts");
    const int cols = parts[0].cols();
    int rows = 0;
    for (const Tensor& p : parts) {
        check(p.ndim() == 2 && p.cols() == cols, "concat_rows: column mismatch");
        rows += p.rows();
    }
    Array out(static_cast<long>(rows) * cols);
    long offset = 0;
    for (const Tensor& p : parts) {
        out.segment(offset, p.numel()) = p.value();
        offset += p.numel();
    }
    return make_op({rows, cols}, std::move(out), parts, [](TensorNode& n) {
        long offset = 0;
        for (Tensor& input : n.inputs) {
            if (input.requires_grad())
                input.node()->grad += n.grad.segment(offset, input.numel());
            offset += input.numel();
        }
    });
}

// --------------------------------------------------------------- reductions

Tensor sum(const Tensor& x) {
    Array out(1);
    out[0] = x.value().sum();
    return make_op({1}, std::move(out), {x}, [](TensorNode& n) {
        if (n.inputs[0].requires_grad()) n.inputs[0].node()->grad += n.grad[0];
    });
}

Tensor mean_rows(const Tensor& x) {
    check(x.ndim() == 2, "mean_rows: 2D input required");
    const int rows = x.rows(), cols = x.cols();
    Array out(cols);
    Eigen::Map<Eigen::RowVectorXd>(out.data(), cols) = x.mat().colwise().mean();
    return make_op({cols}, std::move(out), {x}, [rows, cols](TensorNode& n) {
        if (!n.inputs[0].requires_grad()) return;
        const double inv = 1.0 / rows;
        MatMap g_in(n.inputs[0].node()->grad.data(), rows, cols);
        g_in.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(n.grad.data(), cols) * inv;
    });
}

Tensor softmax_rows(const Tensor& x) {
    check(x.ndim() == 2, "softmax_rows: 2D input required");
    const int rows = x.rows(), cols = x.cols();
    Array out(x.numel());
    ConstMatMap in(x.value().data(), rows, cols);
    MatMap o(out.data(), rows, cols);
    for (int r = 0; r < rows; ++r) {
        const double m = in.row(r).maxCoeff();
        o.row(r) = (in.row(r).array() - m).exp();
        o.row(r) /= o.row(r).sum();
    }
    return make_op(x.shape(), std::move(out), {x}, [rows, cols](TensorNode& n) {
        if (!n.inputs[0].requires_grad()) return;
        ConstMatMap y(n.value.data(), rows, cols);
        ConstMatMap g(n.grad.data(), rows, cols);
        MatMap g_in(n.inputs[0].node()->grad.data(), rows, cols);
        for (int r = 0; r < rows; ++r) {
            const double dot = (y.row(r).array() * g.row(r).array()).sum();
            g_in.row(r).array() += y.row(r).array() * (g.row(r).array() - dot);
        }
    });
}

Tensor log_softmax_rows(const Tensor& x) {
    check(x.ndim() == 2, "log_softmax_rows: 2D input required");
    const int rows = x.rows(), cols = x.cols();
    Array out(x.numel());
    ConstMatMap in(x.value().data(), rows, cols);
    MatMap o(out.data(), rows, cols);
    for (int r = 0; r < rows; ++r) {
        const double m = in.row(r).maxCoeff();
        const double lse = m + std::log((in.row(r).array() - m).exp().sum());
        o.row(r) = in.row(r).array() - lse;
    }
    return make_op(x.shape(), std::move(out), {x}, [rows, cols](TensorNode& n) {
        if (!n.inputs[0].requires_grad()) return;
        ConstMatMap y(n.value.data(), rows, cols);
        ConstMatMap g(n.grad.data(), rows, cols);
        MatMap g_in(n.inputs[0].node()->grad.data(), rows, cols);
        for (int r = 0; r < rows; ++r) {
            const double gsum = g.row(r).sum();
            g_in.row(r).array() += g.row(r).array() - y.row(r).array().exp() * gsum;
        }
    });
}

Tensor logsumexp_rows(const Tensor& x) {
    check(x.ndim() == 2, "logsumexp_rows: 2D input required");
    const int rows = x.rows(), cols = x.cols();
    Array out(rows);
    ConstMatMap in(x.value().data(), rows, cols);
    for (int r = 0; r < rows; ++r) {
        const double m = in.row(r).maxCoeff();
        out[r] = m + std::log((in.row(r).array() - m).exp().sum());
    }
    return make_op({rows}, std::move(out), {x}, [rows, cols](TensorNode& n) {
        if (!n.inputs[0].requires_grad()) return;
        ConstMatMap in(n.inputs[0].value().data(), rows, cols);
        MatMap g_in(n.inputs[0].node()->grad.data(), rows, cols);
        for (int r = 0; r < rows; ++r)
            g_in.row(r).array() += n.grad[r] * (in.row(r).array() - n.value[r]).exp();
    });
}

// --------------------------------------------------------- gather / normalize

Tensor take_elements(const Tensor& x, const std::vector<std::pair<int, int>>& coords) {
    check(x.ndim() == 2, "take_elements: 2D input required");
    const int cols = x.cols();
    Array out(static_cast<long>(coords.size()));
    for (std::size_t i = 0; i < coords.size(); ++i)
        out[static_cast<long>(i)] = x.value()[static_cast<long>(coords[i].first) * cols +
                                              coords[i].second];
    return make_op({static_cast<int>(coords.size())}, std::move(out), {x},
                   [coords, cols](TensorNode& n) {
                       if (!n.inputs[0].requires_grad()) return;
                       Array& g_in = n.inputs[0].node()->grad;
                       for (std::size_t i = 0; i < coords.size(); ++i)
                           g_in[static_cast<long>(coords[i].first) * cols + coords[i].second] +=
                               n.grad[static_cast<long>(i)];
                   });
}

Tensor rows_l2_normalize(const Tensor& x, double eps) {
    check(x.ndim() == 2, "rows_l2_normalize: 2D input required");
    const int rows = x.rows(), cols = x.cols();
    Array out(x.numel());
    Array norms(rows);
    ConstMatMap in(x.value().data(), rows, cols);
    MatMap o(out.data(), rows, cols);
    for (int r = 0; r < rows; ++r) {
        norms[r] = std::max(in.row(r).norm(), eps);
        o.row(r) = in.row(r) / norms[r];
    }
    return make_op(x.shape(), std::move(out), {x}, [rows, cols, norms, eps](TensorNode& n) {
        if (!n.inputs[0].requires_grad()) return;
        ConstMatMap y(n.value.data(), rows, cols);
        ConstMatMap g(n.grad.data(), rows, cols);
        MatMap g_in(n.inputs[0].node()->grad.data(), rows, cols);
        for (int r = 0; r < rows; ++r) {
            if (norms[r] <= eps) {
                g_in.row(r) += g.row(r) / eps;
            } else {
                const double dot = (y.row(r).array() * g.row(r).array()).sum();
                g_in.row(r).array() += (g.row(r).array() - y.row(r).array() * dot) / norms[r];
            }
        }
    });
}

Array finite_difference(const std::function<double()>& f, Tensor& leaf, double step) {
    Array grad(leaf.numel());
    Array& x = leaf.value();
    for (long i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        const double h = step * std::max(1.0, std::abs(saved));
        x[i] = saved + h;
        const double hi = f();
        x[i] = saved - h;
        const double lo = f();
        x[i] = saved;
        grad[i] = (hi - lo) / (2.0 * h);
    }
    return grad;
}

}  // namespace seqclr
