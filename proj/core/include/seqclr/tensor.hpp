#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "seqclr/rng.hpp"

namespace seqclr {

// Reverse-mode autodiff over flat double arrays with row-major shape
// metadata. A Tensor is a shared handle to a graph node; ops record a
// backward closure only while gradients are enabled and some input
// requires them, so inference builds no graph.
//
// Layout conventions used across the codebase:
//   - 2D tensor [R x C]: element (i, j) at flat index i*C + j.
//   - image batch {B, C, H, W}.
//   - frame sequence [(B*T) x F]: sample b occupies the contiguous row
//     block [b*T, (b+1)*T), one row per frame.

using Array = Eigen::ArrayXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

class Tensor;

struct TensorNode {
    std::vector<int> shape;
    Array value;
    Array grad;  // empty until needed
    bool requires_grad = false;
    std::vector<Tensor> inputs;
    std::function<void(TensorNode&)> backward;

    long numel() const { return value.size(); }
    void ensure_grad() {
        if (grad.size() != value.size()) grad = Array::Zero(value.size());
    }
};

class Tensor {
public:
    Tensor() = default;

    static Tensor from_array(Array values, std::vector<int> shape, bool requires_grad = false);
    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value);
    static Tensor uniform(std::vector<int> shape, double lo, double hi, Rng& rng,
                          bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const { return node_->shape; }
    int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
    int ndim() const { return static_cast<int>(node_->shape.size()); }
    long numel() const { return node_->numel(); }
    int rows() const { return node_->shape[0]; }
    int cols() const { return node_->shape[1]; }

    Array& value() { return node_->value; }
    const Array& value() const { return node_->value; }
    Array& grad();
    const Array& grad() const { return node_->grad; }
    double item() const;

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool flag) { node_->requires_grad = flag; }
    void zero_grad();

    MatMap mat() { return MatMap(node_->value.data(), rows(), cols()); }
    ConstMatMap mat() const { return ConstMatMap(node_->value.data(), rows(), cols()); }
    MatMap grad_mat();

    TensorNode* node() const { return node_.get(); }

private:
    std::shared_ptr<TensorNode> node_;

    friend Tensor make_op(std::vector<int> shape, Array value, std::vector<Tensor> inputs,
                          std::function<void(TensorNode&)> backward);
};

// Run reverse-mode accumulation from a scalar root.
void backward(const Tensor& root);

bool grad_enabled();
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

// Internal factory used by every op.
Tensor make_op(std::vector<int> shape, Array value, std::vector<Tensor> inputs,
               std::function<void(TensorNode&)> backward);

// ---- elementwise / broadcast ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_rowvec(const Tensor& x, const Tensor& bias);  // [R x C] + [C]

Tensor relu(const Tensor& x);
Tensor tanh_of(const Tensor& x);
Tensor sigmoid(const Tensor& x);

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);     // [m x k] * [k x n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // [m x k] * [n x k]^T

// ---- shape ----
Tensor reshape(const Tensor& x, std::vector<int> shape);
Tensor slice_rows(const Tensor& x, int r0, int r1);
Tensor slice_cols(const Tensor& x, int c0, int c1);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor concat_rows(const std::vector<Tensor>& parts);

// ---- reductions / softmax ----
Tensor sum(const Tensor& x);                 // -> scalar [1]
Tensor mean_rows(const Tensor& x);           // [R x C] -> [C]
Tensor softmax_rows(const Tensor& x);        // rows sum to 1
Tensor log_softmax_rows(const Tensor& x);
Tensor logsumexp_rows(const Tensor& x);      // [R x C] -> [R]

// ---- gather / normalize ----
// y[i] = x(coords[i].first, coords[i].second); backward scatter-adds.
Tensor take_elements(const Tensor& x, const std::vector<std::pair<int, int>>& coords);
// Row-wise x_r / max(||x_r||, eps). Rows with norm below eps pass their
// gradient straight through (norm treated as the constant eps).
Tensor rows_l2_normalize(const Tensor& x, double eps);

// Central finite-difference derivative of `f` w.r.t. one leaf, for tests.
Array finite_difference(const std::function<double()>& f, Tensor& leaf, double step);

}  // namespace seqclr
