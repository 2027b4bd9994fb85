#include "seqclr/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace seqclr {

namespace {

void check(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

Tensor fan_in_uniform(std::vector<int> shape, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    return Tensor::uniform(std::move(shape), -bound, bound, rng, true);
}

}  // namespace

// ----------------------------------------------------------- sequence layout

Tensor map_to_sequence(const Tensor& x) {
    check(x.ndim() == 4 && x.dim(2) == 1, "map_to_sequence: expected {B, C, 1, W}");
    const int batch = x.dim(0), channels = x.dim(1), width = x.dim(3);
    Array out(static_cast<long>(batch) * width * channels);
    const Array& in = x.value();
    for (int b = 0; b < batch; ++b)
        for (int c = 0; c < channels; ++c) {
            const long in_base = (static_cast<long>(b) * channels + c) * width;
            for (int t = 0; t < width; ++t)
                out[(static_cast<long>(b) * width + t) * channels + c] = in[in_base + t];
        }
    return make_op({batch * width, channels}, std::move(out), {x},
                   [batch, channels, width](TensorNode& n) {
                       if (!n.inputs[0].requires_grad()) return;
                       Array& g_in = n.inputs[0].node()->grad;
                       for (int b = 0; b < batch; ++b)
                           for (int c = 0; c < channels; ++c) {
                               const long in_base = (static_cast<long>(b) * channels + c) * width;
                               for (int t = 0; t < width; ++t)
                                   g_in[in_base + t] +=
                                       n.grad[(static_cast<long>(b) * width + t) * channels + c];
                           }
                   });
}

Tensor time_slice(const Tensor& x, int batch, int frames, int t) {
    check(x.ndim() == 2 && x.rows() == batch * frames, "time_slice: shape mismatch");
    check(0 <= t && t < frames, "time_slice: t out of range");
    const int cols = x.cols();
    Array out(static_cast<long>(batch) * cols);
    for (int b = 0; b < batch; ++b)
        out.segment(static_cast<long>(b) * cols, cols) =
            x.value().segment((static_cast<long>(b) * frames + t) * cols, cols);
    return make_op({batch, cols}, std::move(out), {x}, [batch, frames, t, cols](TensorNode& n) {
        if (!n.inputs[0].requires_grad()) return;
        Array& g_in = n.inputs[0].node()->grad;
        for (int b = 0; b < batch; ++b)
            g_in.segment((static_cast<long>(b) * frames + t) * cols, cols) +=
                n.grad.segment(static_cast<long>(b) * cols, cols);
    });
}

Tensor stack_time(const std::vector<Tensor>& steps, int batch) {
    check(!steps.empty(), "stack_time: no steps");
    const int frames = static_cast<int>(steps.size());
    const int cols = steps[0].cols();
    for (const Tensor& s : steps)
        check(s.ndim() == 2 && s.rows() == batch && s.cols() == cols, "stack_time: shape mismatch");
    Array out(static_cast<long>(batch) * frames * cols);
    for (int t = 0; t < frames; ++t)
        for (int b = 0; b < batch; ++b)
            out.segment((static_cast<long>(b) * frames + t) * cols, cols) =
                steps[static_cast<std::size_t>(t)].value().segment(static_cast<long>(b) * cols,
                                                                   cols);
    return make_op({batch * frames, cols}, std::move(out), steps,
                   [batch, frames, cols](TensorNode& n) {
                       for (int t = 0; t < frames; ++t) {
                           Tensor& step = n.inputs[static_cast<std::size_t>(t)];
                           if (!step.requires_grad()) continue;
                           Array& g_in = step.node()->grad;
                           for (int b = 0; b < batch; ++b)
                               g_in.segment(static_cast<long>(b) * cols, cols) +=
                                   n.grad.segment((static_cast<long>(b) * frames + t) * cols, cols);
                       }
                   });
}

Tensor repeat_rows(const Tensor& x, int times) {
    check(x.ndim() == 2 && times >= 1, "repeat_rows: bad arguments");
    const int rows = x.rows(), cols = x.cols();
    Array out(static_cast<long>(rows) * times * cols);
    for (int r = 0; r < rows; ++r)
        for (int t = 0; t < times; ++t)
            out.segment((static_cast<long>(r) * times + t) * cols, cols) =
                x.value().segment(static_cast<long>(r) * cols, cols);
    return make_op({rows * times, cols}, std::move(out), {x}, [rows, times, cols](TensorNode& n) {
        if (!n.inputs[0].requires_grad()) return;
        Array& g_in = n.inputs[0].node()->grad;
        for (int r = 0; r < rows; ++r)
            for (int t = 0; t < times; ++t)
                g_in.segment(static_cast<long>(r) * cols, cols) +=
                    n.grad.segment((static_cast<long>(r) * times + t) * cols, cols);
    });
}

Tensor pool_rows_adaptive(const Tensor& x, int batch, int frames, int out_frames) {
    check(x.ndim() == 2 && x.rows() == batch * frames, "pool_rows_adaptive: shape mismatch");
    check(1 <= out_frames && out_frames <= frames, "pool_rows_adaptive: bad out_frames");
    const int cols = x.cols();
    // Window j covers input rows [floor(j*T/T'), ceil((j+1)*T/T')).
    std::vector<int> starts(static_cast<std::size_t>(out_frames)),
        ends(static_cast<std::size_t>(out_frames));
    for (int j = 0; j < out_frames; ++j) {
        starts[static_cast<std::size_t>(j)] = (j * frames) / out_frames;
        ends[static_cast<std::size_t>(j)] =
            static_cast<int>(std::ceil(static_cast<double>((j + 1) * frames) / out_frames));
    }
    Array out(static_cast<long>(batch) * out_frames * cols);
    ConstMatMap in(x.value().data(), batch * frames, cols);
    MatMap o(out.data(), batch * out_frames, cols);
    for (int b = 0; b < batch; ++b)
        for (int j = 0; j < out_frames; ++j) {
            const int s = starts[static_cast<std::size_t>(j)],
                      e = ends[static_cast<std::size_t>(j)];
            o.row(b * out_frames + j) =
                in.middleRows(b * frames + s, e - s).colwise().mean();
        }
    return make_op({batch * out_frames, cols}, std::move(out), {x},
                   [batch, frames, out_frames, cols, starts, ends](TensorNode& n) {
                       if (!n.inputs[0].requires_grad()) return;
                       ConstMatMap g(n.grad.data(), batch * out_frames, cols);
                       MatMap g_in(n.inputs[0].node()->grad.data(), batch * frames, cols);
                       for (int b = 0; b < batch; ++b)
                           for (int j = 0; j < out_frames; ++j) {
                               const int s = starts[static_cast<std::size_t>(j)],
                                         e = ends[static_cast<std::size_t>(j)];
                               const double inv = 1.0 / (e - s);
                               for (int t = s; t < e; ++t)
                                   g_in.row(b * frames + t) += g.row(b * out_frames + j) * inv;
                           }
                   });
}

Tensor attend(const Tensor& frames_bt_f, const Tensor& alpha_b_t) {
    check(frames_bt_f.ndim() == 2 && alpha_b_t.ndim() == 2, "attend: 2D inputs required");
    const int batch = alpha_b_t.rows(), frames = alpha_b_t.cols();
    check(frames_bt_f.rows() == batch * frames, "attend: frame/alpha mismatch");
    const int cols = frames_bt_f.cols();
    Array out = Array::Zero(static_cast<long>(batch) * cols);
    ConstMatMap fm(frames_bt_f.value().data(), batch * frames, cols);
    ConstMatMap al(alpha_b_t.value().data(), batch, frames);
    MatMap o(out.data(), batch, cols);
    for (int b = 0; b < batch; ++b)
        for (int t = 0; t < frames; ++t) o.row(b) += al(b, t) * fm.row(b * frames + t);
    return make_op({batch, cols}, std::move(out), {frames_bt_f, alpha_b_t},
                   [batch, frames, cols](TensorNode& n) {
                       ConstMatMap g(n.grad.data(), batch, cols);
                       const Tensor& fm_in = n.inputs[0];
                       const Tensor& al_in = n.inputs[1];
                       ConstMatMap fm(fm_in.value().data(), batch * frames, cols);
                       ConstMatMap al(al_in.value().data(), batch, frames);
                       for (int b = 0; b < batch; ++b)
                           for (int t = 0; t < frames; ++t) {
                               if (fm_in.requires_grad())
                                   MatMap(fm_in.node()->grad.data(), batch * frames, cols)
                                       .row(b * frames + t) += al(b, t) * g.row(b);
                               if (al_in.requires_grad())
                                   MatMap(al_in.node()->grad.data(), batch, frames)(b, t) +=
                                       fm.row(b * frames + t).dot(g.row(b));
                           }
                   });
}

// ----------------------------------------------------------------- image ops

namespace {

struct ConvDims {
    int batch, in_c, in_h, in_w, out_c, out_h, out_w;
};

ConvDims conv_dims(const Tensor& x, int out_c, int kh, int kw, int sh, int sw, int ph, int pw) {
    check(x.ndim() == 4, "conv2d: expected {B, C, H, W}");
    ConvDims d{};
    d.batch = x.dim(0);
    d.in_c = x.dim(1);
    d.in_h = x.dim(2);
    d.in_w = x.dim(3);
    d.out_c = out_c;
    d.out_h = (d.in_h + 2 * ph - kh) / sh + 1;
    d.out_w = (d.in_w + 2 * pw - kw) / sw + 1;
    check(d.out_h >= 1 && d.out_w >= 1, "conv2d: kernel larger than padded input");
    return d;
}

// col: [C*kh*kw x OH*OW] for a single sample.
void im2col(const double* img, const ConvDims& d, int kh, int kw, int sh, int sw, int ph, int pw,
            double* col) {
    const int patch = d.in_c * kh * kw;
    const int out_hw = d.out_h * d.out_w;
    for (int c = 0; c < d.in_c; ++c)
        for (int ki = 0; ki < kh; ++ki)
            for (int kj = 0; kj < kw; ++kj) {
                const int row = (c * kh + ki) * kw + kj;
                double* dst = col + static_cast<long>(row) * out_hw;
                for (int oy = 0; oy < d.out_h; ++oy) {
                    const int iy = oy * sh - ph + ki;
                    for (int ox = 0; ox < d.out_w; ++ox) {
                        const int ix = ox * sw - pw + kj;
                        dst[oy * d.out_w + ox] =
                            (iy >= 0 && iy < d.in_h && ix >= 0 && ix < d.in_w)
                                ? img[(static_cast<long>(c) * d.in_h + iy) * d.in_w + ix]
                                : 0.0;
                    }
                }
            }
    (void)patch;
}

void col2im_add(const double* col, const ConvDims& d, int kh, int kw, int sh, int sw, int ph,
                int pw, double* img) {
    const int out_hw = d.out_h * d.out_w;
    for (int c = 0; c < d.in_c; ++c)
        for (int ki = 0; ki < kh; ++ki)
            for (int kj = 0; kj < kw; ++kj) {
                const int row = (c * kh + ki) * kw + kj;
                const double* src = col + static_cast<long>(row) * out_hw;
                for (int oy = 0; oy < d.out_h; ++oy) {
                    const int iy = oy * sh - ph + ki;
                    if (iy < 0 || iy >= d.in_h) continue;
                    for (int ox = 0; ox < d.out_w; ++ox) {
                        const int ix = ox * sw - pw + kj;
                        if (ix < 0 || ix >= d.in_w) continue;
                        img[(static_cast<long>(c) * d.in_h + iy) * d.in_w + ix] +=
                            src[oy * d.out_w + ox];
                    }
                }
            }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int kh, int kw, int sh,
              int sw, int ph, int pw) {
    const int out_c = weight.rows();
    const ConvDims d = conv_dims(x, out_c, kh, kw, sh, sw, ph, pw);
    check(weight.cols() == d.in_c * kh * kw, "conv2d: weight shape mismatch");
    check(bias.numel() == out_c, "conv2d: bias shape mismatch");

    const int patch = d.in_c * kh * kw;
    const int out_hw = d.out_h * d.out_w;
    const long in_stride = static_cast<long>(d.in_c) * d.in_h * d.in_w;
    const long out_stride = static_cast<long>(out_c) * out_hw;

    // Columns are cached for the backward pass.
    auto cols = std::make_shared<Array>(static_cast<long>(d.batch) * patch * out_hw);
    Array out(static_cast<long>(d.batch) * out_stride);
    for (int b = 0; b < d.batch; ++b) {
        double* col = cols->data() + static_cast<long>(b) * patch * out_hw;
        im2col(x.value().data() + static_cast<long>(b) * in_stride, d, kh, kw, sh, sw, ph, pw,
               col);
        MatMap o(out.data() + static_cast<long>(b) * out_stride, out_c, out_hw);
        o.noalias() = weight.mat() * ConstMatMap(col, patch, out_hw);
        o.colwise() += Eigen::Map<const Eigen::VectorXd>(bias.value().data(), out_c);
    }
    return make_op({d.batch, out_c, d.out_h, d.out_w}, std::move(out), {x, weight, bias},
                   [d, kh, kw, sh, sw, ph, pw, patch, out_hw, in_stride, out_stride,
                    cols](TensorNode& n) {
                       const Tensor& x_in = n.inputs[0];
                       const Tensor& w_in = n.inputs[1];
                       const Tensor& b_in = n.inputs[2];
                       Array col_grad(static_cast<long>(patch) * out_hw);
                       for (int b = 0; b < d.batch; ++b) {
                           ConstMatMap g(n.grad.data() + static_cast<long>(b) * out_stride,
                                         d.out_c, out_hw);
                           const double* col =
                               cols->data() + static_cast<long>(b) * patch * out_hw;
                           if (w_in.requires_grad())
                               MatMap(w_in.node()->grad.data(), d.out_c, patch).noalias() +=
                                   g * ConstMatMap(col, patch, out_hw).transpose();
                           if (b_in.requires_grad())
                               Eigen::Map<Eigen::VectorXd>(b_in.node()->grad.data(), d.out_c) +=
                                   g.rowwise().sum();
                           if (x_in.requires_grad()) {
                               MatMap(col_grad.data(), patch, out_hw).noalias() =
                                   w_in.mat().transpose() * g;
                               col2im_add(col_grad.data(), d, kh, kw, sh, sw, ph, pw,
                                          x_in.node()->grad.data() +
                                              static_cast<long>(b) * in_stride);
                           }
                       }
                   });
}

Tensor maxpool2d(const Tensor& x, int kh, int kw, int sh, int sw, int ph, int pw) {
    check(x.ndim() == 4, "maxpool2d: expected {B, C, H, W}");
    const int batch = x.dim(0), channels = x.dim(1), in_h = x.dim(2), in_w = x.dim(3);
    const int out_h = (in_h + 2 * ph - kh) / sh + 1;
    const int out_w = (in_w + 2 * pw - kw) / sw + 1;
    check(out_h >= 1 && out_w >= 1, "maxpool2d: window larger than padded input");
    const long out_n = static_cast<long>(batch) * channels * out_h * out_w;
    Array out(out_n);
    auto argmax = std::make_shared<std::vector<long>>(static_cast<std::size_t>(out_n));
    const Array& in = x.value();
    long oi = 0;
    for (int b = 0; b < batch; ++b)
        for (int c = 0; c < channels; ++c) {
            const long base = (static_cast<long>(b) * channels + c) * in_h * in_w;
            for (int oy = 0; oy < out_h; ++oy)
                for (int ox = 0; ox < out_w; ++ox, ++oi) {
                    double best = -1e300;
                    long best_idx = -1;
                    for (int ki = 0; ki < kh; ++ki) {
                        const int iy = oy * sh - ph + ki;
                        if (iy < 0 || iy >= in_h) continue;
                        for (int kj = 0; kj < kw; ++kj) {
                            const int ix = ox * sw - pw + kj;
                            if (ix < 0 || ix >= in_w) continue;
                            const long idx = base + static_cast<long>(iy) * in_w + ix;
                            if (in[idx] > best) {
                                best = in[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    check(best_idx >= 0, "maxpool2d: window entirely inside padding");
                    out[oi] = best;
                    (*argmax)[static_cast<std::size_t>(oi)] = best_idx;
                }
        }
    return make_op({batch, channels, out_h, out_w}, std::move(out), {x},
                   [argmax](TensorNode& n) {
                       if (!n.inputs[0].requires_grad()) return;
                       Array& g_in = n.inputs[0].node()->grad;
                       for (long i = 0; i < n.grad.size(); ++i)
                           g_in[(*argmax)[static_cast<std::size_t>(i)]] += n.grad[i];
                   });
}

// -------------------------------------------------------------------- layers

Linear::Linear(int in_dim, int out_dim, Rng& rng) {
    weight = fan_in_uniform({in_dim, out_dim}, in_dim, rng);
    bias = fan_in_uniform({out_dim}, in_dim, rng);
}

Tensor Linear::forward(const Tensor& x) const { return add_rowvec(matmul(x, weight), bias); }

void Linear::register_params(const std::string& prefix, NamedParams& out) {
    out.emplace_back(prefix + ".weight", weight);
    out.emplace_back(prefix + ".bias", bias);
}

Conv2d::Conv2d(int in_c, int out_c, int kh_, int kw_, int sh_, int sw_, int ph_, int pw_,
               Rng& rng)
    : kh(kh_), kw(kw_), sh(sh_), sw(sw_), ph(ph_), pw(pw_), in_channels(in_c),
      out_channels(out_c) {
    const int fan_in = in_c * kh * kw;
    weight = fan_in_uniform({out_c, fan_in}, fan_in, rng);
    bias = fan_in_uniform({out_c}, fan_in, rng);
}

Tensor Conv2d::forward(const Tensor& x) const {
    return conv2d(x, weight, bias, kh, kw, sh, sw, ph, pw);
}

void Conv2d::register_params(const std::string& prefix, NamedParams& out) {
    out.emplace_back(prefix + ".weight", weight);
    out.emplace_back(prefix + ".bias", bias);
}

BatchNorm2d::BatchNorm2d(int channels_) : channels(channels_) {
    gamma = Tensor::from_array(Array::Ones(channels), {channels}, true);
    beta = Tensor::zeros({channels}, true);
    running_mean = Array::Zero(channels);
    running_var = Array::Ones(channels);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool training) const {
    check(x.ndim() == 4 && x.dim(1) == channels, "batchnorm2d: channel mismatch");
    const int batch = x.dim(0), h = x.dim(2), w = x.dim(3);
    const long plane = static_cast<long>(h) * w;
    const long count = static_cast<long>(batch) * plane;

    Array mean(channels), var(channels);
    if (training) {
        for (int c = 0; c < channels; ++c) {
            double s = 0.0, s2 = 0.0;
            for (int b = 0; b < batch; ++b) {
                const double* p =
                    x.value().data() + (static_cast<long>(b) * channels + c) * plane;
                for (long i = 0; i < plane; ++i) {
                    s += p[i];
                    s2 += p[i] * p[i];
                }
            }
            mean[c] = s / count;
            var[c] = s2 / count - mean[c] * mean[c];
        }
        running_mean = (1.0 - momentum) * running_mean + momentum * mean;
        running_var = (1.0 - momentum) * running_var + momentum * var;
    } else {
        mean = running_mean;
        var = running_var;
    }

    Array inv_std = (var + eps).sqrt().inverse();
    Array out(x.numel());
    for (int b = 0; b < batch; ++b)
        for (int c = 0; c < channels; ++c) {
            const long base = (static_cast<long>(b) * channels + c) * plane;
            out.segment(base, plane) =
                (x.value().segment(base, plane) - mean[c]) * inv_std[c] * gamma.value()[c] +
                beta.value()[c];
        }
    const int ch = channels;
    return make_op(x.shape(), std::move(out), {x, gamma, beta},
                   [batch, ch, plane, count, mean, inv_std, training](TensorNode& n) {
                       const Tensor& x_in = n.inputs[0];
                       const Tensor& gamma_in = n.inputs[1];
                       const Tensor& beta_in = n.inputs[2];
                       for (int c = 0; c < ch; ++c) {
                           // Gather per-channel sums over the batch and plane.
                           double g_sum = 0.0, gx_sum = 0.0;
                           for (int b = 0; b < batch; ++b) {
                               const long base = (static_cast<long>(b) * ch + c) * plane;
                               for (long i = 0; i < plane; ++i) {
                                   const double xv =
                                       (x_in.value()[base + i] - mean[c]) * inv_std[c];
                                   g_sum += n.grad[base + i];
                                   gx_sum += n.grad[base + i] * xv;
                               }
                           }
                           if (gamma_in.requires_grad()) gamma_in.node()->grad[c] += gx_sum;
                           if (beta_in.requires_grad()) beta_in.node()->grad[c] += g_sum;
                           if (!x_in.requires_grad()) continue;
                           const double gm = gamma_in.value()[c];
                           for (int b = 0; b < batch; ++b) {
                               const long base = (static_cast<long>(b) * ch + c) * plane;
                               for (long i = 0; i < plane; ++i) {
                                   const double xv =
                                       (x_in.value()[base + i] - mean[c]) * inv_std[c];
                                   double g = n.grad[base + i];
                                   if (training)
                                       g -= (g_sum + xv * gx_sum) / static_cast<double>(count);
                                   x_in.node()->grad[base + i] += gm * inv_std[c] * g;
                               }
                           }
                       }
                   });
}

void BatchNorm2d::register_params(const std::string& prefix, NamedParams& out) {
    out.emplace_back(prefix + ".gamma", gamma);
    out.emplace_back(prefix + ".beta", beta);
}

void BatchNorm2d::register_buffers(const std::string& prefix, NamedBuffers& out) {
    out.emplace_back(prefix + ".running_mean", &running_mean);
    out.emplace_back(prefix + ".running_var", &running_var);
}

LstmParams::LstmParams(int in_dim, int hidden_dim, Rng& rng) : hidden(hidden_dim) {
    wx = fan_in_uniform({in_dim, 4 * hidden_dim}, hidden_dim, rng);
    wh = fan_in_uniform({hidden_dim, 4 * hidden_dim}, hidden_dim, rng);
    b = fan_in_uniform({4 * hidden_dim}, hidden_dim, rng);
}

void LstmParams::register_params(const std::string& prefix, NamedParams& out) {
    out.emplace_back(prefix + ".wx", wx);
    out.emplace_back(prefix + ".wh", wh);
    out.emplace_back(prefix + ".b", b);
}

LstmState lstm_initial_state(int batch, int hidden) {
    return {Tensor::zeros({batch, hidden}), Tensor::zeros({batch, hidden})};
}

LstmState lstm_step(const LstmParams& p, const Tensor& x, const LstmState& state) {
    const int hidden = p.hidden;
    Tensor pre = add_rowvec(add(matmul(x, p.wx), matmul(state.h, p.wh)), p.b);
    Tensor i = sigmoid(slice_cols(pre, 0, hidden));
    Tensor f = sigmoid(slice_cols(pre, hidden, 2 * hidden));
    Tensor g = tanh_of(slice_cols(pre, 2 * hidden, 3 * hidden));
    Tensor o = sigmoid(slice_cols(pre, 3 * hidden, 4 * hidden));
    Tensor c = add(mul(f, state.c), mul(i, g));
    Tensor h = mul(o, tanh_of(c));
    return {h, c};
}

Tensor Lstm::forward(const Tensor& seq, int batch, int frames, bool reverse) const {
    LstmState state = lstm_initial_state(batch, params.hidden);
    std::vector<Tensor> outputs(static_cast<std::size_t>(frames));
    for (int step = 0; step < frames; ++step) {
        const int t = reverse ? frames - 1 - step : step;
        state = lstm_step(params, time_slice(seq, batch, frames, t), state);
        outputs[static_cast<std::size_t>(t)] = state.h;
    }
    return stack_time(outputs, batch);
}

void Lstm::register_params(const std::string& prefix, NamedParams& out) {
    params.register_params(prefix, out);
}

BiLstm::BiLstm(int in_dim, int hidden_dim, Rng& rng)
    : fw(in_dim, hidden_dim, rng), bw(in_dim, hidden_dim, rng) {}

Tensor BiLstm::forward(const Tensor& seq, int batch, int frames) const {
    return concat_cols(fw.forward(seq, batch, frames, false),
                       bw.forward(seq, batch, frames, true));
}

void BiLstm::register_params(const std::string& prefix, NamedParams& out) {
    fw.register_params(prefix + ".fw", out);
    bw.register_params(prefix + ".bw", out);
}

}  // namespace seqclr
