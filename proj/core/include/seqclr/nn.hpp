#pragma once

#include <string>
#include <utility>
#include <vector>

#include "seqclr/tensor.hpp"

namespace seqclr {

using NamedParams = std::vector<std::pair<std::string, Tensor>>;
// Non-trainable state (e.g. normalization running stats) for checkpoints.
using NamedBuffers = std::vector<std::pair<std::string, Array*>>;

// ---- sequence layout ops (see layout notes in tensor.hpp) ----

// {B, C, 1, W} feature map -> [(B*W) x C]; row b*W + t holds column t of
// sample b. This is the map-to-sequence reshape between the CNN and the
// frame-sequence view.
Tensor map_to_sequence(const Tensor& x);

// Pick frame t of every sample: [(B*T) x F] -> [B x F].
Tensor time_slice(const Tensor& x, int batch, int frames, int t);

// Inverse of per-step slicing: T tensors of [B x F] -> [(B*T) x F].
Tensor stack_time(const std::vector<Tensor>& steps, int batch);

// Tile each row T times: [B x A] -> [(B*T) x A].
Tensor repeat_rows(const Tensor& x, int times);

// Adaptive average pooling over each sample's frame block:
// [(B*T) x F] -> [(B*T') x F], window j = rows [floor(j*T/T'), ceil((j+1)*T/T')).
Tensor pool_rows_adaptive(const Tensor& x, int batch, int frames, int out_frames);

// Attention-weighted frame combination: out[b] = sum_t alpha(b,t) * fm[b*T+t].
Tensor attend(const Tensor& frames_bt_f, const Tensor& alpha_b_t);

// ---- image ops ----

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int kh, int kw,
              int sh, int sw, int ph, int pw);
// Padding cells are ignored (windows clip to the valid input region).
Tensor maxpool2d(const Tensor& x, int kh, int kw, int sh, int sw, int ph = 0, int pw = 0);

// ---- layers ----

class Linear {
public:
    Linear() = default;
    Linear(int in_dim, int out_dim, Rng& rng);
    Tensor forward(const Tensor& x) const;  // [R x in] -> [R x out]
    void register_params(const std::string& prefix, NamedParams& out);
    int in_dim() const { return weight.rows(); }
    int out_dim() const { return weight.cols(); }

    Tensor weight;  // [in x out]
    Tensor bias;    // [out]
};

class Conv2d {
public:
    Conv2d() = default;
    Conv2d(int in_channels, int out_channels, int kh, int kw, int sh, int sw, int ph, int pw,
           Rng& rng);
    Tensor forward(const Tensor& x) const;
    void register_params(const std::string& prefix, NamedParams& out);

    Tensor weight;  // [K x C*kh*kw]
    Tensor bias;    // [K]
    int kh = 0, kw = 0, sh = 1, sw = 1, ph = 0, pw = 0;
    int in_channels = 0, out_channels = 0;
};

// Batch statistics in training mode, running statistics in eval mode.
class BatchNorm2d {
public:
    BatchNorm2d() = default;
    explicit BatchNorm2d(int channels);
    Tensor forward(const Tensor& x, bool training) const;
    void register_params(const std::string& prefix, NamedParams& out);
    void register_buffers(const std::string& prefix, NamedBuffers& out);

    Tensor gamma, beta;
    // Running stats are state, not parameters; mutable so forward stays const.
    mutable Array running_mean, running_var;
    double momentum = 0.1;
    double eps = 1e-5;
    int channels = 0;
};

struct LstmState {
    Tensor h;
    Tensor c;
};

// Shared cell parameters; gate order i, f, g, o along the 4H axis.
struct LstmParams {
    Tensor wx;  // [in x 4H]
    Tensor wh;  // [H x 4H]
    Tensor b;   // [4H]
    int hidden = 0;

    LstmParams() = default;
    LstmParams(int in_dim, int hidden_dim, Rng& rng);
    void register_params(const std::string& prefix, NamedParams& out);
};

LstmState lstm_initial_state(int batch, int hidden);
LstmState lstm_step(const LstmParams& p, const Tensor& x, const LstmState& state);

class Lstm {
public:
    Lstm() = default;
    Lstm(int in_dim, int hidden_dim, Rng& rng) : params(in_dim, hidden_dim, rng) {}
    // [(B*T) x in] -> [(B*T) x H]; reverse=true scans right-to-left but
    // emits outputs in frame order.
    Tensor forward(const Tensor& seq, int batch, int frames, bool reverse = false) const;
    void register_params(const std::string& prefix, NamedParams& out);

    LstmParams params;
};

class BiLstm {
public:
    BiLstm() = default;
    BiLstm(int in_dim, int hidden_dim, Rng& rng);
    Tensor forward(const Tensor& seq, int batch, int frames) const;  // -> [(B*T) x 2H]
    void register_params(const std::string& prefix, NamedParams& out);

    Lstm fw, bw;
};

}  // namespace seqclr
