#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seqclr/charset.hpp"
#include "seqclr/encoder.hpp"
#include "seqclr/nn.hpp"

namespace seqclr {

// Autoregressive attention decoder over a frame sequence. Per step t':
//   e_t = a . tanh(W s_{t'-1} + V_att f_t + b)      (additive energies)
//   alpha = softmax(e),  g = sum_t alpha_t f_t      (glimpse)
//   (x, s_t') = LSTM(s_{t'-1}, [g, onehot(y_prev)])
//   y = softmax(W0 x + b0) over charset + [EOW]
// Training teacher-forces the target; inference decodes greedily from [S].
class AttentionDecoder {
public:
    AttentionDecoder() = default;
    AttentionDecoder(int feature_dim, int state_dim, int attention_dim, const Charset& charset,
                     Rng& rng);

    struct Step {
        Tensor alpha;   // [B x T], rows sum to 1
        Tensor output;  // [B x (num_classes)] raw logits
        LstmState state;
    };

    // One decode step for a batch; prev_ids holds the previous symbol per
    // sample (start_id at the first step).
    Step step(const FeatureSeq& features, const LstmState& state,
              const std::vector<int>& prev_ids) const;

    // Teacher-forced mean negative log-likelihood of targets + [EOW].
    Tensor loss(const FeatureSeq& features, const std::vector<std::vector<int>>& targets) const;

    // Greedy decoding until [EOW] or max_len symbols.
    std::vector<std::string> decode(const FeatureSeq& features, const Charset& charset,
                                    int max_len = 25) const;

    void register_params(const std::string& prefix, NamedParams& out);

    int num_classes() const { return num_classes_; }
    int state_dim() const { return state_dim_; }

    Tensor w_state;   // [state x att]
    Tensor v_feat;    // [feat x att]
    Tensor bias_att;  // [att]
    Tensor a_vec;     // [att x 1]
    LstmParams cell;  // input = feat + onehot(num_classes + 1)
    Linear out_map;   // state -> num_classes

private:
    int feature_dim_ = 0, state_dim_ = 0, attention_dim_ = 0;
    int num_classes_ = 0;  // charset symbols + [EOW]
    int onehot_dim_ = 0;   // num_classes + [S]

    LstmState initial_state(int batch) const;
    Tensor onehot(const std::vector<int>& ids) const;
};

}  // namespace seqclr
