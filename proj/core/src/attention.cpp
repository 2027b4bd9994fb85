#include "seqclr/attention.hpp"

#include <algorithm>
#include <cmath>

#include "seqclr/errors.hpp"

namespace seqclr {

namespace {

Tensor init_uniform(std::vector<int> shape, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    return Tensor::uniform(std::move(shape), -bound, bound, rng, true);
}

}  // namespace

AttentionDecoder::AttentionDecoder(int feature_dim, int state_dim, int attention_dim,
                                   const Charset& charset, Rng& rng)
    : feature_dim_(feature_dim), state_dim_(state_dim), attention_dim_(attention_dim),
      num_classes_(charset.size() + 1), onehot_dim_(charset.size() + 2) {
    w_state = init_uniform({state_dim, attention_dim}, state_dim, rng);
    v_feat = init_uniform({feature_dim, attention_dim}, feature_dim, rng);
    bias_att = Tensor::zeros({attention_dim}, true);
    a_vec = init_uniform({attention_dim, 1}, attention_dim, rng);
    cell = LstmParams(feature_dim + onehot_dim_, state_dim, rng);
    out_map = Linear(state_dim, num_classes_, rng);
}

LstmState AttentionDecoder::initial_state(int batch) const {
    return lstm_initial_state(batch, state_dim_);
}

Tensor AttentionDecoder::onehot(const std::vector<int>& ids) const {
    const int batch = static_cast<int>(ids.size());
    Array v = Array::Zero(static_cast<long>(batch) * onehot_dim_);
    for (int b = 0; b < batch; ++b) {
        const int id = ids[static_cast<std::size_t>(b)];
        if (id < 0 || id >= onehot_dim_)
            throw ConfigError("attention: previous-symbol id out of range");
        v[static_cast<long>(b) * onehot_dim_ + id] = 1.0;
    }
    return Tensor::from_array(std::move(v), {batch, onehot_dim_});
}

AttentionDecoder::Step AttentionDecoder::step(const FeatureSeq& features, const LstmState& state,
                                              const std::vector<int>& prev_ids) const {
    const int batch = features.batch, frames = features.length;
    if (static_cast<int>(prev_ids.size()) != batch)
        throw ConfigError("attention: prev_ids size must equal batch");

    Tensor state_term = repeat_rows(matmul(state.h, w_state), frames);  // [(B*T) x att]
    Tensor feat_term = matmul(features.frames, v_feat);
    Tensor energies =
        matmul(tanh_of(add_rowvec(add(state_term, feat_term), bias_att)), a_vec);
    Tensor alpha = softmax_rows(reshape(energies, {batch, frames}));

    Tensor glimpse = attend(features.frames, alpha);
    LstmState next = lstm_step(cell, concat_cols(glimpse, onehot(prev_ids)), state);
    return {alpha, out_map.forward(next.h), next};
}

Tensor AttentionDecoder::loss(const FeatureSeq& features,
                              const std::vector<std::vector<int>>& targets) const {
    const int batch = features.batch;
    if (static_cast<int>(targets.size()) != batch)
        throw ConfigError("attention: batch/target count mismatch");
    const int eow = num_classes_ - 1;
    const int start = num_classes_;  // one-hot slot for [S]

    std::size_t max_len = 0;
    for (const auto& t : targets) {
        for (int c : t)
            if (c < 0 || c >= eow) throw ConfigError("attention: target symbol out of range");
        max_len = std::max(max_len, t.size());
    }
    const int steps = static_cast<int>(max_len) + 1;  // targets plus [EOW]

    LstmState state = initial_state(batch);
    std::vector<int> prev(static_cast<std::size_t>(batch), start);
    Tensor total;
    bool first = true;
    for (int t = 0; t < steps; ++t) {
        Step s = step(features, state, prev);
        Tensor log_probs = log_softmax_rows(s.output);

        std::vector<std::pair<int, int>> coords;
        for (int b = 0; b < batch; ++b) {
            const auto& target = targets[static_cast<std::size_t>(b)];
            const int len = static_cast<int>(target.size());
            if (t > len) continue;  // finished: past this sample's [EOW] step
            coords.emplace_back(b, t == len ? eow : target[static_cast<std::size_t>(t)]);
        }
        Tensor nll = scale(sum(take_elements(log_probs, coords)), -1.0);
        total = first ? nll : add(total, nll);
        first = false;

        state = s.state;
        for (int b = 0; b < batch; ++b) {
            const auto& target = targets[static_cast<std::size_t>(b)];
            prev[static_cast<std::size_t>(b)] =
                t < static_cast<int>(target.size()) ? target[static_cast<std::size_t>(t)] : eow;
        }
    }
    return scale(total, 1.0 / batch);
}

std::vector<std::string> AttentionDecoder::decode(const FeatureSeq& features,
                                                  const Charset& charset, int max_len) const {
    if (max_len < 1) throw ConfigError("attention: max_len must be >= 1");
    if (charset.size() + 1 != num_classes_)
        throw ConfigError("attention: charset does not match decoder output size");
    NoGradGuard guard;
    const int batch = features.batch;
    const int eow = num_classes_ - 1;

    LstmState state = initial_state(batch);
    std::vector<int> prev(static_cast<std::size_t>(batch), num_classes_);
    std::vector<std::vector<int>> emitted(static_cast<std::size_t>(batch));
    std::vector<char> done(static_cast<std::size_t>(batch), 0);

    for (int t = 0; t < max_len; ++t) {
        Step s = step(features, state, prev);
        bool all_done = true;
        for (int b = 0; b < batch; ++b) {
            ConstMatMap out(s.output.value().data(), batch, num_classes_);
            int best = 0;
            for (int k = 1; k < num_classes_; ++k)
                if (out(b, k) > out(b, best)) best = k;
            if (!done[static_cast<std::size_t>(b)]) {
                if (best == eow)
                    done[static_cast<std::size_t>(b)] = 1;
                else
                    emitted[static_cast<std::size_t>(b)].push_back(best);
            }
            prev[static_cast<std::size_t>(b)] = best;
            all_done = all_done && done[static_cast<std::size_t>(b)];
        }
        state = s.state;
        if (all_done) break;
    }

    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(batch));
    for (const auto& ids : emitted) out.push_back(charset.decode(ids));
    return out;
}

void AttentionDecoder::register_params(const std::string& prefix, NamedParams& out) {
    out.emplace_back(prefix + ".w_state", w_state);
    out.emplace_back(prefix + ".v_feat", v_feat);
    out.emplace_back(prefix + ".bias_att", bias_att);
    out.emplace_back(prefix + ".a_vec", a_vec);
    cell.register_params(prefix + ".cell", out);
    out_map.register_params(prefix + ".out", out);
}

}  // namespace seqclr
