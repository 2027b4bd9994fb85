#include "seqclr/ctc.hpp"

#include <cmath>
#include <iostream>
#include <limits>

#include "seqclr/errors.hpp"

namespace seqclr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logaddexp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Blank-interleaved target: [blank, t1, blank, t2, ..., tL, blank].
std::vector<int> extend_target(const std::vector<int>& target, int blank_id) {
    std::vector<int> ext;
    ext.reserve(2 * target.size() + 1);
    ext.push_back(blank_id);
    for (int c : target) {
        ext.push_back(c);
        ext.push_back(blank_id);
    }
    return ext;
}

RowMat log_softmax_mat(ConstMatMap logits) {
    RowMat lp(logits.rows(), logits.cols());
    for (long r = 0; r < logits.rows(); ++r) {
        const double mx = logits.row(r).maxCoeff();
        const double lse = mx + std::log((logits.row(r).array() - mx).exp().sum());
        lp.row(r) = logits.row(r).array() - lse;
    }
    return lp;
}

// Whether extended-target state s may be reached from s-2 (distinct symbol
// separated by a blank).
bool allow_skip(const std::vector<int>& ext, int blank_id, int s) {
    return s >= 2 && ext[static_cast<std::size_t>(s)] != blank_id &&
           ext[static_cast<std::size_t>(s)] != ext[static_cast<std::size_t>(s - 2)];
}

}  // namespace

std::vector<int> ctc_collapse(const std::vector<int>& path, int blank_id) {
    std::vector<int> out;
    int prev = -1;
    for (int id : path) {
        if (id != prev && id != blank_id) out.push_back(id);
        prev = id;
    }
    return out;
}

std::vector<int> greedy_path(ConstMatMap logits) {
    std::vector<int> path(static_cast<std::size_t>(logits.rows()));
    for (long t = 0; t < logits.rows(); ++t) {
        int best = 0;
        for (long k = 1; k < logits.cols(); ++k)
            if (logits(t, k) > logits(t, best)) best = static_cast<int>(k);
        path[static_cast<std::size_t>(t)] = best;
    }
    return path;
}

bool ctc_feasible(const std::vector<int>& target, int frames) {
    int repeats = 0;
    for (std::size_t i = 1; i < target.size(); ++i)
        if (target[i] == target[i - 1]) ++repeats;
    return frames >= static_cast<int>(target.size()) + repeats;
}

Tensor ctc_loss_single(const Tensor& logits_t_k, const std::vector<int>& target, int blank_id) {
    if (logits_t_k.ndim() != 2) throw ConfigError("ctc_loss_single: logits must be [T x K]");
    const int frames = logits_t_k.rows(), classes = logits_t_k.cols();
    if (blank_id != classes - 1)
        throw ConfigError("ctc_loss_single: blank must be the last class");
    for (int c : target)
        if (c < 0 || c >= blank_id)
            throw ConfigError("ctc_loss_single: target symbol out of range");

    if (!ctc_feasible(target, frames))
        return Tensor::full({1}, std::numeric_limits<double>::infinity());

    const std::vector<int> ext = extend_target(target, blank_id);
    const int s_len = static_cast<int>(ext.size());
    const RowMat lp = log_softmax_mat(
        ConstMatMap(logits_t_k.value().data(), frames, classes));

    RowMat alpha = RowMat::Constant(frames, s_len, kNegInf);
    alpha(0, 0) = lp(0, ext[0]);
    if (s_len > 1) alpha(0, 1) = lp(0, ext[1]);
    for (int t = 1; t < frames; ++t)
        for (int s = 0; s < s_len; ++s) {
            double acc = alpha(t - 1, s);
            if (s >= 1) acc = logaddexp(acc, alpha(t - 1, s - 1));
            if (allow_skip(ext, blank_id, s)) acc = logaddexp(acc, alpha(t - 1, s - 2));
            if (acc != kNegInf) alpha(t, s) = acc + lp(t, ext[static_cast<std::size_t>(s)]);
        }
    double logp = alpha(frames - 1, s_len - 1);
    if (s_len > 1) logp = logaddexp(logp, alpha(frames - 1, s_len - 2));
    if (logp == kNegInf) return Tensor::full({1}, std::numeric_limits<double>::infinity());

    // The backward closure recomputes beta and emits the fused
    // softmax-posterior gradient: d(-logp)/d logits = softmax - occupancy.
    return make_op(
        {1}, Array::Constant(1, -logp), {logits_t_k},
        [frames, classes, s_len, ext, blank_id, lp, alpha, logp](TensorNode& n) {
            if (!n.inputs[0].requires_grad()) return;
            RowMat beta = RowMat::Constant(frames, s_len, kNegInf);
            beta(frames - 1, s_len - 1) = lp(frames - 1, ext[static_cast<std::size_t>(s_len - 1)]);
            if (s_len > 1)
                beta(frames - 1, s_len - 2) =
                    lp(frames - 1, ext[static_cast<std::size_t>(s_len - 2)]);
            for (int t = frames - 2; t >= 0; --t)
                for (int s = 0; s < s_len; ++s) {
                    double acc = beta(t + 1, s);
                    if (s + 1 < s_len) acc = logaddexp(acc, beta(t + 1, s + 1));
                    if (s + 2 < s_len && allow_skip(ext, blank_id, s + 2))
                        acc = logaddexp(acc, beta(t + 1, s + 2));
                    if (acc != kNegInf)
                        beta(t, s) = acc + lp(t, ext[static_cast<std::size_t>(s)]);
                }
            const double g = n.grad[0];
            MatMap g_in(n.inputs[0].node()->grad.data(), frames, classes);
            for (int t = 0; t < frames; ++t) {
                Eigen::ArrayXd occ_log = Eigen::ArrayXd::Constant(classes, kNegInf);
                for (int s = 0; s < s_len; ++s) {
                    const int k = ext[static_cast<std::size_t>(s)];
                    if (alpha(t, s) == kNegInf || beta(t, s) == kNegInf) continue;
                    occ_log[k] = logaddexp(occ_log[k], alpha(t, s) + beta(t, s) - lp(t, k));
                }
                for (int k = 0; k < classes; ++k) {
                    const double occupancy =
                        occ_log[k] == kNegInf ? 0.0 : std::exp(occ_log[k] - logp);
                    g_in(t, k) += g * (std::exp(lp(t, k)) - occupancy);
                }
            }
        });
}

Tensor ctc_loss(const Tensor& logits, int batch, int frames,
                const std::vector<std::vector<int>>& targets, int blank_id) {
    if (static_cast<int>(targets.size()) != batch)
        throw ConfigError("ctc_loss: batch/target count mismatch");
    if (logits.rows() != batch * frames)
        throw ConfigError("ctc_loss: logits rows must equal batch*frames");

    Tensor total;
    int feasible = 0, skipped = 0;
    for (int b = 0; b < batch; ++b) {
        const std::vector<int>& target = targets[static_cast<std::size_t>(b)];
        if (!ctc_feasible(target, frames)) {
            ++skipped;
            continue;
        }
        Tensor term =
            ctc_loss_single(slice_rows(logits, b * frames, (b + 1) * frames), target, blank_id);
        total = feasible == 0 ? term : add(total, term);
        ++feasible;
    }
    if (skipped > 0)
        std::cerr << "warning: skipped " << skipped
                  << " target(s) infeasible for " << frames << " frames\n";
    if (feasible == 0) return Tensor::full({1}, std::numeric_limits<double>::infinity());
    return scale(total, 1.0 / feasible);
}

double ctc_loss_bruteforce(const RowMat& logits, const std::vector<int>& target, int blank_id) {
    const int frames = static_cast<int>(logits.rows());
    const int classes = static_cast<int>(logits.cols());
    RowMat probs(frames, classes);
    for (int t = 0; t < frames; ++t) {
        const Eigen::ArrayXd e = (logits.row(t).array() - logits.row(t).maxCoeff()).exp();
        probs.row(t) = e / e.sum();
    }
    double total = 0.0;
    std::vector<int> path(static_cast<std::size_t>(frames), 0);
    while (true) {
        if (ctc_collapse(path, blank_id) == target) {
            double p = 1.0;
            for (int t = 0; t < frames; ++t) p *= probs(t, path[static_cast<std::size_t>(t)]);
            total += p;
        }
        int t = frames - 1;
        while (t >= 0 && ++path[static_cast<std::size_t>(t)] == classes)
            path[static_cast<std::size_t>(t--)] = 0;
        if (t < 0) break;
    }
    return -std::log(total);
}

std::vector<std::string> ctc_decode_batch(const Tensor& logits, int batch, int frames,
                                          const Charset& charset) {
    const int classes = logits.cols();
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(batch));
    for (int b = 0; b < batch; ++b) {
        ConstMatMap block(logits.value().data() + static_cast<long>(b) * frames * classes,
                          frames, classes);
        out.push_back(charset.decode(ctc_collapse(greedy_path(block), charset.blank_id())));
    }
    return out;
}

}  // namespace seqclr
