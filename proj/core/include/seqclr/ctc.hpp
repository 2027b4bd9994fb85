#pragma once

#include <string>
#include <vector>

#include "seqclr/charset.hpp"
#include "seqclr/nn.hpp"

namespace seqclr {

// Collapse consecutive repeats, then delete blanks.
std::vector<int> ctc_collapse(const std::vector<int>& path, int blank_id);

// Per-row argmax with lowest-id tie-breaking: [T x K] logits -> T ids.
std::vector<int> greedy_path(ConstMatMap logits);

// True when T frames can emit the target: T >= |target| + #consecutive repeats.
bool ctc_feasible(const std::vector<int>& target, int frames);

// -log p(target | logits) for one sample by the log-space forward recursion
// over the blank-interleaved target; differentiable w.r.t. the raw logits
// (softmax fused). Infeasible targets yield +inf (no gradient).
Tensor ctc_loss_single(const Tensor& logits_t_k, const std::vector<int>& target, int blank_id);

// Batched mean over feasible samples of ctc_loss_single; logits are the
// [(B*T) x K] block layout. Infeasible samples are skipped with a warning;
// if every target is infeasible the result is +inf.
Tensor ctc_loss(const Tensor& logits, int batch, int frames,
                const std::vector<std::vector<int>>& targets, int blank_id);

// Exhaustive reference: sums softmax path probabilities over all K^T paths
// whose collapse equals the target. Exponential in T; tests only.
double ctc_loss_bruteforce(const RowMat& logits, const std::vector<int>& target, int blank_id);

// Greedy best-path decoding of every sample in a logits block.
std::vector<std::string> ctc_decode_batch(const Tensor& logits, int batch, int frames,
                                          const Charset& charset);

}  // namespace seqclr
