#pragma once

#include <string>
#include <vector>

#include "seqclr/nn.hpp"

namespace seqclr {

struct OptimizerSpec {
    double decay_rate = 0.95;
    double eps = 1e-6;
    double grad_clip = 5.0;       // global-norm threshold, 0 disables
    double weight_decay = 1e-4;   // decoupled
    double lr_init = 10.0;
    std::vector<double> milestones = {0.6, 0.8};  // fractions of total iterations
    double milestone_factor = 0.1;

    void validate() const;
};

// Learning-rate multiplier after the milestone schedule: factor^k once
// iteration passes the k-th milestone fraction of total.
double lr_multiplier(const OptimizerSpec& spec, int iteration, int total_iterations);

// Scales all gradients so their joint norm is at most max_norm; returns the
// pre-clip norm. Throws DivergenceError on non-finite gradients.
double clip_global_norm(const NamedParams& params, double max_norm);

// AdaDelta with decoupled weight decay over a fixed parameter list.
class AdaDelta {
public:
    AdaDelta(NamedParams params, OptimizerSpec spec, int total_iterations);

    void zero_grad();
    // Clips, updates parameters in place, and advances the accumulators.
    // iteration is 0-based and selects the schedule segment.
    void step(int iteration);

    const OptimizerSpec& spec() const { return spec_; }
    const NamedParams& params() const { return params_; }
    int total_iterations() const { return total_; }

    // Accumulator state as named arrays for checkpointing.
    std::vector<std::pair<std::string, Array>> state() const;
    void load_state(const std::vector<std::pair<std::string, Array>>& state);

private:
    NamedParams params_;
    OptimizerSpec spec_;
    int total_ = 0;
    std::vector<Array> acc_grad_, acc_update_;
};

}  // namespace seqclr
