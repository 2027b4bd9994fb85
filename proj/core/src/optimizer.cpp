#include "seqclr/optimizer.hpp"

#include <cmath>

#include "seqclr/errors.hpp"

namespace seqclr {

void OptimizerSpec::validate() const {
    if (!(decay_rate > 0.0 && decay_rate < 1.0))
        throw ConfigError("optimizer: decay_rate must lie in (0,1)");
    if (eps <= 0.0) throw ConfigError("optimizer: eps must be positive");
    if (grad_clip < 0.0) throw ConfigError("optimizer: grad_clip must be >= 0");
    if (weight_decay < 0.0) throw ConfigError("optimizer: weight_decay must be >= 0");
    if (lr_init <= 0.0) throw ConfigError("optimizer: lr_init must be positive");
    double prev = 0.0;
    for (double m : milestones) {
        if (!(m > prev && m < 1.0))
            throw ConfigError("optimizer: milestones must be strictly increasing in (0,1)");
        prev = m;
    }
    if (!(milestone_factor > 0.0 && milestone_factor <= 1.0))
        throw ConfigError("optimizer: milestone_factor must lie in (0,1]");
}

double lr_multiplier(const OptimizerSpec& spec, int iteration, int total_iterations) {
    double mult = 1.0;
    for (double m : spec.milestones)
        if (iteration >= m * total_iterations) mult *= spec.milestone_factor;
    return mult;
}

double clip_global_norm(const NamedParams& params, double max_norm) {
    double sq = 0.0;
    for (const auto& [name, p] : params) {
        p.node()->ensure_grad();  // params outside the last graph count as zero
        const double n = p.grad().matrix().squaredNorm();
        if (!std::isfinite(n))
            throw DivergenceError("non-finite gradient in parameter " + name);
        sq += n;
    }
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double scale = max_norm / norm;
        for (const auto& [name, p] : params) p.node()->grad *= scale;
    }
    return norm;
}

AdaDelta::AdaDelta(NamedParams params, OptimizerSpec spec, int total_iterations)
    : params_(std::move(params)), spec_(std::move(spec)), total_(total_iterations) {
    spec_.validate();
    if (total_ < 1) throw ConfigError("optimizer: total_iterations must be >= 1");
    for (const auto& [name, p] : params_) {
        acc_grad_.push_back(Array::Zero(p.numel()));
        acc_update_.push_back(Array::Zero(p.numel()));
    }
}

void AdaDelta::zero_grad() {
    for (auto& [name, p] : params_) p.zero_grad();
}

void AdaDelta::step(int iteration) {
    clip_global_norm(params_, spec_.grad_clip);
    const double lr = spec_.lr_init * lr_multiplier(spec_, iteration, total_);
    const double rho = spec_.decay_rate;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const Tensor& p = params_[i].second;
        const Array& g = p.node()->grad;
        Array& eg2 = acc_grad_[i];
        Array& ex2 = acc_update_[i];
        eg2 = rho * eg2 + (1.0 - rho) * g.square();
        const Array dx = ((ex2 + spec_.eps) / (eg2 + spec_.eps)).sqrt() * g;
        ex2 = rho * ex2 + (1.0 - rho) * dx.square();
        p.node()->value -= lr * dx + lr * spec_.weight_decay * p.node()->value;
    }
}

std::vector<std::pair<std::string, Array>> AdaDelta::state() const {
    std::vector<std::pair<std::string, Array>> out;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        out.emplace_back("opt/" + params_[i].first + "/acc_grad", acc_grad_[i]);
        out.emplace_back("opt/" + params_[i].first + "/acc_update", acc_update_[i]);
    }
    return out;
}

void AdaDelta::load_state(const std::vector<std::pair<std::string, Array>>& state) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const std::string grad_key = "opt/" + params_[i].first + "/acc_grad";
        const std::string update_key = "opt/" + params_[i].first + "/acc_update";
        bool found_g = false, found_u = false;
        for (const auto& [name, arr] : state) {
            if (name == grad_key) {
                if (arr.size() != acc_grad_[i].size())
                    throw StateError("optimizer state size mismatch for " + name);
                acc_grad_[i] = arr;
                found_g = true;
            } else if (name == update_key) {
                if (arr.size() != acc_update_[i].size())
                    throw StateError("optimizer state size mismatch for " + name);
                acc_update_[i] = arr;
                found_u = true;
            }
        }
        if (!found_g || !found_u)
            throw StateError("optimizer state missing accumulators for " + params_[i].first);
    }
}

}  // namespace seqclr
