#pragma once

#include <vector>

#include "seqclr/instance_mapping.hpp"
#include "seqclr/tensor.hpp"

namespace seqclr {

constexpr double kCosineEps = 1e-8;

// Cosine similarity with epsilon-guarded norms.
double cosine_similarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                         double eps = kCosineEps);

// One softmax cross-entropy term: -log( exp(sim(anchor,positive)/tau) /
// sum_{u in pool, u != anchor} exp(sim(anchor,u)/tau) ). The anchor must
// appear in the pool exactly once (it is excluded from the denominator);
// scalar reference path used by tests and oracles.
double nce_term(const Eigen::VectorXd& anchor, const Eigen::VectorXd& positive,
                const std::vector<Eigen::VectorXd>& pool, int anchor_index, double tau);

// Differentiable symmetric contrastive loss over aligned sets: for every r,
// one term with anchor za[r] / positive zb[r] and one with the roles swapped,
// each against the pooled set Z^a u Z^b minus the anchor. Instances from the
// same image's other windows act as negatives. Returns the scalar sum.
Tensor contrastive_loss(const Tensor& za, const Tensor& zb, double tau);
Tensor contrastive_loss(const InstanceSet& za, const InstanceSet& zb, double tau);

// log(2M - 1): the per-term loss when every similarity is equal, e.g. for
// identical instances; the natural chance-level anchor for 2M pooled
// instances.
double chance_level_per_term(int num_pairs);

}  // namespace seqclr
