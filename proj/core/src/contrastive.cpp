#include "seqclr/contrastive.hpp"

#include <cmath>

#include "seqclr/errors.hpp"

namespace seqclr {

double cosine_similarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v, double eps) {
    const double nu = std::max(u.norm(), eps);
    const double nv = std::max(v.norm(), eps);
    return u.dot(v) / (nu * nv);
}

double nce_term(const Eigen::VectorXd& anchor, const Eigen::VectorXd& positive,
                const std::vector<Eigen::VectorXd>& pool, int anchor_index, double tau) {
    if (tau <= 0.0) throw ConfigError("temperature must be positive");
    double max_logit = -1e300;
    std::vector<double> logits;
    logits.reserve(pool.size());
    for (int i = 0; i < static_cast<int>(pool.size()); ++i) {
        if (i == anchor_index) continue;
        const double s = cosine_similarity(anchor, pool[static_cast<std::size_t>(i)]) / tau;
        logits.push_back(s);
        max_logit = std::max(max_logit, s);
    }
    if (logits.empty()) throw ConfigError("nce_term: pool holds only the anchor");
    double denom = 0.0;
    for (double s : logits) denom += std::exp(s - max_logit);
    const double pos = cosine_similarity(anchor, positive) / tau;
    return -(pos - max_logit - std::log(denom));
}

Tensor contrastive_loss(const Tensor& za, const Tensor& zb, double tau) {
    if (tau <= 0.0) throw ConfigError("temperature must be positive");
    if (za.rows() != zb.rows() || za.cols() != zb.cols())
        throw ConfigError("contrastive_loss: aligned sets must have equal shapes");
    const int m = za.rows();
    const int n = 2 * m;
    if (n < 2) throw ConfigError("contrastive_loss: need at least one pair");

    Tensor pool = concat_rows({rows_l2_normalize(za, kCosineEps),
                               rows_l2_normalize(zb, kCosineEps)});
    Tensor sims = scale(matmul_nt(pool, pool), 1.0 / tau);

    // Knock the diagonal out of every denominator; exp underflows to exactly 0.
    Array mask = Array::Zero(static_cast<long>(n) * n);
    for (int i = 0; i < n; ++i) mask[static_cast<long>(i) * n + i] = -1e30;
    Tensor masked = add(sims, Tensor::from_array(std::move(mask), {n, n}));

    // Positive of anchor r is its counterpart in the other view.
    std::vector<std::pair<int, int>> pos_coords;
    pos_coords.reserve(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) pos_coords.emplace_back(r, (r + m) % n);

    Tensor log_denoms = logsumexp_rows(masked);
    Tensor pos_logits = take_elements(sims, pos_coords);
    return sub(sum(log_denoms), sum(pos_logits));
}

Tensor contrastive_loss(const InstanceSet& za, const InstanceSet& zb, double tau) {
    if (za.provenance != zb.provenance)
        throw ConfigError("contrastive_loss: instance sets are misaligned");
    return contrastive_loss(za.vectors, zb.vectors, tau);
}

double chance_level_per_term(int num_pairs) {
    return std::log(2.0 * num_pairs - 1.0);
}

}  // namespace seqclr
