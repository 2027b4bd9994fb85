#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "seqclr/rng.hpp"

namespace seqclr {

// Sequence-preserving operator inventory: deliberately no horizontal flip and
// no rotation, which would break left-to-right frame alignment.
enum class AugKind {
    linear_contrast,
    gaussian_blur,
    sharpen,
    crop_vertical,
    crop_horizontal,
    perspective,
    piecewise_affine,
};

const char* aug_kind_name(AugKind kind);
AugKind aug_kind_from_name(const std::string& name);

// Parameter ranges per operator plus the subset-size bounds of the sampler.
// apply-time behavior: every operator preserves image dimensions (crops are
// resized back), and outputs stay in the 8-bit range.
struct PipelineSpec {
    std::vector<AugKind> ops;
    int min_ops = 1;
    int max_ops = 5;
    bool resize_back = true;

    double contrast_alpha_lo = 0.5, contrast_alpha_hi = 1.0;
    double blur_sigma_lo = 0.5, blur_sigma_hi = 1.5;
    double sharpen_alpha_lo = 0.0, sharpen_alpha_hi = 0.5;
    double sharpen_lightness_lo = 0.0, sharpen_lightness_hi = 0.5;
    double crop_vertical_hi = 0.40;
    double crop_horizontal_hi = 0.02;
    double perspective_scale_lo = 0.01, perspective_scale_hi = 0.02;
    double piecewise_scale_lo = 0.02, piecewise_scale_hi = 0.03;

    // All seven operators, a 1..5 subset per draw.
    static PipelineSpec standard();
    // Contrast + blur + light cropping, used when training decoders.
    static PipelineSpec light();
    // No-op pipeline (zero ops drawn); for ablations.
    static PipelineSpec none();

    void validate() const;
};

// One operator with every random choice already bound, so application is a
// pure function of (image, op).
struct BoundOp {
    AugKind kind;
    std::vector<double> params;
};

// Draws k ~ U[min_ops, max_ops] distinct operators in uniform random order and
// binds their parameters (including warp displacement draws).
std::vector<BoundOp> sample_pipeline(const PipelineSpec& spec, Rng& rng);

cv::Mat apply_op(const cv::Mat& img, const BoundOp& op);
cv::Mat apply_pipeline(const cv::Mat& img, const std::vector<BoundOp>& ops);

struct AugmentedPair {
    cv::Mat view_a;
    cv::Mat view_b;
    int source_index = 0;
};

// Two independent pipeline draws applied to copies of the image,
// deterministic in (seed, index).
AugmentedPair augment_pair(const cv::Mat& img, const PipelineSpec& spec, std::uint64_t seed,
                           std::uint64_t index, int source_index = 0);

}  // namespace seqclr
