#include "seqclr/augment.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgproc.hpp>

#include "seqclr/errors.hpp"

namespace seqclr {

namespace {
constexpr int kPiecewiseRows = 4;
constexpr int kPiecewiseCols = 4;
}  // namespace

const char* aug_kind_name(AugKind kind) {
    switch (kind) {
        case AugKind::linear_contrast: return "linear_contrast";
        case AugKind::gaussian_blur: return "gaussian_blur";
        case AugKind::sharpen: return "sharpen";
        case AugKind::crop_vertical: return "crop_vertical";
        case AugKind::crop_horizontal: return "crop_horizontal";
        case AugKind::perspective: return "perspective";
        case AugKind::piecewise_affine: return "piecewise_affine";
    }
    throw ConfigError("unknown augmentation kind");
}

AugKind aug_kind_from_name(const std::string& name) {
    for (AugKind k :
         {AugKind::linear_contrast, AugKind::gaussian_blur, AugKind::sharpen,
          AugKind::crop_vertical, AugKind::crop_horizontal, AugKind::perspective,
          AugKind::piecewise_affine})
        if (name == aug_kind_name(k)) return k;
    throw ConfigError("unknown augmentation kind: " + name);
}

PipelineSpec PipelineSpec::standard() {
    PipelineSpec spec;
    spec.ops = {AugKind::linear_contrast, AugKind::gaussian_blur,    AugKind::sharpen,
                AugKind::crop_vertical,   AugKind::crop_horizontal,  AugKind::perspective,
                AugKind::piecewise_affine};
    return spec;
}

PipelineSpec PipelineSpec::light() {
    PipelineSpec spec;
    spec.ops = {AugKind::linear_contrast, AugKind::gaussian_blur, AugKind::crop_vertical,
                AugKind::crop_horizontal};
    spec.max_ops = 3;
    spec.crop_vertical_hi = 0.10;
    spec.crop_horizontal_hi = 0.01;
    return spec;
}

PipelineSpec PipelineSpec::none() {
    PipelineSpec spec;
    spec.min_ops = 0;
    spec.max_ops = 0;
    return spec;
}

void PipelineSpec::validate() const {
    const bool empty_ok = min_ops == 0 && max_ops == 0 && ops.empty();
    if (!empty_ok &&
        !(1 <= min_ops && min_ops <= max_ops && max_ops <= static_cast<int>(ops.size())))
        throw ConfigError("pipeline spec requires 1 <= min_ops <= max_ops <= |ops|");
    if (!resize_back) throw ConfigError("crops must resize back to the source size");

    auto ordered = [](double lo, double hi, const char* what) {
        if (!(lo <= hi))
            throw ConfigError(std::string("pipeline ") + what + ": lo exceeds hi");
    };
    ordered(contrast_alpha_lo, contrast_alpha_hi, "contrast_alpha");
    ordered(blur_sigma_lo, blur_sigma_hi, "blur_sigma");
    ordered(sharpen_alpha_lo, sharpen_alpha_hi, "sharpen_alpha");
    ordered(sharpen_lightness_lo, sharpen_lightness_hi, "sharpen_lightness");
    ordered(perspective_scale_lo, perspective_scale_hi, "perspective_scale");
    ordered(piecewise_scale_lo, piecewise_scale_hi, "piecewise_scale");
    if (!(contrast_alpha_lo >= 0.0 && contrast_alpha_hi <= 1.0))
        throw ConfigError("pipeline contrast_alpha: blend factor must lie in [0, 1]");
    if (blur_sigma_lo <= 0.0) throw ConfigError("pipeline blur_sigma: must be positive");
    if (sharpen_alpha_lo < 0.0 || sharpen_lightness_lo < 0.0)
        throw ConfigError("pipeline sharpen: parameters must be >= 0");
    // Top and bottom crops draw independently from [0, hi]; together they must
    // leave some of the image.
    if (!(crop_vertical_hi >= 0.0 && crop_vertical_hi < 0.5))
        throw ConfigError("pipeline crop_vertical: fraction must lie in [0, 0.5)");
    if (!(crop_horizontal_hi >= 0.0 && crop_horizontal_hi < 0.5))
        throw ConfigError("pipeline crop_horizontal: fraction must lie in [0, 0.5)");
    if (perspective_scale_lo < 0.0 || piecewise_scale_lo < 0.0)
        throw ConfigError("pipeline warp scales must be >= 0");
}

std::vector<BoundOp> sample_pipeline(const PipelineSpec& spec, Rng& rng) {
    spec.validate();
    if (spec.ops.empty()) return {};

    const int k = rng.uniform_int(spec.min_ops, spec.max_ops);
    std::vector<AugKind> order = spec.ops;
    rng.shuffle(order);
    order.resize(static_cast<std::size_t>(k));

    std::vector<BoundOp> bound;
    bound.reserve(order.size());
    for (AugKind kind : order) {
        BoundOp op{kind, {}};
        switch (kind) {
            case AugKind::linear_contrast:
                op.params = {rng.uniform(spec.contrast_alpha_lo, spec.contrast_alpha_hi)};
                break;
            case AugKind::gaussian_blur:
                op.params = {rng.uniform(spec.blur_sigma_lo, spec.blur_sigma_hi)};
                break;
            case AugKind::sharpen:
                op.params = {rng.uniform(spec.sharpen_alpha_lo, spec.sharpen_alpha_hi),
                             rng.uniform(spec.sharpen_lightness_lo, spec.sharpen_lightness_hi)};
                break;
            case AugKind::crop_vertical:
                op.params = {rng.uniform(0.0, spec.crop_vertical_hi),
                             rng.uniform(0.0, spec.crop_vertical_hi)};
                break;
            case AugKind::crop_horizontal:
                op.params = {rng.uniform(0.0, spec.crop_horizontal_hi),
                             rng.uniform(0.0, spec.crop_horizontal_hi)};
                break;
            case AugKind::perspective: {
                op.params.push_back(
                    rng.uniform(spec.perspective_scale_lo, spec.perspective_scale_hi));
                for (int i = 0; i < 8; ++i) op.params.push_back(rng.normal());
                break;
            }
            case AugKind::piecewise_affine: {
                op.params.push_back(
                    rng.uniform(spec.piecewise_scale_lo, spec.piecewise_scale_hi));
                for (int i = 0; i < kPiecewiseRows * kPiecewiseCols * 2; ++i)
                    op.params.push_back(rng.normal());
                break;
            }
        }
        bound.push_back(std::move(op));
    }
    return bound;
}

namespace {

cv::Mat apply_contrast(const cv::Mat& img, double alpha) {
    cv::Mat out;
    // v' = 127 + alpha * (v - 127), saturated; exact identity at alpha = 1.
    img.convertTo(out, CV_8U, alpha, 127.0 * (1.0 - alpha));
    return out;
}

cv::Mat apply_blur(const cv::Mat& img, double sigma) {
    cv::Mat out;
    cv::GaussianBlur(img, out, cv::Size(0, 0), sigma);
    return out;
}

cv::Mat apply_sharpen(const cv::Mat& img, double alpha, double lightness) {
    // Blend of identity with the sharpening kernel [[-1,-1,-1],[-1,8+l,-1],[-1,-1,-1]].
    cv::Mat kernel = cv::Mat::ones(3, 3, CV_64F) * (-alpha);
    kernel.at<double>(1, 1) = (1.0 - alpha) + alpha * (8.0 + lightness);
    cv::Mat out;
    cv::filter2D(img, out, -1, kernel);
    return out;
}

cv::Mat apply_crop(const cv::Mat& img, double first, double second, bool vertical) {
    const int extent = vertical ? img.rows : img.cols;
    int a = static_cast<int>(std::lround(first * extent));
    int b = static_cast<int>(std::lround(second * extent));
    a = std::min(a, extent - 1);
    b = std::min(b, extent - 1 - a);
    if (a == 0 && b == 0) return img.clone();
    const cv::Rect roi = vertical ? cv::Rect(0, a, img.cols, img.rows - a - b)
                                  : cv::Rect(a, 0, img.cols - a - b, img.rows);
    cv::Mat out;
    cv::resize(img(roi), out, img.size(), 0.0, 0.0, cv::INTER_LINEAR);
    return out;
}

cv::Mat apply_perspective(const cv::Mat& img, const std::vector<double>& p) {
    const double std_frac = p[0];
    const double w = img.cols, h = img.rows;
    const cv::Point2f corners[4] = {{0.f, 0.f},
                                    {static_cast<float>(w), 0.f},
                                    {static_cast<float>(w), static_cast<float>(h)},
                                    {0.f, static_cast<float>(h)}};
    cv::Point2f src[4];
    for (int i = 0; i < 4; ++i) {
        src[i].x = corners[i].x + static_cast<float>(p[1 + 2 * i] * std_frac * w);
        src[i].y = corners[i].y + static_cast<float>(p[2 + 2 * i] * std_frac * h);
    }
    const cv::Mat M = cv::getPerspectiveTransform(src, corners);
    cv::Mat out;
    cv::warpPerspective(img, out, M, img.size(), cv::INTER_LINEAR, cv::BORDER_REPLICATE);
    return out;
}

// Backward displacement field interpolated barycentrically over the two
// triangles of each grid cell, so the warp is affine per triangle.
cv::Mat apply_piecewise_affine(const cv::Mat& img, const std::vector<double>& p) {
    const double scale = p[0];
    const int rows = kPiecewiseRows, cols = kPiecewiseCols;
    const double w = img.cols, h = img.rows;

    // Grid displacements in pixels: params hold standard-normal draws (x, y) per point.
    std::vector<double> dx(static_cast<std::size_t>(rows * cols)),
        dy(static_cast<std::size_t>(rows * cols));
    for (int i = 0; i < rows * cols; ++i) {
        dx[static_cast<std::size_t>(i)] = p[1 + 2 * i] * scale * w;
        dy[static_cast<std::size_t>(i)] = p[2 + 2 * i] * scale * h;
    }

    const double cell_w = (w - 1.0) / (cols - 1);
    const double cell_h = (h - 1.0) / (rows - 1);
    cv::Mat map_x(img.rows, img.cols, CV_32F), map_y(img.rows, img.cols, CV_32F);
    for (int y = 0; y < img.rows; ++y)
        for (int x = 0; x < img.cols; ++x) {
            int cj = std::min(static_cast<int>(x / cell_w), cols - 2);
            int ci = std::min(static_cast<int>(y / cell_h), rows - 2);
            const double u = x / cell_w - cj;
            const double v = y / cell_h - ci;
            const int i00 = ci * cols + cj, i01 = i00 + 1, i10 = i00 + cols, i11 = i10 + 1;
            double ddx, ddy;
            if (u + v <= 1.0) {
                ddx = (1 - u - v) * dx[i00] + u * dx[i01] + v * dx[i10];
                ddy = (1 - u - v) * dy[i00] + u * dy[i01] + v * dy[i10];
            } else {
                ddx = (u + v - 1) * dx[i11] + (1 - v) * dx[i01] + (1 - u) * dx[i10];
                ddy = (u + v - 1) * dy[i11] + (1 - v) * dy[i01] + (1 - u) * dy[i10];
            }
            map_x.at<float>(y, x) = static_cast<float>(x + ddx);
            map_y.at<float>(y, x) = static_cast<float>(y + ddy);
        }
    cv::Mat out;
    cv::remap(img, out, map_x, map_y, cv::INTER_LINEAR, cv::BORDER_REPLICATE);
    return out;
}

}  // namespace

cv::Mat apply_op(const cv::Mat& img, const BoundOp& op) {
    switch (op.kind) {
        case AugKind::linear_contrast: return apply_contrast(img, op.params[0]);
        case AugKind::gaussian_blur: return apply_blur(img, op.params[0]);
        case AugKind::sharpen: return apply_sharpen(img, op.params[0], op.params[1]);
        case AugKind::crop_vertical: return apply_crop(img, op.params[0], op.params[1], true);
        case AugKind::crop_horizontal: return apply_crop(img, op.params[0], op.params[1], false);
        case AugKind::perspective: return apply_perspective(img, op.params);
        case AugKind::piecewise_affine: return apply_piecewise_affine(img, op.params);
    }
    throw ConfigError("unknown augmentation kind");
}

cv::Mat apply_pipeline(const cv::Mat& img, const std::vector<BoundOp>& ops) {
    cv::Mat out = img;
    for (const BoundOp& op : ops) out = apply_op(out, op);
    return out.empty() ? img.clone() : (out.data == img.data ? img.clone() : out);
}

AugmentedPair augment_pair(const cv::Mat& img, const PipelineSpec& spec, std::uint64_t seed,
                           std::uint64_t index, int source_index) {
    Rng rng(derive_seed(seed, index));
    const std::vector<BoundOp> ops_a = sample_pipeline(spec, rng);
    const std::vector<BoundOp> ops_b = sample_pipeline(spec, rng);
    return {apply_pipeline(img, ops_a), apply_pipeline(img, ops_b), source_index};
}

}  // namespace seqclr
