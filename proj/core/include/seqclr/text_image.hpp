#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "seqclr/tensor.hpp"

namespace seqclr {

// A word image with planar C*H*W intensities in [0,1] and an optional label.
struct TextImage {
    int channels = 1;
    int height = 0;
    int width = 0;
    Array pixels;
    std::string label;
};

// Conversions between 8-bit cv::Mat (CV_8UC1 or CV_8UC3) and [0,1] planes.
TextImage image_from_mat(const cv::Mat& m);
cv::Mat mat_from_image(const TextImage& img);

// Reads an image as 8-bit with the requested channel count (1 or 3).
// Throws ConfigError when the file is missing or undecodable.
cv::Mat load_image_mat(const std::filesystem::path& path, int channels);

// Bilinear resize to height x width; returns the input unchanged if already sized.
cv::Mat resize_bilinear(const cv::Mat& m, int height, int width);

// Stacks images of identical shape into a {B, C, H, W} tensor.
Tensor stack_images(const std::vector<TextImage>& images);
// Stacks 8-bit mats directly, normalizing to [0,1].
Tensor stack_mats(const std::vector<cv::Mat>& mats);

}  // namespace seqclr
