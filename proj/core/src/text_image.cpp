#include "seqclr/text_image.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "seqclr/errors.hpp"

namespace seqclr {

TextImage image_from_mat(const cv::Mat& m) {
    if (m.empty() || m.depth() != CV_8U || (m.channels() != 1 && m.channels() != 3))
        throw ConfigError("image_from_mat: expected non-empty CV_8UC1 or CV_8UC3");
    TextImage img;
    img.channels = m.channels();
    img.height = m.rows;
    img.width = m.cols;
    img.pixels.resize(static_cast<long>(img.channels) * img.height * img.width);
    const long plane = static_cast<long>(img.height) * img.width;
    for (int y = 0; y < m.rows; ++y) {
        const unsigned char* row = m.ptr<unsigned char>(y);
        for (int x = 0; x < m.cols; ++x)
            for (int c = 0; c < img.channels; ++c)
                img.pixels[c * plane + static_cast<long>(y) * img.width + x] =
                    row[x * img.channels + c] / 255.0;
    }
    return img;
}

cv::Mat mat_from_image(const TextImage& img) {
    cv::Mat m(img.height, img.width, img.channels == 1 ? CV_8UC1 : CV_8UC3);
    const long plane = static_cast<long>(img.height) * img.width;
    for (int y = 0; y < m.rows; ++y) {
        unsigned char* row = m.ptr<unsigned char>(y);
        for (int x = 0; x < m.cols; ++x)
            for (int c = 0; c < img.channels; ++c)
                row[x * img.channels + c] = cv::saturate_cast<unsigned char>(
                    img.pixels[c * plane + static_cast<long>(y) * img.width + x] * 255.0);
    }
    return m;
}

cv::Mat load_image_mat(const std::filesystem::path& path, int channels) {
    if (channels != 1 && channels != 3)
        throw ConfigError("load_image_mat: channels must be 1 or 3");
    cv::Mat m = cv::imread(path.string(),
                           channels == 1 ? cv::IMREAD_GRAYSCALE : cv::IMREAD_COLOR);
    if (m.empty()) throw ConfigError("cannot read image: " + path.string());
    return m;
}

cv::Mat resize_bilinear(const cv::Mat& m, int height, int width) {
    if (m.rows == height && m.cols == width) return m;
    cv::Mat out;
    cv::resize(m, out, cv::Size(width, height), 0.0, 0.0, cv::INTER_LINEAR);
    return out;
}

Tensor stack_images(const std::vector<TextImage>& images) {
    if (images.empty()) throw ConfigError("stack_images: empty batch");
    const int c = images[0].channels, h = images[0].height, w = images[0].width;
    const long per = static_cast<long>(c) * h * w;
    Array out(static_cast<long>(images.size()) * per);
    for (std::size_t i = 0; i < images.size(); ++i) {
        const TextImage& img = images[i];
        if (img.channels != c || img.height != h || img.width != w)
            throw ConfigError("stack_images: mixed image shapes in batch");
        out.segment(static_cast<long>(i) * per, per) = img.pixels;
    }
    return Tensor::from_array(std::move(out), {static_cast<int>(images.size()), c, h, w});
}

Tensor stack_mats(const std::vector<cv::Mat>& mats) {
    std::vector<TextImage> images;
    images.reserve(mats.size());
    for (const cv::Mat& m : mats) images.push_back(image_from_mat(m));
    return stack_images(images);
}

}  // namespace seqclr
