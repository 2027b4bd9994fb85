#pragma once

#include <cstdint>
#include <vector>

#include <opencv2/core.hpp>

#include "seqclr/charset.hpp"
#include "seqclr/manifest.hpp"

namespace seqclr {

// One epoch of index batches: a seeded permutation chunked by batch_size,
// final short batch included. Epochs draw independent substreams from
// (shuffle_seed, epoch).
std::vector<std::vector<int>> epoch_batches(int n, int batch_size, std::uint64_t shuffle_seed,
                                            std::uint64_t epoch);

// Endless batch supply for iteration-driven training loops.
class BatchStream {
public:
    BatchStream(int n, int batch_size, std::uint64_t shuffle_seed);
    std::vector<int> next();

private:
    int n_, batch_size_;
    std::uint64_t seed_, epoch_ = 0;
    std::size_t cursor_ = 0;
    std::vector<std::vector<int>> current_;
};

// Loads, resizes, and caches manifest images; hands out transcriptions through
// a counting accessor so label usage is auditable.
class Dataset {
public:
    Dataset(Manifest manifest, Charset charset, int channels = 1, int target_height = 32,
            int target_width = 100);

    int size() const { return manifest_.size(); }
    const Manifest& manifest() const { return manifest_; }
    const Charset& charset() const { return charset_; }
    int channels() const { return channels_; }
    int height() const { return height_; }
    int width() const { return width_; }

    // 8-bit image resized to the target shape; cached after first load.
    const cv::Mat& image_mat(int index) const;

    // Every call below counts as one label read.
    const std::string& transcription(int index) const;
    std::vector<int> encoded_label(int index) const;

    std::uint64_t label_reads() const { return label_reads_; }

private:
    Manifest manifest_;
    Charset charset_;
    int channels_, height_, width_;
    mutable std::vector<cv::Mat> cache_;
    mutable std::uint64_t label_reads_ = 0;
};

}  // namespace seqclr
