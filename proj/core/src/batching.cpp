#include "seqclr/batching.hpp"

#include "seqclr/errors.hpp"
#include "seqclr/rng.hpp"
#include "seqclr/text_image.hpp"

namespace seqclr {

std::vector<std::vector<int>> epoch_batches(int n, int batch_size, std::uint64_t shuffle_seed,
                                            std::uint64_t epoch) {
    if (n < 1) throw ConfigError("epoch_batches: empty dataset");
    if (batch_size < 1) throw ConfigError("epoch_batches: batch_size must be >= 1");
    Rng rng(derive_seed(shuffle_seed, epoch));
    std::vector<std::size_t> raw = rng.permutation(static_cast<std::size_t>(n));
    std::vector<int> perm(raw.begin(), raw.end());
    std::vector<std::vector<int>> batches;
    for (int start = 0; start < n; start += batch_size) {
        const int stop = std::min(start + batch_size, n);
        batches.emplace_back(perm.begin() + start, perm.begin() + stop);
    }
    return batches;
}

BatchStream::BatchStream(int n, int batch_size, std::uint64_t shuffle_seed)
    : n_(n), batch_size_(batch_size), seed_(shuffle_seed) {
    current_ = epoch_batches(n_, batch_size_, seed_, epoch_);
}

std::vector<int> BatchStream::next() {
    if (cursor_ >= current_.size()) {
        ++epoch_;
        cursor_ = 0;
        current_ = epoch_batches(n_, batch_size_, seed_, epoch_);
    }
    return current_[cursor_++];
}

Dataset::Dataset(Manifest manifest, Charset charset, int channels, int target_height,
                 int target_width)
    : manifest_(std::move(manifest)), charset_(std::move(charset)), channels_(channels),
      height_(target_height), width_(target_width),
      cache_(static_cast<std::size_t>(manifest_.size())) {
    if (manifest_.size() == 0) throw ConfigError("Dataset: empty manifest");
}

const cv::Mat& Dataset::image_mat(int index) const {
    cv::Mat& slot = cache_[static_cast<std::size_t>(index)];
    if (slot.empty())
        slot = resize_bilinear(load_image_mat(manifest_.image_path(index), channels_), height_,
                               width_);
    return slot;
}

const std::string& Dataset::transcription(int index) const {
    ++label_reads_;
    return manifest_.entries[static_cast<std::size_t>(index)].transcription;
}

std::vector<int> Dataset::encoded_label(int index) const {
    return charset_.encode(transcription(index));
}

}  // namespace seqclr
