#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "seqclr/charset.hpp"
#include "seqclr/manifest.hpp"

namespace seqclr {

// OpenCV Hershey font faces usable by the renderer.
std::vector<int> default_render_fonts();

// Renders `num` word images (random strings over the charset; random font,
// scale, grays, and placement) into out_dir and writes labels.tsv. The result
// is a pure function of the seed: per-image substreams derive from
// (seed, index), and re-rendering produces byte-identical files.
// The charset must be ASCII-renderable (codepoints 32..126).
Manifest render_synthetic(const std::filesystem::path& out_dir, int num, const Charset& charset,
                          std::pair<int, int> length_range, const std::vector<int>& fonts,
                          std::uint64_t seed);

// Convenience overload with the default font list.
Manifest render_synthetic(const std::filesystem::path& out_dir, int num, const Charset& charset,
                          std::pair<int, int> length_range, std::uint64_t seed);

}  // namespace seqclr
