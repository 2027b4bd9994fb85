#include "seqclr/synth_render.hpp"

#include <fstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "seqclr/errors.hpp"
#include "seqclr/rng.hpp"

namespace seqclr {

std::vector<int> default_render_fonts() {
    return {cv::FONT_HERSHEY_SIMPLEX, cv::FONT_HERSHEY_DUPLEX, cv::FONT_HERSHEY_COMPLEX,
            cv::FONT_HERSHEY_TRIPLEX, cv::FONT_HERSHEY_PLAIN};
}

namespace {

std::string sample_word(const Charset& charset, std::pair<int, int> length_range, Rng& rng) {
    const int len = rng.uniform_int(length_range.first, length_range.second);
    std::string word;
    for (int i = 0; i < len; ++i) {
        const char32_t cp = charset.symbol_of(rng.uniform_int(charset.size()));
        if (cp < 32 || cp > 126)
            throw ConfigError("renderer supports ASCII charsets only (codepoint " +
                              std::to_string(static_cast<std::uint32_t>(cp)) + ")");
        word.push_back(static_cast<char>(cp));
    }
    return word;
}

cv::Mat render_word(const std::string& word, const std::vector<int>& fonts, Rng& rng) {
    const int font = fonts[static_cast<std::size_t>(rng.uniform_int(
        static_cast<int>(fonts.size())))];
    const double scale = rng.uniform(0.8, 1.5);
    const int thickness = rng.uniform_int(1, 2);
    const int fg = rng.uniform_int(0, 90);
    const int bg = rng.uniform_int(165, 255);

    int baseline = 0;
    const cv::Size text = cv::getTextSize(word, font, scale, thickness, &baseline);
    const int margin_x = rng.uniform_int(4, 12);
    const int margin_y = rng.uniform_int(4, 10);
    const int w = text.width + 2 * margin_x;
    const int h = text.height + baseline + 2 * margin_y;

    cv::Mat canvas(h, w, CV_8UC1, cv::Scalar(bg));
    cv::putText(canvas, word, cv::Point(margin_x, margin_y + text.height), font, scale,
                cv::Scalar(fg), thickness, cv::LINE_AA);
    return canvas;
}

}  // namespace

Manifest render_synthetic(const std::filesystem::path& out_dir, int num, const Charset& charset,
                          std::pair<int, int> length_range, const std::vector<int>& fonts,
                          std::uint64_t seed) {
    if (num < 1) throw ConfigError("render_synthetic: num must be >= 1");
    if (charset.size() < 1) throw ConfigError("render_synthetic: empty charset");
    if (fonts.empty()) throw ConfigError("render_synthetic: no usable font");
    if (length_range.first < 1 || length_range.first > length_range.second)
        throw ConfigError("render_synthetic: invalid length range");

    std::filesystem::create_directories(out_dir);
    Manifest m;
    m.root = out_dir;

    for (int i = 0; i < num; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        const std::string word = sample_word(charset, length_range, rng);
        const cv::Mat canvas = render_word(word, fonts, rng);

        char name[32];
        std::snprintf(name, sizeof(name), "img_%05d.png", i);
        if (!cv::imwrite((out_dir / name).string(), canvas))
            throw ConfigError("render_synthetic: cannot write " + (out_dir / name).string());
        m.entries.push_back({name, word});
    }

    std::ofstream tsv(out_dir / "labels.tsv", std::ios::binary | std::ios::trunc);
    if (!tsv) throw ConfigError("render_synthetic: cannot write labels.tsv");
    for (const ManifestEntry& e : m.entries) tsv << e.relpath << '\t' << e.transcription << '\n';
    return m;
}

Manifest render_synthetic(const std::filesystem::path& out_dir, int num, const Charset& charset,
                          std::pair<int, int> length_range, std::uint64_t seed) {
    return render_synthetic(out_dir, num, charset, length_range, default_render_fonts(), seed);
}

}  // namespace seqclr
