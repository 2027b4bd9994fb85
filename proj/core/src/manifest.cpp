#include "seqclr/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "seqclr/errors.hpp"
#include "seqclr/rng.hpp"

namespace seqclr {

Manifest load_manifest(const std::filesystem::path& dir) {
    const std::filesystem::path tsv = dir / "labels.tsv";
    std::ifstream in(tsv, std::ios::binary);
    if (!in) throw ConfigError("missing manifest file: " + tsv.string());

    Manifest m;
    m.root = dir;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            throw ConfigError(tsv.string() + ":" + std::to_string(line_no) +
                              ": expected <relpath>\\t<transcription>");
        ManifestEntry entry{line.substr(0, tab), line.substr(tab + 1)};
        if (!std::filesystem::exists(dir / entry.relpath))
            throw ConfigError(tsv.string() + ":" + std::to_string(line_no) +
                              ": missing image file " + (dir / entry.relpath).string());
        m.entries.push_back(std::move(entry));
    }
    return m;
}

std::vector<std::string> validate_transcriptions(const Manifest& m, const Charset& charset) {
    std::vector<std::string> report;
    for (int i = 0; i < m.size(); ++i) {
        const ManifestEntry& e = m.entries[static_cast<std::size_t>(i)];
        try {
            (void)charset.encode(e.transcription);
        } catch (const ConfigError& err) {
            report.push_back("entry " + std::to_string(i) + " (" + e.relpath +
                             "): " + err.what());
        }
    }
    return report;
}

std::vector<int> subset_indices(int n, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ConfigError("subset fraction must lie in (0, 1]");
    const int take = static_cast<int>(std::ceil(fraction * n));
    Rng rng(seed);
    std::vector<std::size_t> perm = rng.permutation(static_cast<std::size_t>(n));
    std::vector<int> chosen(perm.begin(), perm.begin() + take);
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

Manifest subset_labels(const Manifest& m, double fraction, std::uint64_t seed) {
    Manifest out;
    out.root = m.root;
    for (int idx : subset_indices(m.size(), fraction, seed))
        out.entries.push_back(m.entries[static_cast<std::size_t>(idx)]);
    return out;
}

std::pair<Manifest, Manifest> split_manifest(const Manifest& m, double val_fraction,
                                             std::uint64_t seed) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw ConfigError("validation fraction must lie in (0, 1)");
    const int n_val = static_cast<int>(std::ceil(val_fraction * m.size()));
    Rng rng(seed);
    std::vector<std::size_t> perm = rng.permutation(static_cast<std::size_t>(m.size()));
    std::vector<char> is_val(static_cast<std::size_t>(m.size()), 0);
    for (int i = 0; i < n_val; ++i) is_val[perm[static_cast<std::size_t>(i)]] = 1;
    Manifest train, val;
    train.root = val.root = m.root;
    for (int i = 0; i < m.size(); ++i)
        (is_val[static_cast<std::size_t>(i)] ? val : train)
            .entries.push_back(m.entries[static_cast<std::size_t>(i)]);
    if (train.entries.empty())
        throw ConfigError("validation fraction leaves no training entries");
    return {std::move(train), std::move(val)};
}

}  // namespace seqclr
