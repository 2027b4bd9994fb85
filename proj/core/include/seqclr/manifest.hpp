#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "seqclr/charset.hpp"

namespace seqclr {

struct ManifestEntry {
    std::string relpath;
    std::string transcription;
};

// An immutable dataset listing rooted at a directory containing labels.tsv.
struct Manifest {
    std::filesystem::path root;
    std::vector<ManifestEntry> entries;

    int size() const { return static_cast<int>(entries.size()); }
    std::filesystem::path image_path(int index) const {
        return root / entries[static_cast<std::size_t>(index)].relpath;
    }
};

// Parses <dir>/labels.tsv (UTF-8, one "relpath\ttranscription" per line) and
// verifies every referenced image exists. Throws ConfigError naming the line
// or path on malformed input.
Manifest load_manifest(const std::filesystem::path& dir);

// Returns one message per transcription containing out-of-charset symbols;
// empty when all entries are clean.
std::vector<std::string> validate_transcriptions(const Manifest& m, const Charset& charset);

// Draws ceil(fraction * n) entries without replacement via a seeded
// permutation prefix, so subsets of the same seed are nested across fractions.
// Selected entries keep their original manifest order.
Manifest subset_labels(const Manifest& m, double fraction, std::uint64_t seed);

// The permutation-prefix indices behind subset_labels, for audit sidecars.
std::vector<int> subset_indices(int n, double fraction, std::uint64_t seed);

// Seeded split into (train, validation) with ceil(val_fraction * n) validation
// entries; the two parts partition the manifest.
std::pair<Manifest, Manifest> split_manifest(const Manifest& m, double val_fraction,
                                             std::uint64_t seed);

}  // namespace seqclr
