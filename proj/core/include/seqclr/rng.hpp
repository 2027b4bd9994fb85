#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace seqclr {

// Seeded random stream with stdlib-independent draw functions.
//
// std::mt19937_64 output is bit-exact everywhere, but the standard
// distributions are not, so uniform/normal/shuffle are implemented here
// directly on the raw engine output. Substreams are derived with
// derive_seed(seed, index) so per-item work is order-independent.
class Rng {
public:
    Rng() : Rng(0) {}
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform();
    double uniform(double lo, double hi);
    // Uniform integer in [0, n), rejection-sampled (n >= 1).
    std::uint64_t uniform_int(std::uint64_t n);
    int uniform_int(int lo, int hi);  // inclusive bounds

    // Box-Muller with cached spare.
    double normal(double mu = 0.0, double sigma = 1.0);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(static_cast<std::uint64_t>(i)));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Seeded permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n);

    // Child stream independent of the draw position of the parent.
    Rng child(std::uint64_t index) const;

    // Full state round-trip (engine words + Box-Muller spare).
    std::string serialize() const;
    static Rng deserialize(const std::string& text);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
    std::uint64_t seed_ = 0;  // retained only for child derivation
};

// SplitMix64-based mixing of (seed, index) into a fresh seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace seqclr
