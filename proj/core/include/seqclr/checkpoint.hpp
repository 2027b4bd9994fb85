#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqclr/nn.hpp"

namespace seqclr {

struct NamedArray {
    std::string name;
    std::vector<int> shape;
    Array values;
};

// On-disk training state: a JSON header (configs, iteration, rng state, array
// directory) followed by the raw little-endian float64 payload. Save then
// load then save reproduces the file byte for byte.
struct Checkpoint {
    nlohmann::json encoder_config;
    nlohmann::json optimizer;
    nlohmann::json extra;  // free-form provenance (phase, mapping, tau, ...)
    std::uint64_t iteration = 0;
    std::string rng_state;
    std::vector<NamedArray> arrays;

    const NamedArray* find(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);  // StateError on damage

// Tensor values -> named arrays (shapes included).
std::vector<NamedArray> pack_params(const NamedParams& params);
// Copies stored values back into tensors; StateError when a name is missing
// or a shape disagrees.
void unpack_params(const std::vector<NamedArray>& arrays, const NamedParams& params);

// Order-insensitive digest of parameter values, for freeze checks and audit
// logs.
std::string params_digest(const NamedParams& params);

}  // namespace seqclr
