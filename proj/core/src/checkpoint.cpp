#include "seqclr/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <utility>
#include <vector>

#include "seqclr/errors.hpp"

namespace seqclr {

namespace {

constexpr char kMagic[8] = {'S', 'Q', 'C', 'L', 'R', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

static_assert(sizeof(double) == 8, "payload format requires 64-bit doubles");

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace

const NamedArray* Checkpoint::find(const std::string& name) const {
    for (const NamedArray& a : arrays)
        if (a.name == name) return &a;
    return nullptr;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    nlohmann::json header;
    header["encoder_config"] = ckpt.encoder_config;
    header["optimizer"] = ckpt.optimizer;
    header["extra"] = ckpt.extra;
    header["iteration"] = ckpt.iteration;
    header["rng_state"] = ckpt.rng_state;
    nlohmann::json dir = nlohmann::json::array();
    for (const NamedArray& a : ckpt.arrays)
        dir.push_back({{"name", a.name}, {"shape", a.shape}});
    header["arrays"] = dir;
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StateError("cannot write checkpoint: " + path.string());
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint64_t>(header_str.size()));
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    for (const NamedArray& a : ckpt.arrays)
        out.write(reinterpret_cast<const char*>(a.values.data()),
                  static_cast<std::streamsize>(a.values.size() * sizeof(double)));
    if (!out) throw StateError("short write on checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StateError("cannot open checkpoint: " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw StateError("not a checkpoint file: " + path.string());
    const std::uint32_t version = read_pod<std::uint32_t>(in);
    if (version != kVersion)
        throw StateError("unsupported checkpoint version " + std::to_string(version));
    const std::uint64_t header_len = read_pod<std::uint64_t>(in);
    std::string header_str(header_len, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw StateError("truncated checkpoint header: " + path.string());

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_str);
    } catch (const nlohmann::json::exception& e) {
        throw StateError(std::string("corrupt checkpoint header: ") + e.what());
    }

    Checkpoint ckpt;
    ckpt.encoder_config = header.at("encoder_config");
    ckpt.optimizer = header.at("optimizer");
    ckpt.extra = header.value("extra", nlohmann::json::object());
    ckpt.iteration = header.at("iteration").get<std::uint64_t>();
    ckpt.rng_state = header.at("rng_state").get<std::string>();
    for (const nlohmann::json& entry : header.at("arrays")) {
        NamedArray a;
        a.name = entry.at("name").get<std::string>();
        a.shape = entry.at("shape").get<std::vector<int>>();
        long numel = 1;
        for (int d : a.shape) numel *= d;
        a.values.resize(numel);
        in.read(reinterpret_cast<char*>(a.values.data()),
                static_cast<std::streamsize>(numel * sizeof(double)));
        if (!in) throw StateError("truncated checkpoint payload: " + path.string());
        ckpt.arrays.push_back(std::move(a));
    }
    return ckpt;
}

std::vector<NamedArray> pack_params(const NamedParams& params) {
    std::vector<NamedArray> out;
    out.reserve(params.size());
    for (const auto& [name, p] : params) out.push_back({name, p.shape(), p.value()});
    return out;
}

void unpack_params(const std::vector<NamedArray>& arrays, const NamedParams& params) {
    for (const auto& [name, p] : params) {
        const NamedArray* found = nullptr;
        for (const NamedArray& a : arrays)
            if (a.name == name) {
                found = &a;
                break;
            }
        if (!found) throw StateError("checkpoint missing parameter: " + name);
        if (found->shape != p.shape())
            throw StateError("checkpoint shape mismatch for parameter: " + name);
        p.node()->value = found->values;
    }
}

std::string params_digest(const NamedParams& params) {
    // FNV-1a over names and raw value bytes; stable across runs and platforms
    // with identical IEEE doubles. Hashed in name order so differently built
    // registries of the same parameters agree.
    std::vector<const std::pair<std::string, Tensor>*> order;
    order.reserve(params.size());
    for (const auto& entry : params) order.push_back(&entry);
    std::sort(order.begin(), order.end(),
              [](const auto* a, const auto* b) { return a->first < b->first; });
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, std::size_t len) {
        const unsigned char* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto* entry : order) {
        mix(entry->first.data(), entry->first.size());
        mix(entry->second.value().data(),
            static_cast<std::size_t>(entry->second.numel()) * sizeof(double));
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace seqclr
