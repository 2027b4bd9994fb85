#include "seqclr/instance_mapping.hpp"

#include "seqclr/errors.hpp"

namespace seqclr {

const char* mapping_kind_name(MappingKind kind) {
    switch (kind) {
        case MappingKind::all_to_instance: return "all_to_instance";
        case MappingKind::window_to_instance: return "window_to_instance";
        case MappingKind::frame_to_instance: return "frame_to_instance";
        case MappingKind::whole_map_flatten: return "whole_map_flatten";
    }
    throw ConfigError("unknown mapping kind");
}

MappingKind mapping_kind_from_name(const std::string& name) {
    for (MappingKind k : {MappingKind::all_to_instance, MappingKind::window_to_instance,
                          MappingKind::frame_to_instance, MappingKind::whole_map_flatten})
        if (name == mapping_kind_name(k)) return k;
    throw ConfigError("unknown mapping kind: " + name);
}

int instances_per_image(const MappingChoice& choice, int frames) {
    switch (choice.kind) {
        case MappingKind::all_to_instance:
        case MappingKind::whole_map_flatten: return 1;
        case MappingKind::window_to_instance:
            if (choice.window_instances < 1)
                throw ConfigError("window_to_instance requires T' >= 1");
            if (choice.window_instances > frames)
                throw ConfigError("window_to_instance: T' exceeds frame count");
            return choice.window_instances;
        case MappingKind::frame_to_instance: return frames;
    }
    throw ConfigError("unknown mapping kind");
}

InstanceSet map_instances(const FeatureSeq& features, const MappingChoice& choice) {
    const int per = instances_per_image(choice, features.length);
    InstanceSet set;
    switch (choice.kind) {
        case MappingKind::all_to_instance:
            set.vectors = pool_rows_adaptive(features.frames, features.batch, features.length, 1);
            break;
        case MappingKind::window_to_instance:
            set.vectors =
                pool_rows_adaptive(features.frames, features.batch, features.length, per);
            break;
        case MappingKind::frame_to_instance: set.vectors = features.frames; break;
        case MappingKind::whole_map_flatten:
            set.vectors =
                reshape(features.frames, {features.batch, features.length * features.dim});
            break;
    }
    set.provenance.reserve(static_cast<std::size_t>(features.batch) * per);
    for (int b = 0; b < features.batch; ++b)
        for (int j = 0; j < per; ++j) set.provenance.emplace_back(b, j);
    return set;
}

std::pair<InstanceSet, InstanceSet> assemble_sets(InstanceSet view_a, InstanceSet view_b) {
    if (view_a.size() != view_b.size() || view_a.provenance != view_b.provenance)
        throw ConfigError("instance sets are misaligned between views");
    if (view_a.vectors.cols() != view_b.vectors.cols())
        throw ConfigError("instance sets have mismatched dimensions");
    return {std::move(view_a), std::move(view_b)};
}

}  // namespace seqclr
