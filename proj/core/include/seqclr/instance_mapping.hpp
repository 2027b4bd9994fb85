#pragma once

#include <string>
#include <utility>
#include <vector>

#include "seqclr/encoder.hpp"

namespace seqclr {

enum class MappingKind { all_to_instance, window_to_instance, frame_to_instance,
                         whole_map_flatten };

const char* mapping_kind_name(MappingKind kind);
MappingKind mapping_kind_from_name(const std::string& name);

struct MappingChoice {
    MappingKind kind = MappingKind::window_to_instance;
    int window_instances = 5;  // T' for window_to_instance
};

// Contrastive instances with provenance: vectors is [M x D], row r coming
// from (image_index, instance_index) = provenance[r].
struct InstanceSet {
    Tensor vectors;
    std::vector<std::pair<int, int>> provenance;

    int size() const { return static_cast<int>(provenance.size()); }
};

// Instances per image under a mapping: 1 (all / flatten), T' (window),
// or T (frame).
int instances_per_image(const MappingChoice& choice, int frames);

// Maps each image's frame block to its instances:
//   all_to_instance    -> column mean over the block           [B x F]
//   window_to_instance -> adaptive average pooling to T' rows  [(B*T') x F]
//   frame_to_instance  -> the frames themselves                [(B*T) x F]
//   whole_map_flatten  -> row-major flatten of the block       [B x (T*F)]
InstanceSet map_instances(const FeatureSeq& features, const MappingChoice& choice);

// Pairs two views' instance sets, checking the alignment contract: equal
// sizes and matching provenance row by row.
std::pair<InstanceSet, InstanceSet> assemble_sets(InstanceSet view_a, InstanceSet view_b);

}  // namespace seqclr
