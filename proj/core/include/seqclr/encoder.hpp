#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "seqclr/nn.hpp"

namespace seqclr {

enum class Backbone { toy_cnn, resnet29 };
enum class Representation { visual, contextual };
enum class ProjectionHead { none, mlp_per_frame, bilstm };
// Which features the text decoders consume: visual frames, contextual frames,
// or their concatenation.
enum class DecoderInput { visual, contextual, concat };

struct EncoderConfig {
    Backbone backbone = Backbone::toy_cnn;
    int in_channels = 1;
    std::vector<int> toy_channels = {8, 16, 24, 32};
    // Spatial-normalization slot before the backbone; only "identity" exists.
    std::string transform = "identity";
    bool sequence_modeling = true;
    int lstm_hidden = 256;  // per direction, two stacked bidirectional layers
    Representation representation = Representation::contextual;
    ProjectionHead projection_head = ProjectionHead::none;
    // Output width of the per-frame MLP head; per-direction width of the
    // recurrent head (whose output is twice this).
    int projected_dim = 128;

    void validate() const;
};

// A left-to-right frame sequence in the [(B*T) x F] block layout.
struct FeatureSeq {
    Tensor frames;
    int batch = 0;
    int length = 0;
    int dim = 0;
};

struct ToyCnnBackbone {
    std::vector<Conv2d> convs;
    int out_channels = 0;

    ToyCnnBackbone() = default;
    ToyCnnBackbone(int in_channels, const std::vector<int>& channels, Rng& rng);
    Tensor forward(const Tensor& x) const;  // {B,C,32,W} -> {B,F,1,W/4}
    void register_params(const std::string& prefix, NamedParams& out);
};

struct BasicBlock {
    Conv2d conv1, conv2;
    BatchNorm2d bn1, bn2;
    std::optional<Conv2d> down;
    std::optional<BatchNorm2d> down_bn;

    BasicBlock() = default;
    BasicBlock(int in_channels, int out_channels, Rng& rng);
    Tensor forward(const Tensor& x, bool training) const;
    void register_params(const std::string& prefix, NamedParams& out);
    void register_buffers(const std::string& prefix, NamedBuffers& out);
};

struct ResNet29Backbone {
    Conv2d conv0_1, conv0_2, conv1, conv2, conv3, conv4_1, conv4_2;
    BatchNorm2d bn0_1, bn0_2, bn1, bn2, bn3, bn4_1, bn4_2;
    std::vector<BasicBlock> layer1, layer2, layer3, layer4;

    ResNet29Backbone() = default;
    ResNet29Backbone(int in_channels, Rng& rng);
    Tensor forward(const Tensor& x, bool training) const;  // {B,C,32,100} -> {B,512,1,26}
    void register_params(const std::string& prefix, NamedParams& out);
    void register_buffers(const std::string& prefix, NamedBuffers& out);
};

class Encoder {
public:
    Encoder(EncoderConfig cfg, std::uint64_t seed);

    FeatureSeq visual(const Tensor& images, bool training = false) const;
    FeatureSeq contextual(const FeatureSeq& v) const;
    // The configured representation tap (visual or contextual).
    FeatureSeq representation(const Tensor& images, bool training = false) const;
    // Representation passed through the configured projection head.
    FeatureSeq project(const FeatureSeq& r) const;
    FeatureSeq decoder_features(const Tensor& images, DecoderInput which,
                                bool training = false) const;

    int visual_dim() const;
    int representation_dim() const;
    int projected_dim() const;
    int decoder_dim(DecoderInput which) const;
    int frames_for_width(int width) const;

    // Backbone + sequence-modeling parameters (what checkpoints persist as the
    // encoder proper).
    NamedParams encoder_params();
    // Projection-head parameters, kept separate so they can be dropped after
    // pre-training.
    NamedParams projection_params();
    NamedParams all_params();
    // Normalization running statistics (empty for toy_cnn).
    NamedBuffers state_buffers();

    const EncoderConfig& config() const { return cfg_; }

private:
    EncoderConfig cfg_;
    std::optional<ToyCnnBackbone> toy_;
    std::optional<ResNet29Backbone> resnet_;
    std::vector<BiLstm> lstm_layers_;
    std::optional<Linear> mlp1_, mlp2_;
    std::optional<BiLstm> head_lstm_;
};

// Horizontal receptive field [lo, hi) of toy_cnn output frame t, before
// clipping to the image: column stride 4, span 26, left pad offset 11.
std::pair<int, int> toy_cnn_receptive_field(int frame);

const char* backbone_name(Backbone b);
Backbone backbone_from_name(const std::string& name);
const char* representation_name(Representation r);
Representation representation_from_name(const std::string& name);
const char* projection_head_name(ProjectionHead p);
ProjectionHead projection_head_from_name(const std::string& name);
const char* decoder_input_name(DecoderInput d);
DecoderInput decoder_input_from_name(const std::string& name);

}  // namespace seqclr
