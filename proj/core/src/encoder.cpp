#include "seqclr/encoder.hpp"

#include "seqclr/errors.hpp"

namespace seqclr {

void EncoderConfig::validate() const {
    if (in_channels != 1 && in_channels != 3)
        throw ConfigError("encoder: in_channels must be 1 or 3");
    if (backbone == Backbone::toy_cnn && toy_channels.size() != 4)
        throw ConfigError("encoder: toy_cnn needs exactly 4 channel widths");
    if (transform != "identity")
        throw ConfigError("encoder: unknown transform '" + transform + "'");
    if (representation == Representation::contextual && !sequence_modeling)
        throw ConfigError("encoder: contextual representation requires sequence_modeling");
    if (sequence_modeling && lstm_hidden < 1)
        throw ConfigError("encoder: lstm_hidden must be >= 1");
    if (projection_head != ProjectionHead::none && projected_dim < 1)
        throw ConfigError("encoder: projected_dim must be >= 1");
}

// ------------------------------------------------------------------- toy_cnn

ToyCnnBackbone::ToyCnnBackbone(int in_channels, const std::vector<int>& channels, Rng& rng) {
    int in_c = in_channels;
    for (int out_c : channels) {
        convs.emplace_back(in_c, out_c, 3, 3, 1, 1, 1, 1, rng);
        in_c = out_c;
    }
    out_channels = in_c;
}

Tensor ToyCnnBackbone::forward(const Tensor& x) const {
    if (x.ndim() != 4 || x.dim(2) != 32)
        throw ConfigError("toy_cnn expects {B, C, 32, W} input");
    // Pools (2,2),(2,2),(2,1),(4,1) collapse height 32 -> 1 and width W -> W/4.
    Tensor h = relu(convs[0].forward(x));
    h = maxpool2d(h, 2, 2, 2, 2);
    h = relu(convs[1].forward(h));
    h = maxpool2d(h, 2, 2, 2, 2);
    h = relu(convs[2].forward(h));
    h = maxpool2d(h, 2, 1, 2, 1);
    h = relu(convs[3].forward(h));
    h = maxpool2d(h, 4, 1, 4, 1);
    return h;
}

void ToyCnnBackbone::register_params(const std::string& prefix, NamedParams& out) {
    for (std::size_t i = 0; i < convs.size(); ++i)
        convs[i].register_params(prefix + ".conv" + std::to_string(i), out);
}

std::pair<int, int> toy_cnn_receptive_field(int frame) {
    return {4 * frame - 11, 4 * frame + 15};
}

// ------------------------------------------------------------------ resnet29

BasicBlock::BasicBlock(int in_channels, int out_channels, Rng& rng)
    : conv1(in_channels, out_channels, 3, 3, 1, 1, 1, 1, rng),
      conv2(out_channels, out_channels, 3, 3, 1, 1, 1, 1, rng), bn1(out_channels),
      bn2(out_channels) {
    if (in_channels != out_channels) {
        down.emplace(in_channels, out_channels, 1, 1, 1, 1, 0, 0, rng);
        down_bn.emplace(out_channels);
    }
}

Tensor BasicBlock::forward(const Tensor& x, bool training) const {
    Tensor h = relu(bn1.forward(conv1.forward(x), training));
    h = bn2.forward(conv2.forward(h), training);
    Tensor skip = down ? down_bn->forward(down->forward(x), training) : x;
    return relu(add(h, skip));
}

void BasicBlock::register_params(const std::string& prefix, NamedParams& out) {
    conv1.register_params(prefix + ".conv1", out);
    bn1.register_params(prefix + ".bn1", out);
    conv2.register_params(prefix + ".conv2", out);
    bn2.register_params(prefix + ".bn2", out);
    if (down) {
        down->register_params(prefix + ".down", out);
        down_bn->register_params(prefix + ".down_bn", out);
    }
}

void BasicBlock::register_buffers(const std::string& prefix, NamedBuffers& out) {
    bn1.register_buffers(prefix + ".bn1", out);
    bn2.register_buffers(prefix + ".bn2", out);
    if (down_bn) down_bn->register_buffers(prefix + ".down_bn", out);
}

ResNet29Backbone::ResNet29Backbone(int in_channels, Rng& rng)
    : conv0_1(in_channels, 32, 3, 3, 1, 1, 1, 1, rng), conv0_2(32, 64, 3, 3, 1, 1, 1, 1, rng),
      conv1(128, 128, 3, 3, 1, 1, 1, 1, rng), conv2(256, 256, 3, 3, 1, 1, 1, 1, rng),
      conv3(512, 512, 3, 3, 1, 1, 1, 1, rng), conv4_1(512, 512, 2, 2, 2, 1, 0, 1, rng),
      conv4_2(512, 512, 2, 2, 1, 1, 0, 0, rng), bn0_1(32), bn0_2(64), bn1(128), bn2(256),
      bn3(512), bn4_1(512), bn4_2(512) {
    layer1.emplace_back(64, 128, rng);
    layer2.emplace_back(128, 256, rng);
    layer2.emplace_back(256, 256, rng);
    for (int i = 0; i < 5; ++i) layer3.emplace_back(i == 0 ? 256 : 512, 512, rng);
    for (int i = 0; i < 3; ++i) layer4.emplace_back(512, 512, rng);
}

Tensor ResNet29Backbone::forward(const Tensor& x, bool training) const {
    Tensor h = relu(bn0_1.forward(conv0_1.forward(x), training));
    h = relu(bn0_2.forward(conv0_2.forward(h), training));
    h = maxpool2d(h, 2, 2, 2, 2);
    for (const BasicBlock& b : layer1) h = b.forward(h, training);
    h = relu(bn1.forward(conv1.forward(h), training));
    h = maxpool2d(h, 2, 2, 2, 2);
    for (const BasicBlock& b : layer2) h = b.forward(h, training);
    h = relu(bn2.forward(conv2.forward(h), training));
    h = maxpool2d(h, 2, 2, 2, 1, 0, 1);
    for (const BasicBlock& b : layer3) h = b.forward(h, training);
    h = relu(bn3.forward(conv3.forward(h), training));
    for (const BasicBlock& b : layer4) h = b.forward(h, training);
    h = relu(bn4_1.forward(conv4_1.forward(h), training));
    h = relu(bn4_2.forward(conv4_2.forward(h), training));
    return h;
}

void ResNet29Backbone::register_params(const std::string& prefix, NamedParams& out) {
    conv0_1.register_params(prefix + ".conv0_1", out);
    bn0_1.register_params(prefix + ".bn0_1", out);
    conv0_2.register_params(prefix + ".conv0_2", out);
    bn0_2.register_params(prefix + ".bn0_2", out);
    auto reg_layer = [&](std::vector<BasicBlock>& layer, const std::string& name) {
        for (std::size_t i = 0; i < layer.size(); ++i)
            layer[i].register_params(prefix + "." + name + "." + std::to_string(i), out);
    };
    reg_layer(layer1, "layer1");
    conv1.register_params(prefix + ".conv1", out);
    bn1.register_params(prefix + ".bn1", out);
    reg_layer(layer2, "layer2");
    conv2.register_params(prefix + ".conv2", out);
    bn2.register_params(prefix + ".bn2", out);
    reg_layer(layer3, "layer3");
    conv3.register_params(prefix + ".conv3", out);
    bn3.register_params(prefix + ".bn3", out);
    reg_layer(layer4, "layer4");
    conv4_1.register_params(prefix + ".conv4_1", out);
    bn4_1.register_params(prefix + ".bn4_1", out);
    conv4_2.register_params(prefix + ".conv4_2", out);
    bn4_2.register_params(prefix + ".bn4_2", out);
}

void ResNet29Backbone::register_buffers(const std::string& prefix, NamedBuffers& out) {
    bn0_1.register_buffers(prefix + ".bn0_1", out);
    bn0_2.register_buffers(prefix + ".bn0_2", out);
    auto reg_layer = [&](std::vector<BasicBlock>& layer, const std::string& name) {
        for (std::size_t i = 0; i < layer.size(); ++i)
            layer[i].register_buffers(prefix + "." + name + "." + std::to_string(i), out);
    };
    reg_layer(layer1, "layer1");
    bn1.register_buffers(prefix + ".bn1", out);
    reg_layer(layer2, "layer2");
    bn2.register_buffers(prefix + ".bn2", out);
    reg_layer(layer3, "layer3");
    bn3.register_buffers(prefix + ".bn3", out);
    reg_layer(layer4, "layer4");
    bn4_1.register_buffers(prefix + ".bn4_1", out);
    bn4_2.register_buffers(prefix + ".bn4_2", out);
}

// ------------------------------------------------------------------- encoder

Encoder::Encoder(EncoderConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(seed);
    if (cfg_.backbone == Backbone::toy_cnn)
        toy_.emplace(cfg_.in_channels, cfg_.toy_channels, rng);
    else
        resnet_.emplace(cfg_.in_channels, rng);

    if (cfg_.sequence_modeling) {
        lstm_layers_.emplace_back(visual_dim(), cfg_.lstm_hidden, rng);
        lstm_layers_.emplace_back(2 * cfg_.lstm_hidden, cfg_.lstm_hidden, rng);
    }

    const int rep = representation_dim();
    if (cfg_.projection_head == ProjectionHead::mlp_per_frame) {
        mlp1_.emplace(rep, rep, rng);
        mlp2_.emplace(rep, cfg_.projected_dim, rng);
    } else if (cfg_.projection_head == ProjectionHead::bilstm) {
        head_lstm_.emplace(rep, cfg_.projected_dim, rng);
    }
}

int Encoder::visual_dim() const {
    return cfg_.backbone == Backbone::toy_cnn ? toy_->out_channels : 512;
}

int Encoder::representation_dim() const {
    return cfg_.representation == Representation::visual ? visual_dim() : 2 * cfg_.lstm_hidden;
}

int Encoder::projected_dim() const {
    switch (cfg_.projection_head) {
        case ProjectionHead::none: return representation_dim();
        case ProjectionHead::mlp_per_frame: return cfg_.projected_dim;
        case ProjectionHead::bilstm: return 2 * cfg_.projected_dim;
    }
    throw ConfigError("unknown projection head");
}

int Encoder::decoder_dim(DecoderInput which) const {
    switch (which) {
        case DecoderInput::visual: return visual_dim();
        case DecoderInput::contextual: return 2 * cfg_.lstm_hidden;
        case DecoderInput::concat: return 2 * cfg_.lstm_hidden + visual_dim();
    }
    throw ConfigError("unknown decoder input");
}

int Encoder::frames_for_width(int width) const {
    if (cfg_.backbone == Backbone::toy_cnn) return width / 4;
    // resnet29: two halvings, then two stride-(2,1) convs/pools that each add
    // one frame of padding and the final unpadded 2x2 conv: W/4 + 1.
    return width / 4 + 1;
}

FeatureSeq Encoder::visual(const Tensor& images, bool training) const {
    Tensor fmap = toy_ ? toy_->forward(images) : resnet_->forward(images, training);
    const int batch = fmap.dim(0), dim = fmap.dim(1), frames = fmap.dim(3);
    return {map_to_sequence(fmap), batch, frames, dim};
}

FeatureSeq Encoder::contextual(const FeatureSeq& v) const {
    if (!cfg_.sequence_modeling)
        throw ConfigError("contextual features require sequence_modeling");
    Tensor h = v.frames;
    for (const BiLstm& layer : lstm_layers_) h = layer.forward(h, v.batch, v.length);
    return {h, v.batch, v.length, 2 * cfg_.lstm_hidden};
}

FeatureSeq Encoder::representation(const Tensor& images, bool training) const {
    FeatureSeq v = visual(images, training);
    return cfg_.representation == Representation::visual ? v : contextual(v);
}

FeatureSeq Encoder::project(const FeatureSeq& r) const {
    switch (cfg_.projection_head) {
        case ProjectionHead::none: return r;
        case ProjectionHead::mlp_per_frame:
            return {mlp2_->forward(relu(mlp1_->forward(r.frames))), r.batch, r.length,
                    cfg_.projected_dim};
        case ProjectionHead::bilstm:
            return {head_lstm_->forward(r.frames, r.batch, r.length), r.batch, r.length,
                    2 * cfg_.projected_dim};
    }
    throw ConfigError("unknown projection head");
}

FeatureSeq Encoder::decoder_features(const Tensor& images, DecoderInput which,
                                     bool training) const {
    FeatureSeq v = visual(images, training);
    if (which == DecoderInput::visual) return v;
    FeatureSeq h = contextual(v);
    if (which == DecoderInput::contextual) return h;
    return {concat_cols(h.frames, v.frames), v.batch, v.length, h.dim + v.dim};
}

NamedParams Encoder::encoder_params() {
    NamedParams out;
    if (toy_) toy_->register_params("backbone", out);
    if (resnet_) resnet_->register_params("backbone", out);
    for (std::size_t i = 0; i < lstm_layers_.size(); ++i)
        lstm_layers_[i].register_params("lstm" + std::to_string(i), out);
    return out;
}

NamedParams Encoder::projection_params() {
    NamedParams out;
    if (mlp1_) {
        mlp1_->register_params("head.mlp1", out);
        mlp2_->register_params("head.mlp2", out);
    }
    if (head_lstm_) head_lstm_->register_params("head.lstm", out);
    return out;
}

NamedParams Encoder::all_params() {
    NamedParams out = encoder_params();
    for (auto& p : projection_params()) out.push_back(std::move(p));
    return out;
}

NamedBuffers Encoder::state_buffers() {
    NamedBuffers out;
    if (resnet_) resnet_->register_buffers("backbone", out);
    return out;
}

// --------------------------------------------------------------- enum names

const char* backbone_name(Backbone b) {
    return b == Backbone::toy_cnn ? "toy_cnn" : "resnet29";
}

Backbone backbone_from_name(const std::string& name) {
    if (name == "toy_cnn") return Backbone::toy_cnn;
    if (name == "resnet29") return Backbone::resnet29;
    throw ConfigError("unknown backbone: " + name);
}

const char* representation_name(Representation r) {
    return r == Representation::visual ? "visual" : "contextual";
}

Representation representation_from_name(const std::string& name) {
    if (name == "visual") return Representation::visual;
    if (name == "contextual") return Representation::contextual;
    throw ConfigError("unknown representation: " + name);
}

const char* projection_head_name(ProjectionHead p) {
    switch (p) {
        case ProjectionHead::none: return "none";
        case ProjectionHead::mlp_per_frame: return "mlp_per_frame";
        case ProjectionHead::bilstm: return "bilstm";
    }
    throw ConfigError("unknown projection head");
}

ProjectionHead projection_head_from_name(const std::string& name) {
    if (name == "none") return ProjectionHead::none;
    if (name == "mlp_per_frame") return ProjectionHead::mlp_per_frame;
    if (name == "bilstm") return ProjectionHead::bilstm;
    throw ConfigError("unknown projection head: " + name);
}

const char* decoder_input_name(DecoderInput d) {
    switch (d) {
        case DecoderInput::visual: return "visual";
        case DecoderInput::contextual: return "contextual";
        case DecoderInput::concat: return "concat";
    }
    throw ConfigError("unknown decoder input");
}

DecoderInput decoder_input_from_name(const std::string& name) {
    if (name == "visual") return DecoderInput::visual;
    if (name == "contextual") return DecoderInput::contextual;
    if (name == "concat") return DecoderInput::concat;
    throw ConfigError("unknown decoder input: " + name);
}

}  // namespace seqclr
