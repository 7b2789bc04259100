#include "pcdhv/backbone.hpp"

#include <cmath>

#include "pcdhv/ops.hpp"

namespace pcdhv {

namespace {

Backbone::Layer conv(int k, int stride, int cin, int cout, const std::string& pname) {
    return {Backbone::Layer::Conv, k, stride, cin, cout, true, pname};
}

Backbone::Layer pool(int k, int stride) { return {Backbone::Layer::Pool, k, stride, 0, 0, false, ""}; }

void init_conv(ParamSet& params, std::mt19937_64& rng, const std::string& pname, int k, int cin, int cout,
               const std::string& scheme) {
    Real std;
    if (scheme == "he")
        std = static_cast<Real>(std::sqrt(2.0 / (static_cast<double>(k) * k * cin)));
    else if (scheme == "gauss")
        std = Real(0.01);
    else
        throw ConfigError("unknown init scheme: " + scheme);
    params.add(pname + ".w", random_gaussian({k, k, cin, cout}, rng, std));
    params.add(pname + ".b", Tensor::zeros({cout}));
}

}  // namespace

Backbone Backbone::make(const Config& cfg) {
    Backbone bb;
    const int C = cfg.integer("channels");
    const std::string arch = cfg.str("arch");
    if (C < 1) throw ConfigError("channels must be >= 1");
    bb.channels_ = C;
    if (arch == "toy8") {
        // stride 8, receptive footprint 95: 127 -> 5, 303 -> 27 before adapter
        bb.layers_ = {conv(5, 2, 3, 16, "backbone.conv0"), conv(3, 1, 16, 32, "backbone.conv1"),
                      pool(2, 2),                          conv(3, 1, 32, C, "backbone.conv2"),
                      pool(2, 2),                          conv(3, 1, C, C, "backbone.conv3"),
                      conv(3, 1, C, C, "backbone.conv4"),  conv(3, 1, C, C, "backbone.conv5"),
                      conv(3, 1, C, C, "backbone.conv6"),  pool(2, 1)};
        bb.adapter_k_ = 3;
        bb.adapter_upsample_ = true;
    } else if (arch == "toy8s") {
        // shallower stride-8 stack for desk-scale training: 80 -> 5, 160 -> 15
        bb.layers_ = {conv(5, 2, 3, 8, "backbone.conv0"), conv(3, 1, 8, 16, "backbone.conv1"),
                      pool(2, 2),                         conv(3, 1, 16, C, "backbone.conv2"),
                      pool(2, 2),                         conv(3, 1, C, C, "backbone.conv3"),
                      pool(2, 1)};
        bb.adapter_k_ = 3;
        bb.adapter_upsample_ = true;
    } else if (arch == "micro") {
        // single stride-2 block used by gradient checks: 63 -> 31, 13 -> 6
        bb.layers_ = {conv(3, 2, 3, C, "backbone.conv0")};
        bb.adapter_k_ = 1;
        bb.adapter_upsample_ = false;
    } else {
        throw ConfigError("unknown arch: " + arch);
    }
    return bb;
}

void Backbone::init_params(ParamSet& params, std::mt19937_64& rng, const std::string& scheme) const {
    for (const auto& l : layers_)
        if (l.kind == Layer::Conv) init_conv(params, rng, l.pname, l.k, l.cin, l.cout, scheme);
    init_conv(params, rng, "adapter_t.conv", adapter_k_, channels_, channels_, scheme);
    init_conv(params, rng, "adapter_s.conv", adapter_k_, channels_, channels_, scheme);
}

int Backbone::forward_shared(Tape& tape, const ParamSet::Binding& b, int image) const {
    int x = image;
    for (const auto& l : layers_) {
        if (l.kind == Layer::Conv) {
            x = ops::conv2d(tape, x, b.node(l.pname + ".w"), b.node(l.pname + ".b"), 0, l.stride);
            if (l.relu) x = ops::relu(tape, x);
        } else {
            x = ops::maxpool2d(tape, x, l.k, l.stride);
        }
    }
    return x;
}

int Backbone::forward_branch(Tape& tape, const ParamSet::Binding& b, int image, bool template_branch) const {
    int x = forward_shared(tape, b, image);
    const std::string prefix = template_branch ? "adapter_t.conv" : "adapter_s.conv";
    x = ops::conv2d(tape, x, b.node(prefix + ".w"), b.node(prefix + ".b"), 0, 1);
    x = ops::relu(tape, x);
    if (adapter_upsample_) x = ops::upsample_bilinear_2x(tape, x);
    return x;
}

std::vector<LayerGeometry> Backbone::layer_geometries() const {
    std::vector<LayerGeometry> g;
    for (const auto& l : layers_)
        g.push_back(l.kind == Layer::Conv ? conv_geometry(l.k, l.stride) : pool_geometry(l.k, l.stride));
    g.push_back(conv_geometry(adapter_k_, 1));
    if (adapter_upsample_) g.push_back(upsample2x_geometry());
    return g;
}

GeometryMap Backbone::geometry() const { return compose_geometry(layer_geometries()); }

int Backbone::feature_extent(int input_extent) const {
    int n = input_extent;
    for (const auto& l : layers_) {
        n = (n - l.k) / l.stride + 1;
        if (n < 1) throw ShapeError("backbone: input too small for arch");
    }
    n = n - adapter_k_ + 1;
    if (adapter_upsample_) n *= 2;
    if (n < 1) throw ShapeError("backbone: input too small for adapter");
    return n;
}

}  // namespace pcdhv
