#pragma once

#include <string>
#include <vector>

#include "pcdhv/config.hpp"
#include "pcdhv/geometry.hpp"
#include "pcdhv/params.hpp"

namespace pcdhv {

// Siamese feature extractor: a parameter-shared conv/pool stack followed by a
// per-branch adapter (conv + relu + x2 bilinear upsample) with unshared
// parameters.
class Backbone {
  public:
    struct Layer {
        enum Kind { Conv, Pool } kind;
        int k = 3;
        int stride = 1;
        int cin = 0, cout = 0;
        bool relu = false;
        std::string pname;  // parameter prefix for conv layers
    };

    static Backbone make(const Config& cfg);

    void init_params(ParamSet& params, std::mt19937_64& rng, const std::string& scheme) const;

    // shared stack only
    int forward_shared(Tape& tape, const ParamSet::Binding& b, int image) const;
    // shared stack + branch adapter ("adapter_t" / "adapter_s")
    int forward_branch(Tape& tape, const ParamSet::Binding& b, int image, bool template_branch) const;

    GeometryMap geometry() const;  // feature cell -> input pixel, post adapter
    std::vector<LayerGeometry> layer_geometries() const;

    int out_channels() const { return channels_; }
    int feature_extent(int input_extent) const;  // post-adapter spatial extent

  private:
    std::vector<Layer> layers_;
    int channels_ = 0;
    int adapter_k_ = 3;
    bool adapter_upsample_ = true;
};

}  // namespace pcdhv
