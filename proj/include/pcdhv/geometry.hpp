#pragma once

#include <vector>

#include "pcdhv/tensor.hpp"

namespace pcdhv {

// Affine map between feature-grid indices and image pixels:
//   image_x = stride * feat_x + offset
struct GeometryMap {
    double stride = 1.0;
    double offset = 0.0;

    double to_image(double feat) const { return stride * feat + offset; }
    double to_feature(double image) const { return (image - offset) / stride; }
};

struct LayerGeometry {
    double stride;  // cells of layer input per cell of layer output
    double offset;  // position of output cell 0 in layer-input cells
};

inline GeometryMap compose_geometry(const std::vector<LayerGeometry>& layers) {
    GeometryMap g;
    for (const auto& l : layers) {
        if (l.stride <= 0) throw ConfigError("compose_geometry: non-positive stride");
        g.offset += l.offset * g.stride;
        g.stride *= l.stride;
    }
    return g;
}

// Standard per-layer geometries.
inline LayerGeometry conv_geometry(int k, int stride) { return {static_cast<double>(stride), (k - 1) / 2.0}; }
inline LayerGeometry pool_geometry(int k, int stride) { return {static_cast<double>(stride), (k - 1) / 2.0}; }
// x2 upsampling, align-corners-false: out cell g sits at input (g + 0.5)/2 - 0.5
inline LayerGeometry upsample2x_geometry() { return {0.5, -0.25}; }

}  // namespace pcdhv
