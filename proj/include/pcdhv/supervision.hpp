#pragma once

#include "pcdhv/geometry.hpp"
#include "pcdhv/tensor.hpp"

namespace pcdhv {

struct BoundingBox {
    double x_tl = 0, y_tl = 0, x_br = 0, y_br = 0;

    double width() const { return x_br - x_tl; }
    double height() const { return y_br - y_tl; }
    // swap any inverted axis so br >= tl holds
    BoundingBox normalized() const;
};

double iou(const BoundingBox& a, const BoundingBox& b);

struct GridCell {
    int x = 0, y = 0;
    bool clamped = false;
};

// floor((c - offset) / stride) per axis, clamped into the map extents.
GridCell map_corner_to_feature(double cx, double cy, const GeometryMap& geom, int map_w, int map_h);

// Largest corner displacement (in cells) keeping IoU >= d against a
// box_w x box_h groundtruth, minimum over the three displacement cases.
double gaussian_radius(double box_w, double box_h, double d);

struct GroundtruthMaps {
    Tensor maps;  // H x W x 2; channel 0 top-left, channel 1 bottom-right
    GridCell tl, br;
    double radius_cells = 0;
};

// Gaussian corner maps on the presence-map grid for a box in image pixels.
GroundtruthMaps encode_groundtruth(const BoundingBox& box, const GeometryMap& geom, int map_w, int map_h,
                                   double d = 0.5);

}  // namespace pcdhv
