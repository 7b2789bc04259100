#pragma once

#include "pcdhv/model.hpp"
#include "pcdhv/supervision.hpp"

namespace pcdhv {

// Axis-aligned crop window resampled to a fixed output size by bilinear
// sampling; taps outside the frame read the frame's per-channel mean.
struct CropTransform {
    double center_x = 0, center_y = 0;
    double side = 1;
    int out_size = 0;

    double to_image_x(double u) const { return center_x - side / 2 + (u + 0.5) * side / out_size - 0.5; }
    double to_image_y(double v) const { return center_y - side / 2 + (v + 0.5) * side / out_size - 0.5; }
    double to_crop_x(double x) const { return (x + 0.5 - center_x + side / 2) * out_size / side - 0.5; }
    double to_crop_y(double y) const { return (y + 0.5 - center_y + side / 2) * out_size / side - 0.5; }
};

Tensor crop_resize(const Tensor& frame, const CropTransform& t);

// Crop side for a target of size w x h with context padding p = (w+h)/2.
double template_crop_side(double w, double h);

struct TrackerState {
    double center_x = 0, center_y = 0;
    double width = 0, height = 0;
    double gamma = 0.3;
    double template_side = 0;  // template crop side fixed at init
    Tensor template_cache;
};

class Tracker {
  public:
    explicit Tracker(const Model& model) : model_(&model) {}

    TrackerState init(const Tensor& frame, const BoundingBox& box) const;

    struct StepResult {
        BoundingBox box;
        Tensor top_left_map, bottom_right_map;
        bool ok = true;
    };
    StepResult step(TrackerState& state, const Tensor& frame) const;

    // Exposed separately for testing: peak of each map (row-major first on
    // ties) mapped through geometry and crop back to image pixels.
    static std::pair<double, double> decode_peak(const Tensor& map, const GeometryMap& geom,
                                                 const CropTransform& crop);

  private:
    const Model* model_;
};

}  // namespace pcdhv
