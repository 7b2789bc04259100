#include "pcdhv/supervision.hpp"

#include <algorithm>
#include <cmath>

namespace pcdhv {

BoundingBox BoundingBox::normalized() const {
    BoundingBox b = *this;
    if (b.x_br < b.x_tl) std::swap(b.x_tl, b.x_br);
    if (b.y_br < b.y_tl) std::swap(b.y_tl, b.y_br);
    return b;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    const double ix = std::max(0.0, std::min(a.x_br, b.x_br) - std::max(a.x_tl, b.x_tl));
    const double iy = std::max(0.0, std::min(a.y_br, b.y_br) - std::max(a.y_tl, b.y_tl));
    const double inter = ix * iy;
    const double uni = a.width() * a.height() + b.width() * b.height() - inter;
    return uni > 0 ? inter / uni : 0.0;
}

GridCell map_corner_to_feature(double cx, double cy, const GeometryMap& geom, int map_w, int map_h) {
    if (geom.stride < 1) throw ConfigError("map_corner_to_feature: stride must be >= 1");
    GridCell cell;
    const double fx = std::floor((cx - geom.offset) / geom.stride);
    const double fy = std::floor((cy - geom.offset) / geom.stride);
    cell.x = static_cast<int>(fx);
    cell.y = static_cast<int>(fy);
    if (cell.x < 0 || cell.x >= map_w || cell.y < 0 || cell.y >= map_h) cell.clamped = true;
    cell.x = std::clamp(cell.x, 0, map_w - 1);
    cell.y = std::clamp(cell.y, 0, map_h - 1);
    return cell;
}

double gaussian_radius(double box_w, double box_h, double d) {
    if (box_w <= 0 || box_h <= 0) throw ConfigError("gaussian_radius: non-positive box");
    if (d >= 1) return 0.0;
    if (d <= 0) throw ConfigError("gaussian_radius: IoU threshold must be in (0,1)");
    const double s = box_w + box_h, a = box_w * box_h;

    // both corners displaced inward: (w-2r)(h-2r)/(wh) = d
    const double r1 = (s - std::sqrt(std::max(0.0, s * s - 4.0 * (1.0 - d) * a))) / 4.0;
    // both corners displaced outward: wh/((w+2r)(h+2r)) = d
    const double r2 = (-s + std::sqrt(s * s + 4.0 * a * (1.0 / d - 1.0))) / 4.0;
    // mixed (pure translation): (w-r)(h-r) / (2wh - (w-r)(h-r)) = d
    const double r3 = (s - std::sqrt(std::max(0.0, s * s - 4.0 * a * (1.0 - d) / (1.0 + d)))) / 2.0;

    return std::max(0.0, std::min({r1, r2, r3}));
}

GroundtruthMaps encode_groundtruth(const BoundingBox& box_in, const GeometryMap& geom, int map_w, int map_h,
                                   double d) {
    const BoundingBox box = box_in.normalized();
    if (box.width() <= 0 || box.height() <= 0) throw ConfigError("encode_groundtruth: degenerate box");

    GroundtruthMaps gt;
    gt.maps = Tensor::zeros({map_h, map_w, 2});
    gt.tl = map_corner_to_feature(box.x_tl, box.y_tl, geom, map_w, map_h);
    gt.br = map_corner_to_feature(box.x_br, box.y_br, geom, map_w, map_h);

    // radius in feature-grid cells, from the box measured on the grid
    const double cell_w = box.width() / geom.stride;
    const double cell_h = box.height() / geom.stride;
    gt.radius_cells = gaussian_radius(cell_w, cell_h, d);

    const double sigma = gt.radius_cells / 3.0;
    for (int ch = 0; ch < 2; ++ch) {
        const GridCell& c = ch == 0 ? gt.tl : gt.br;
        if (sigma > 0) {
            for (int y = 0; y < map_h; ++y)
                for (int x = 0; x < map_w; ++x) {
                    const double dx = x - c.x, dy = y - c.y;
                    double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                    if (v < 1e-4) v = 0.0;
                    gt.maps.at(y, x, ch) = static_cast<Real>(v);
                }
        }
        gt.maps.at(c.y, c.x, ch) = Real(1);
    }
    return gt;
}

}  // namespace pcdhv
