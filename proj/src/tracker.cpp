#include "pcdhv/tracker.hpp"

#include <cmath>

namespace pcdhv {

Tensor crop_resize(const Tensor& frame, const CropTransform& t) {
    const int H = frame.dims[0], W = frame.dims[1], C = frame.dims[2];
    std::vector<Real> mean(C, Real(0));
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < C; ++c) mean[c] += frame.at(y, x, c);
    for (auto& m : mean) m /= static_cast<Real>(static_cast<long long>(H) * W);

    auto tap = [&](int y, int x, int c) -> Real {
        if (y < 0 || y >= H || x < 0 || x >= W) return mean[c];
        return frame.at(y, x, c);
    };

    Tensor out({t.out_size, t.out_size, C});
    for (int v = 0; v < t.out_size; ++v) {
        const double sy = t.to_image_y(v);
        const int y0 = static_cast<int>(std::floor(sy));
        const double fy = sy - y0;
        for (int u = 0; u < t.out_size; ++u) {
            const double sx = t.to_image_x(u);
            const int x0 = static_cast<int>(std::floor(sx));
            const double fx = sx - x0;
            for (int c = 0; c < C; ++c) {
                const double val = (1 - fy) * ((1 - fx) * tap(y0, x0, c) + fx * tap(y0, x0 + 1, c)) +
                                   fy * ((1 - fx) * tap(y0 + 1, x0, c) + fx * tap(y0 + 1, x0 + 1, c));
                out.at(v, u, c) = static_cast<Real>(val);
            }
        }
    }
    return out;
}

double template_crop_side(double w, double h) {
    const double p = (w + h) / 2;
    return std::sqrt((w + p) * (h + p));
}

TrackerState Tracker::init(const Tensor& frame, const BoundingBox& box_in) const {
    const BoundingBox box = box_in.normalized();
    if (box.width() <= 0 || box.height() <= 0) throw ConfigError("tracker init: degenerate box");

    TrackerState st;
    st.center_x = (box.x_tl + box.x_br) / 2;
    st.center_y = (box.y_tl + box.y_br) / 2;
    st.width = box.width();
    st.height = box.height();
    st.gamma = model_->config().real("smoothing");
    st.template_side = template_crop_side(st.width, st.height);

    CropTransform t{st.center_x, st.center_y, st.template_side, model_->config().integer("template_size")};
    st.template_cache = model_->compute_template_cache(crop_resize(frame, t));
    return st;
}

std::pair<double, double> Tracker::decode_peak(const Tensor& map, const GeometryMap& geom,
                                               const CropTransform& crop) {
    const int H = map.dims[0], W = map.dims[1];
    int best = 0;
    for (int i = 1; i < H * W; ++i)
        if (map.data[i] > map.data[best]) best = i;  // row-major first on ties
    const int cy = best / W, cx = best % W;
    return {crop.to_image_x(geom.to_image(cx)), crop.to_image_y(geom.to_image(cy))};
}

Tracker::StepResult Tracker::step(TrackerState& st, const Tensor& frame) const {
    const Config& cfg = model_->config();
    const double ratio = static_cast<double>(cfg.integer("search_size")) / cfg.integer("template_size");
    CropTransform crop{st.center_x, st.center_y, st.template_side * ratio, cfg.integer("search_size")};

    Tape tape;
    const auto b = model_->params().inject(tape);
    const int search = tape.leaf(crop_resize(frame, crop));
    const auto fwd = model_->forward_with_cache(tape, b, st.template_cache, search);

    StepResult res;
    res.top_left_map = tape.value(fwd.top_left);
    res.bottom_right_map = tape.value(fwd.bottom_right);
    for (Real v : res.top_left_map.data)
        if (!std::isfinite(v)) res.ok = false;
    for (Real v : res.bottom_right_map.data)
        if (!std::isfinite(v)) res.ok = false;
    if (!res.ok) return res;

    const GeometryMap geom = model_->presence_geometry();
    auto [tlx, tly] = decode_peak(res.top_left_map, geom, crop);
    auto [brx, bry] = decode_peak(res.bottom_right_map, geom, crop);
    if (brx < tlx) std::swap(tlx, brx);
    if (bry < tly) std::swap(tly, bry);

    const double g = st.gamma;
    st.width = (1 - g) * st.width + g * (brx - tlx);
    st.height = (1 - g) * st.height + g * (bry - tly);
    st.center_x = (tlx + brx) / 2;
    st.center_y = (tly + bry) / 2;

    res.box = {st.center_x - st.width / 2, st.center_y - st.height / 2, st.center_x + st.width / 2,
               st.center_y + st.height / 2};
    return res;
}

}  // namespace pcdhv
