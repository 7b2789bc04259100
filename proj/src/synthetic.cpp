#include "pcdhv/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include "pcdhv/image.hpp"
#include "pcdhv/tracker.hpp"

namespace pcdhv {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (static_cast<double>(rng() >> 11) * 0x1.0p-53) * (hi - lo);
}

struct Shape {
    int kind = 0;  // 0 rect, 1 ellipse, 2 triangle
    double cx = 0, cy = 0, w = 0, h = 0;
    Real color[3] = {0, 0, 0};

    bool contains(double x, double y) const {
        const double dx = x - cx, dy = y - cy;
        switch (kind) {
            case 0:
                return std::abs(dx) <= w / 2 && std::abs(dy) <= h / 2;
            case 1:
                return (dx * dx) / (w * w / 4) + (dy * dy) / (h * h / 4) <= 1.0;
            default: {
                // apex up triangle inscribed in the box
                if (std::abs(dx) > w / 2 || std::abs(dy) > h / 2) return false;
                const double t = (dy + h / 2) / h;  // 0 at apex row, 1 at base
                return std::abs(dx) <= t * w / 2;
            }
        }
    }

    BoundingBox bbox() const { return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2}; }
};

void paint(Tensor& frame, const Shape& s) {
    const int F = frame.dims[0];
    const int y0 = std::max(0, static_cast<int>(std::floor(s.cy - s.h / 2)));
    const int y1 = std::min(F - 1, static_cast<int>(std::ceil(s.cy + s.h / 2)));
    const int x0 = std::max(0, static_cast<int>(std::floor(s.cx - s.w / 2)));
    const int x1 = std::min(F - 1, static_cast<int>(std::ceil(s.cx + s.w / 2)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (s.contains(x, y))
                for (int c = 0; c < 3; ++c) frame.at(y, x, c) = s.color[c];
}

Tensor textured_background(std::mt19937_64& rng, int size) {
    // coarse noise grid bilinearly stretched plus fine per-pixel noise
    const int G = 12;
    std::vector<double> grid(static_cast<size_t>(G) * G * 3);
    for (auto& v : grid) v = uniform(rng, 0.25, 0.55);
    Tensor bg({size, size, 3});
    for (int y = 0; y < size; ++y) {
        const double gy = static_cast<double>(y) / (size - 1) * (G - 1);
        const int y0 = std::min(static_cast<int>(gy), G - 2);
        const double fy = gy - y0;
        for (int x = 0; x < size; ++x) {
            const double gx = static_cast<double>(x) / (size - 1) * (G - 1);
            const int x0 = std::min(static_cast<int>(gx), G - 2);
            const double fx = gx - x0;
            const double fine = uniform(rng, -0.04, 0.04);
            for (int c = 0; c < 3; ++c) {
                auto g = [&](int yy, int xx) { return grid[(static_cast<size_t>(yy) * G + xx) * 3 + c]; };
                const double v = (1 - fy) * ((1 - fx) * g(y0, x0) + fx * g(y0, x0 + 1)) +
                                 fy * ((1 - fx) * g(y0 + 1, x0) + fx * g(y0 + 1, x0 + 1)) + fine;
                bg.at(y, x, c) = static_cast<Real>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return bg;
}

void pick_color(std::mt19937_64& rng, Real out[3]) {
    // saturated colors, well separated from the mid-grey background
    for (int c = 0; c < 3; ++c) out[c] = static_cast<Real>(rng() % 2 ? uniform(rng, 0.75, 1.0) : uniform(rng, 0.0, 0.12));
}

}  // namespace

SyntheticSequence generate_sequence(uint64_t seed, int n_frames, int size, int difficulty) {
    if (size < 128) throw ConfigError("generate_sequence: size must be >= 128");
    if (n_frames < 1) throw ConfigError("generate_sequence: need at least one frame");
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);

    SyntheticSequence seq;
    seq.seed = seed;
    seq.size = size;
    seq.difficulty = difficulty;

    Shape target;
    target.kind = static_cast<int>(rng() % 3);
    pick_color(rng, target.color);
    const double base = uniform(rng, 0.20, 0.30) * size;
    const double aspect = uniform(rng, 0.75, 1.35);
    target.w = base * std::sqrt(aspect);
    target.h = base / std::sqrt(aspect);
    target.cx = uniform(rng, target.w / 2 + 2, size - target.w / 2 - 2);
    target.cy = uniform(rng, target.h / 2 + 2, size - target.h / 2 - 2);
    double vx = uniform(rng, -2.5, 2.5);
    double vy = uniform(rng, -2.5, 2.5);
    const double drift_cap = difficulty > 0 ? 0.03 : 0.0;  // per-frame scale drift bound

    std::vector<Shape> distractors;
    for (int i = 0; i < (difficulty > 0 ? difficulty : 0); ++i) {
        Shape d;
        d.kind = static_cast<int>(rng() % 3);
        pick_color(rng, d.color);
        d.w = uniform(rng, 0.10, 0.18) * size;
        d.h = uniform(rng, 0.10, 0.18) * size;
        d.cx = uniform(rng, d.w / 2 + 1, size - d.w / 2 - 1);
        d.cy = uniform(rng, d.h / 2 + 1, size - d.h / 2 - 1);
        distractors.push_back(d);
    }

    for (int f = 0; f < n_frames; ++f) {
        Tensor frame = textured_background(rng, size);
        for (auto& d : distractors) paint(frame, d);
        paint(frame, target);
        seq.frames.push_back(std::move(frame));
        seq.boxes.push_back(target.bbox());

        // advance motion, bouncing so the box stays inside the frame
        target.cx += vx;
        target.cy += vy;
        if (drift_cap > 0) {
            const double ds = 1.0 + uniform(rng, -drift_cap, drift_cap);
            const double da = 1.0 + uniform(rng, -0.01, 0.01);  // aspect jitter
            target.w = std::clamp(target.w * ds * da, 0.12 * size, 0.40 * size);
            target.h = std::clamp(target.h * ds / da, 0.12 * size, 0.40 * size);
        }
        if (target.cx - target.w / 2 < 1 || target.cx + target.w / 2 > size - 1) {
            vx = -vx;
            target.cx = std::clamp(target.cx, target.w / 2 + 1, size - target.w / 2 - 1);
        }
        if (target.cy - target.h / 2 < 1 || target.cy + target.h / 2 > size - 1) {
            vy = -vy;
            target.cy = std::clamp(target.cy, target.h / 2 + 1, size - target.h / 2 - 1);
        }
    }
    return seq;
}

void save_sequence(const std::string& dir, const SyntheticSequence& seq) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    char name[32];
    for (size_t i = 0; i < seq.frames.size(); ++i) {
        std::snprintf(name, sizeof(name), "%06zu.ppm", i);
        write_ppm((fs::path(dir) / name).string(), seq.frames[i]);
    }
    std::ofstream gt(fs::path(dir) / "groundtruth.txt");
    gt << std::setprecision(17);
    for (const auto& b : seq.boxes) gt << b.x_tl << " " << b.y_tl << " " << b.x_br << " " << b.y_br << "\n";
    std::ofstream meta(fs::path(dir) / "meta.txt");
    meta << "seed " << seq.seed << "\nframes " << seq.frames.size() << "\nsize " << seq.size << "\ndifficulty "
         << seq.difficulty << "\n";
}

SyntheticSequence load_sequence(const std::string& dir) {
    namespace fs = std::filesystem;
    SyntheticSequence seq;
    std::ifstream gt(fs::path(dir) / "groundtruth.txt");
    if (!gt) throw std::runtime_error("missing groundtruth.txt in " + dir);
    BoundingBox b;
    while (gt >> b.x_tl >> b.y_tl >> b.x_br >> b.y_br) seq.boxes.push_back(b);
    char name[32];
    for (size_t i = 0; i < seq.boxes.size(); ++i) {
        std::snprintf(name, sizeof(name), "%06zu.ppm", i);
        seq.frames.push_back(read_ppm((fs::path(dir) / name).string()));
    }
    if (!seq.frames.empty()) seq.size = seq.frames[0].dims[0];
    return seq;
}

MetricReport evaluate(const Model& model, const std::vector<SyntheticSequence>& sequences) {
    if (sequences.empty()) throw ConfigError("evaluate: no sequences");
    MetricReport rep;
    Tracker tracker(model);
    for (const auto& seq : sequences) {
        TrackerState st = tracker.init(seq.frames[0], seq.boxes[0]);
        for (size_t f = 1; f < seq.frames.size(); ++f) {
            const auto res = tracker.step(st, seq.frames[f]);
            rep.per_frame_iou.push_back(res.ok ? iou(res.box, seq.boxes[f]) : 0.0);
        }
    }
    double sum = 0;
    int n50 = 0, n75 = 0;
    for (double v : rep.per_frame_iou) {
        sum += v;
        if (v > 0.5) ++n50;
        if (v > 0.75) ++n75;
    }
    const double n = static_cast<double>(rep.per_frame_iou.size());
    rep.ao = n > 0 ? sum / n : 0;
    rep.sr50 = n > 0 ? n50 / n : 0;
    rep.sr75 = n > 0 ? n75 / n : 0;
    return rep;
}

}  // namespace pcdhv
