#include "pcdhv/trainer.hpp"

#include <cmath>
#include <ostream>

#include "pcdhv/ops.hpp"
#include "pcdhv/tracker.hpp"

namespace pcdhv {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (static_cast<double>(rng() >> 11) * 0x1.0p-53) * (hi - lo);
}

}  // namespace

std::vector<TrainSample> build_pairs(const Model& model, const std::vector<SyntheticSequence>& sequences,
                                     int n_pairs, uint64_t seed) {
    if (sequences.empty()) throw ConfigError("build_pairs: no sequences");
    const Config& cfg = model.config();
    const int t_size = cfg.integer("template_size");
    const int s_size = cfg.integer("search_size");
    const int max_gap = cfg.integer("pair_max_gap");
    const double ratio = static_cast<double>(s_size) / t_size;
    const GeometryMap geom = model.presence_geometry();
    const int extent = model.presence_extent(s_size);

    std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ull);
    std::vector<TrainSample> out;
    out.reserve(n_pairs);
    int guard = 0;
    while (static_cast<int>(out.size()) < n_pairs) {
        if (++guard > 100 * n_pairs) throw ConfigError("build_pairs: cannot place corners inside the presence map");
        const auto& seq = sequences[rng() % sequences.size()];
        const int n = static_cast<int>(seq.frames.size());
        const int i = static_cast<int>(rng() % n);
        const int lo = std::max(0, i - max_gap), hi = std::min(n - 1, i + max_gap);
        const int j = lo + static_cast<int>(rng() % (hi - lo + 1));

        const BoundingBox& tb = seq.boxes[i];
        const BoundingBox& sb = seq.boxes[j];
        const double t_side = template_crop_side(tb.width(), tb.height());
        const double s_side =
            template_crop_side(sb.width(), sb.height()) * ratio * uniform(rng, 0.95, 1.05);
        // wide center jitter: keeps a constant "mean box" prediction from being competitive
        const double jx = uniform(rng, -0.15, 0.15) * s_side;
        const double jy = uniform(rng, -0.15, 0.15) * s_side;

        CropTransform tc{(tb.x_tl + tb.x_br) / 2, (tb.y_tl + tb.y_br) / 2, t_side, t_size};
        CropTransform sc{(sb.x_tl + sb.x_br) / 2 + jx, (sb.y_tl + sb.y_br) / 2 + jy, s_side, s_size};

        BoundingBox crop_box{sc.to_crop_x(sb.x_tl), sc.to_crop_y(sb.y_tl), sc.to_crop_x(sb.x_br),
                             sc.to_crop_y(sb.y_br)};
        const auto enc = encode_groundtruth(crop_box, geom, extent, extent);
        if (enc.tl.clamped || enc.br.clamped) continue;  // redraw the jitter
        // keep corners away from the map border, where the vote support is truncated
        const int m = 2;
        const auto inside = [&](const GridCell& c) {
            return c.x >= m && c.y >= m && c.x < extent - m && c.y < extent - m;
        };
        if (!inside(enc.tl) || !inside(enc.br)) continue;

        out.push_back({crop_resize(seq.frames[i], tc), crop_resize(seq.frames[j], sc), crop_box});
    }
    return out;
}

double learning_rate_at(int step, int total_steps, double lr_start, double lr_peak, double warmup_frac) {
    const int warmup = std::max(1, static_cast<int>(std::llround(warmup_frac * total_steps)));
    if (step < warmup) return lr_start + (lr_peak - lr_start) * static_cast<double>(step) / warmup;
    const double t = static_cast<double>(step - warmup) / std::max(1, total_steps - warmup);
    return lr_peak * 0.5 * (1.0 + std::cos(M_PI * t));
}

TrainReport train(Model& model, const std::vector<TrainSample>& samples, std::ostream* log) {
    if (samples.empty()) throw ConfigError("train: no samples");
    const Config& cfg = model.config();
    const int steps = cfg.integer("steps");
    const int batch = cfg.integer("batch_size");
    const double lr_start = cfg.real("lr_start");
    const double lr_peak = cfg.real("lr_peak");
    const double warmup_frac = cfg.real("warmup_frac");
    const double mom = cfg.real("momentum");
    const double wd = cfg.real("weight_decay");
    const GeometryMap geom = model.presence_geometry();
    const int extent = model.presence_extent(cfg.integer("search_size"));

    // encode targets once; sample order inside a batch is the draw order
    std::vector<Tensor> targets;
    targets.reserve(samples.size());
    for (const auto& s : samples) targets.push_back(encode_groundtruth(s.box, geom, extent, extent).maps);

    std::mt19937_64 rng(static_cast<uint64_t>(cfg.integer("seed")) ^ 0xa0761d6478bd642full);
    TrainReport report;
    report.loss_curve.reserve(steps);

    for (int step = 0; step < steps; ++step) {
        model.params().zero_grad();
        double loss_sum = 0;
        for (int k = 0; k < batch; ++k) {
            const size_t idx = rng() % samples.size();
            Tape tape;
            const auto b = model.params().inject(tape);
            const int templ = tape.leaf(samples[idx].template_crop);
            const int search = tape.leaf(samples[idx].search_crop);
            const auto fwd = model.forward_pair(tape, b, templ, search);
            // presence maps are non-negative vote averages; focal_loss clamps them into (0,1)
            const int pred = ops::concat_channels(tape, {fwd.top_left, fwd.bottom_right});
            const int loss = ops::focal_loss(tape, pred, targets[idx]);
            const Real lv = tape.value(loss).data[0];
            if (!std::isfinite(lv))
                throw NumericError("train: non-finite loss at step " + std::to_string(step) + ", sample " +
                                   std::to_string(idx));
            loss_sum += lv;
            tape.backward(loss);
            model.params().collect_grads(tape, b);
        }

        const double lr = learning_rate_at(step, steps, lr_start, lr_peak, warmup_frac);
        for (auto& e : model.params().entries()) {
            for (size_t i = 0; i < e.value.data.size(); ++i) {
                const Real g = e.grad.data[i] / static_cast<Real>(batch) + static_cast<Real>(wd) * e.value.data[i];
                e.momentum.data[i] = static_cast<Real>(mom) * e.momentum.data[i] + g;
                e.value.data[i] -= static_cast<Real>(lr) * e.momentum.data[i];
            }
        }

        report.loss_curve.push_back(loss_sum / batch);
        if (log && (step % 10 == 0 || step == steps - 1))
            *log << "step " << step << " lr " << lr << " loss " << report.loss_curve.back() << "\n";
    }
    return report;
}

}  // namespace pcdhv
