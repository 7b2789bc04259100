// Acceptance suite: one pass/fail line per criterion. Usage:
//   acceptance <configs-dir> <cli-binary>
// Exit code is the number of failed criteria.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "pcdhv/gradcheck.hpp"
#include "pcdhv/ops.hpp"
#include "pcdhv/reference.hpp"
#include "pcdhv/tracker.hpp"
#include "pcdhv/trainer.hpp"

using namespace pcdhv;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;
std::chrono::steady_clock::time_point g_t0;

void begin() { g_t0 = std::chrono::steady_clock::now(); }

void report(int criterion, bool pass, const std::string& detail) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - g_t0).count();
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << criterion << ": " << detail << " [" << std::fixed
              << std::setprecision(1) << secs << "s]\n"
              << std::defaultfloat << std::setprecision(6);
    if (!pass) ++g_failures;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = a.dims == b.dims ? 0 : std::numeric_limits<double>::infinity();
    if (a.dims == b.dims)
        for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(double(a.data[i] - b.data[i])));
    return m;
}

// ---- criterion 1: forward kernels vs naive oracles --------------------------

void criterion_oracles() {
    begin();
    std::mt19937_64 rng(1001);
    double worst = 0;
    auto dim = [&](int lo, int hi) { return lo + static_cast<int>(rng() % (hi - lo + 1)); };

    for (int i = 0; i < 50; ++i) {
        const int C = dim(1, 8), Co = dim(1, 8), k = 1 + 2 * static_cast<int>(rng() % 2);
        const int pad = static_cast<int>(rng() % 2), stride = 1 + static_cast<int>(rng() % 2);
        const Tensor in = random_uniform({dim(5, 20), dim(5, 20), C}, rng);
        const Tensor kr = random_uniform({k, k, C, Co}, rng);
        const Tensor bias = random_uniform({Co}, rng);
        Tape t;
        worst = std::max(worst, max_abs_diff(t.value(ops::conv2d(t, t.leaf(in), t.leaf(kr), t.leaf(bias), pad, stride)),
                                             ref::conv2d(in, kr, &bias, pad, stride)));
    }
    for (int i = 0; i < 50; ++i) {
        const Tensor in = random_uniform({dim(4, 20), dim(4, 20), dim(1, 32)}, rng);
        const int k = dim(2, 4), stride = dim(1, 2), pad = static_cast<int>(rng() % 2);
        Tape t;
        worst = std::max(worst, max_abs_diff(t.value(ops::maxpool2d(t, t.leaf(in), k, stride, pad)),
                                             ref::maxpool2d(in, k, stride, pad)));
        Tape t3;
        worst = std::max(worst,
                         max_abs_diff(t3.value(ops::upsample_bilinear_2x(t3, t3.leaf(in))), ref::upsample_bilinear_2x(in)));
    }
    for (int i = 0; i < 50; ++i) {
        const int M = dim(1, 12), K = dim(1, 12), N = dim(1, 12);
        const Tensor a = random_uniform({M, K}, rng);
        const Tensor b = random_uniform({K, N}, rng);
        Tape t;
        worst = std::max(worst, max_abs_diff(t.value(ops::matmul(t, t.leaf(a), t.leaf(b))), ref::matmul(a, b)));
    }
    const auto field = voting::VoteField::build(5, 7, {1, 3}, 4);
    for (int i = 0; i < 50; ++i) {
        const Tensor in = random_uniform({dim(5, 20), dim(5, 20), 5}, rng);
        Tape t;
        worst = std::max(worst, max_abs_diff(t.value(ops::transposed_conv2d_fixed(t, t.leaf(in), field.kernel)),
                                             ref::transposed_conv2d_fixed(in, field.kernel)));
    }
    for (int i = 0; i < 50; ++i) {
        const int N = 1 + static_cast<int>(rng() % 4);
        const int C = N * dim(1, 8);
        const Tensor bank = random_uniform({dim(1, 20), C}, rng);
        const Tensor fsr = random_uniform({dim(4, 20), dim(4, 20), C}, rng);
        Tape t;
        worst = std::max(worst, max_abs_diff(t.value(pyramid::group_pixel_correlation(t, t.leaf(bank), t.leaf(fsr), N)),
                                             ref::group_pixel_correlation(bank, fsr, N)));
    }
    for (int i = 0; i < 50; ++i) {
        const Tensor a = random_uniform({dim(2, 20), dim(2, 20), dim(1, 32)}, rng, -2, 2);
        const Tensor c = random_uniform(a.dims, rng, -2, 2);
        Tape t;
        const int na = t.leaf(a), nc = t.leaf(c);
        const int nadd = ops::add(t, na, nc), nmul = ops::mul(t, na, nc);
        const int nrelu = ops::relu(t, na), nsig = ops::sigmoid(t, na);
        const Tensor& vadd = t.value(nadd);
        const Tensor& vmul = t.value(nmul);
        const Tensor& vrelu = t.value(nrelu);
        const Tensor& vsig = t.value(nsig);
        for (size_t j = 0; j < a.data.size(); ++j) {
            worst = std::max(worst, std::abs(double(vadd.data[j] - (a.data[j] + c.data[j]))));
            worst = std::max(worst, std::abs(double(vmul.data[j] - a.data[j] * c.data[j])));
            worst = std::max(worst, std::abs(double(vrelu.data[j] - std::max(Real(0), a.data[j]))));
            worst = std::max(worst, std::abs(double(vsig.data[j] - Real(1) / (Real(1) + std::exp(-a.data[j])))));
        }
    }
    for (int i = 0; i < 50; ++i) {
        const int H = dim(1, 10), W = dim(1, 10), C = 4 * dim(1, 8);
        const Tensor in = random_uniform({H, W, C}, rng);
        Tape t;
        const Tensor& out = t.value(ops::pixel_shuffle_2x(t, t.leaf(in)));
        for (int y = 0; y < 2 * H; ++y)
            for (int x = 0; x < 2 * W; ++x)
                for (int ch = 0; ch < C / 4; ++ch)
                    worst = std::max(worst, std::abs(double(out.at(y, x, ch) -
                                                           in.at(y / 2, x / 2, ch * 4 + (y % 2) * 2 + x % 2))));
    }
    // vote aggregation against the brute-force region-walk oracle
    for (int i = 0; i < 50; ++i) {
        const int H = dim(5, 16), W = dim(5, 16);
        const Tensor fr = random_uniform({H, W, 10}, rng);
        Tape t;
        const auto maps = voting::vote_aggregation(t, t.leaf(fr), field);
        Tensor want({H, W, 1});
        for (int half = 0; half < 2; ++half) {
            for (int qy = 0; qy < H; ++qy)
                for (int qx = 0; qx < W; ++qx) {
                    double s = 0;
                    for (int py = 0; py < H; ++py)
                        for (int px = 0; px < W; ++px) {
                            const int r = field.region_of(qy - py, qx - px);
                            if (r < 0) continue;
                            s += fr.at(py, px, half * 5 + r) * field.kernel.at(qy - py + 3, qx - px + 3, r);
                        }
                    want.at(qy, qx, 0) = static_cast<Real>(s);
                }
            worst = std::max(worst, max_abs_diff(t.value(half == 0 ? maps.top_left : maps.bottom_right), want));
        }
    }
    report(1, worst <= 1e-10, "kernel oracles, max |diff| " + std::to_string(worst));
}

// ---- criterion 2: end-to-end gradient check ---------------------------------

void criterion_gradients(const fs::path& configs) {
    begin();
    const Config cfg = Config::from_file((configs / "gradcheck.cfg").string());
    Model model = Model::build(cfg);
    const int t_size = cfg.integer("template_size");
    const int s_size = cfg.integer("search_size");
    const GeometryMap geom = model.presence_geometry();
    const int extent = model.presence_extent(s_size);
    const int feat = model.backbone().feature_extent(s_size);

    std::mt19937_64 rng(2002);
    struct Pair {
        Tensor templ, search, target;
    };
    std::vector<Pair> batch;
    for (int p = 0; p < 2; ++p) {
        Pair pr{random_uniform({t_size, t_size, 3}, rng, 0, 1), random_uniform({s_size, s_size, 3}, rng, 0, 1),
                Tensor{}};
        const double a = geom.to_image(extent / 4 + p);
        const double b = geom.to_image(3 * extent / 4 - p);
        pr.target = encode_groundtruth({a, a, b, b}, geom, extent, extent).maps;
        batch.push_back(std::move(pr));
    }

    const auto rep = grad_check(model.params(), [&](Tape& tape, const ParamSet::Binding& b) {
        int total = -1;
        for (const auto& pr : batch) {
            const auto fwd = model.forward_pair(tape, b, tape.leaf(pr.templ), tape.leaf(pr.search));
            const int pred = ops::concat_channels(tape, {fwd.top_left, fwd.bottom_right});
            const int loss = ops::focal_loss(tape, pred, pr.target);
            total = total < 0 ? loss : ops::add(tape, total, loss);
        }
        return total;
    }, 200);

    std::ostringstream d;
    d << "2-pair loss (search feature " << feat << "x" << feat << "), max rel err " << rep.max_rel_error << " over "
      << rep.coords_checked << " coords (worst " << rep.worst_param << ")";
    report(2, rep.finite && rep.coords_checked >= 200 && rep.max_rel_error <= 1e-4 && feat == 31, d.str());
}

// ---- criterion 3: shape algebra with the full-scale constants ---------------

void criterion_shapes(const fs::path& configs) {
    begin();
    const Config cfg = Config::from_file((configs / "default.cfg").string());
    Model model = Model::build(cfg);
    bool ok = true;
    std::ostringstream d;

    const int h = model.backbone().feature_extent(cfg.integer("template_size"));
    const int M = pyramid::bank_size(h);
    ok &= h == 6 && M == 57;
    const int corr = M * cfg.integer("groups");
    ok &= corr == 456;
    const int twoR = model.params().entry("vote_gen.conv5.w").value.dims[3];
    ok &= twoR == 18;
    const double stride = model.presence_geometry().stride;
    ok &= stride == 2.0;
    const int hs = model.backbone().feature_extent(cfg.integer("search_size"));
    ok &= model.presence_extent(cfg.integer("search_size")) == 2 * (hs - 6);

    d << "h=" << h << " M=" << M << " corr_channels=" << corr << " vote_channels=" << twoR << " stride=" << stride;
    report(3, ok, d.str());
}

// ---- criterion 4: supervision round trip + radius oracle --------------------

double scan_radius(double w, double h, double d) {
    auto ok = [&](double r) {
        if (w - 2 * r <= 0 || h - 2 * r <= 0) return false;
        const double inset = (w - 2 * r) * (h - 2 * r) / (w * h);
        const double outset = (w * h) / ((w + 2 * r) * (h + 2 * r));
        const double shifted = (w - r) * (h - r) / (2 * w * h - (w - r) * (h - r));
        return inset >= d && outset >= d && shifted >= d;
    };
    double r = 0;
    while (ok(r + 0.01)) r += 0.01;
    return r;
}

void criterion_supervision() {
    begin();
    const GeometryMap geom{2, 40};  // desk-scale presence geometry
    const int extent = 40;
    std::mt19937_64 rng(4004);
    double worst_px = 0;
    int clamped = 0;
    for (int i = 0; i < 1000; ++i) {
        const double lo = geom.to_image(0), hi = geom.to_image(extent - 1);
        const double x0 = lo + (hi - lo - 14) * (rng() % 1000) / 1000.0;
        const double y0 = lo + (hi - lo - 14) * (rng() % 1000) / 1000.0;
        const double w = 6 + (hi - x0 - 6) * (rng() % 1000) / 1000.0;
        const double h = 6 + (hi - y0 - 6) * (rng() % 1000) / 1000.0;
        const BoundingBox box{x0, y0, x0 + w, y0 + h};
        const auto gt = encode_groundtruth(box, geom, extent, extent);
        if (gt.tl.clamped || gt.br.clamped) {
            ++clamped;
            continue;
        }
        worst_px = std::max({worst_px, std::abs(geom.to_image(gt.tl.x) - box.x_tl),
                             std::abs(geom.to_image(gt.tl.y) - box.y_tl),
                             std::abs(geom.to_image(gt.br.x) - box.x_br),
                             std::abs(geom.to_image(gt.br.y) - box.y_br)});
    }

    double worst_radius = 0;
    for (int wi = 1; wi <= 10; ++wi)
        for (int hi = 1; hi <= 10; ++hi) {
            const double w = 2.0 * wi, h = 2.0 * hi;
            worst_radius = std::max(worst_radius, std::abs(gaussian_radius(w, h, 0.5) - scan_radius(w, h, 0.5)));
        }

    std::ostringstream d;
    d << "round-trip worst " << worst_px << "px (s=" << geom.stride << ", " << clamped
      << " clamped skipped), radius-vs-scan worst " << worst_radius << " cells";
    report(4, worst_px <= geom.stride && worst_radius <= 0.15 && clamped == 0, d.str());
}

// ---- criteria 5 and 6: desk-scale training ----------------------------------

struct TrainOutcome {
    Model model;
    std::vector<TrainSample> pairs;
    TrainReport report;
};

double decoded_iou(const Model& model, const TrainSample& p) {
    Tape tape;
    const auto b = model.params().inject(tape);
    const auto fwd = model.forward_pair(tape, b, tape.leaf(p.template_crop), tape.leaf(p.search_crop));
    const GeometryMap geom = model.presence_geometry();
    auto peak = [&](const Tensor& map) {
        int best = 0;
        for (int i = 1; i < map.dims[0] * map.dims[1]; ++i)
            if (map.data[i] > map.data[best]) best = i;
        return std::pair<double, double>{geom.to_image(best % map.dims[1]), geom.to_image(best / map.dims[1])};
    };
    const auto [tlx, tly] = peak(tape.value(fwd.top_left));
    const auto [brx, bry] = peak(tape.value(fwd.bottom_right));
    const BoundingBox dec = BoundingBox{tlx, tly, brx, bry}.normalized();
    return iou(dec, p.box);
}

void criteria_training(const fs::path& configs) {
    begin();
    const Config cfg = Config::from_file((configs / "train_toy.cfg").string());

    std::vector<SyntheticSequence> train_seqs, held_out;
    for (int s = 0; s < 200; ++s)
        train_seqs.push_back(generate_sequence(10000 + s, cfg.integer("n_frames"), cfg.integer("frame_size"),
                                               cfg.integer("difficulty")));
    for (int s = 0; s < 50; ++s)
        held_out.push_back(generate_sequence(90000 + s, cfg.integer("n_frames"), cfg.integer("frame_size"),
                                             cfg.integer("difficulty")));

    Model model = Model::build(cfg);
    const auto pairs = build_pairs(model, train_seqs, 64, 424242);
    const auto rep = train(model, pairs, &std::cout);

    double head = 0, tail = 0;
    const size_t n = rep.loss_curve.size();
    for (size_t i = 0; i < 8; ++i) {
        head += rep.loss_curve[i] / 8;
        tail += rep.loss_curve[n - 8 + i] / 8;
    }
    double mean_iou = 0;
    for (const auto& p : pairs) mean_iou += decoded_iou(model, p) / pairs.size();

    std::ostringstream d5;
    d5 << "64-pair overfit, " << n << " steps, loss " << head << " -> " << tail << " (ratio " << tail / head
       << "), train mean IoU " << mean_iou;
    report(5, n <= 5000 && tail < 0.10 * head && mean_iou >= 0.8, d5.str());

    begin();
    const MetricReport metrics = evaluate(model, held_out);
    std::ostringstream d6;
    d6 << "50 held-out sequences: AO " << metrics.ao << ", SR@0.50 " << metrics.sr50 << ", SR@0.75 " << metrics.sr75
       << " (reported, no floor)";
    report(6, metrics.ao >= 0.6 && metrics.sr50 >= 0.7, d6.str());
}

// ---- criterion 7: CLI determinism -------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void criterion_determinism(const std::string& cli) {
    begin();
    const fs::path work = fs::temp_directory_path() / "pcdhv_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);
    const fs::path cfg = work / "tiny.cfg";
    {
        std::ofstream os(cfg);
        os << "arch = micro\nchannels = 8\ngroups = 4\nregions = 5\nvote_field_extent = 7\n"
              "vote_field_radii = 1,3\nvote_gen_width1 = 16\nvote_gen_width2 = 8\nvote_gen_width3 = 8\n"
              "vote_gen_width4 = 8\ntemplate_size = 13\nsearch_size = 63\nrefine_upsample = 0\n"
              "frame_size = 128\nn_frames = 6\nsteps = 4\nbatch_size = 2\nseed = 3\n";
    }
    auto run = [&](const std::string& args) {
        const std::string cmd = cli + " " + args + " >> " + (work / "log.txt").string() + " 2>&1";
        return std::system(cmd.c_str());
    };
    bool ok = run("gen-data --config " + cfg.string() + " --out " + (work / "data").string() + " --sequences 2") == 0;
    for (const char* tag : {"a", "b"}) {
        ok = ok && run("--workers 1 train --config " + cfg.string() + " --data " + (work / "data").string() +
                       " --pairs 4 --out " + (work / ("params_" + std::string(tag) + ".bin")).string()) == 0;
        ok = ok && run("--workers 1 eval --config " + cfg.string() + " --params " +
                       (work / ("params_" + std::string(tag) + ".bin")).string() + " --data " +
                       (work / "data").string() + " --out " + (work / ("report_" + std::string(tag) + ".txt")).string()) == 0;
    }
    const bool params_same = ok && slurp(work / "params_a.bin") == slurp(work / "params_b.bin");
    const bool reports_same = ok && slurp(work / "report_a.txt") == slurp(work / "report_b.txt");
    const bool nonempty = ok && !slurp(work / "params_a.bin").empty() && !slurp(work / "report_a.txt").empty();
    report(7, ok && params_same && reports_same && nonempty,
           std::string("train+eval twice via CLI: parameter containers ") + (params_same ? "identical" : "differ") +
               ", reports " + (reports_same ? "identical" : "differ"));
    fs::remove_all(work);
}

// ---- criterion 8: ablation toggles ------------------------------------------

void criterion_ablations(const fs::path& configs) {
    begin();
    Config base = Config::from_file((configs / "gradcheck.cfg").string());
    base.set("refine_upsample", "1");

    Config depthwise = base;
    depthwise.set("correlation", "depthwise");
    Config no_up = base;
    no_up.set("refine_upsample", "0");

    std::mt19937_64 rng(8008);
    const Tensor templ = random_uniform({13, 13, 3}, rng, 0, 1);
    const Tensor search = random_uniform({63, 63, 3}, rng, 0, 1);
    auto run = [&](const Config& cfg) {
        Model m = Model::build(cfg);
        Tape t;
        const auto b = m.params().inject(t);
        const auto fwd = m.forward_pair(t, b, t.leaf(templ), t.leaf(search));
        return t.value(fwd.top_left);
    };
    const Tensor out_base = run(base);
    const Tensor out_dw = run(depthwise);
    const Tensor out_nu = run(no_up);

    const bool dw_differs = out_dw.dims != out_base.dims || out_dw.data != out_base.data;
    const bool nu_differs = out_nu.dims != out_base.dims || out_nu.data != out_base.data;
    std::ostringstream d;
    d << "depthwise-correlation baseline (" << out_dw.dims[0] << "x" << out_dw.dims[1]
      << ") and refinement-without-upsample (" << out_nu.dims[0] << "x" << out_nu.dims[1] << ") both change the output ("
      << out_base.dims[0] << "x" << out_base.dims[1] << " baseline)";
    report(8, dw_differs && nu_differs, d.str());
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::cerr << "usage: acceptance <configs-dir> <cli-binary>\n";
        return 64;
    }
    const fs::path configs = argv[1];
    const std::string cli = argv[2];

    criterion_oracles();
    criterion_gradients(configs);
    criterion_shapes(configs);
    criterion_supervision();
    criteria_training(configs);
    criterion_determinism(cli);
    criterion_ablations(configs);

    std::cout << (g_failures == 0 ? "all criteria passed\n" : std::to_string(g_failures) + " criteria failed\n");
    return g_failures;
}
