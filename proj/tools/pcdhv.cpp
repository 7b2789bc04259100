// pcdhv: pyramid-correlation deep-hough-voting corner tracker, one binary.
//
// Exit codes: 0 ok, 1 usage, 2 missing input file, 3 malformed config,
// 4 shape mismatch, 5 numeric failure, 6 IO error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "pcdhv/gradcheck.hpp"
#include "pcdhv/image.hpp"
#include "pcdhv/ops.hpp"
#include "pcdhv/reference.hpp"
#include "pcdhv/tracker.hpp"
#include "pcdhv/trainer.hpp"

namespace fs = std::filesystem;
using namespace pcdhv;

namespace {

struct MissingFile : std::runtime_error {
    explicit MissingFile(const std::string& p) : std::runtime_error("missing file: " + p) {}
};

void require_exists(const std::string& path) {
    if (!fs::exists(path)) throw MissingFile(path);
}

Config load_config(const std::string& path) {
    if (path.empty()) return Config();
    require_exists(path);
    return Config::from_file(path);
}

void load_params_into(Model& model, const std::string& path) {
    require_exists(path);
    const ParamSet loaded = ParamSet::load(path);
    for (const auto& e : loaded.entries()) {
        Tensor& dst = model.params().value(e.name);
        if (dst.dims != e.value.dims) throw ShapeError("parameter " + e.name + ": container shape mismatch");
        dst = e.value;
    }
    if (loaded.count() != model.params().count())
        throw ShapeError("parameter container entry count does not match the model");
}

std::vector<std::string> sequence_dirs(const std::string& data_dir) {
    require_exists(data_dir);
    std::vector<std::string> dirs;
    for (const auto& e : fs::directory_iterator(data_dir))
        if (e.is_directory() && fs::exists(e.path() / "groundtruth.txt")) dirs.push_back(e.path().string());
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw MissingFile(data_dir + " (no sequence directories)");
    return dirs;
}

std::vector<SyntheticSequence> load_sequences(const std::string& data_dir) {
    std::vector<SyntheticSequence> seqs;
    for (const auto& d : sequence_dirs(data_dir)) seqs.push_back(load_sequence(d));
    return seqs;
}

void print_metrics(std::ostream& os, const MetricReport& rep) {
    os << std::setprecision(17);
    os << "frames " << rep.per_frame_iou.size() << "\n";
    os << "AO " << rep.ao << "\n";
    os << "SR@0.50 " << rep.sr50 << "\n";
    os << "SR@0.75 " << rep.sr75 << "\n";
}

int cmd_gen_data(const Config& cfg, const std::string& out_dir, int n_sequences, long long seed_base) {
    fs::create_directories(out_dir);
    for (int s = 0; s < n_sequences; ++s) {
        const auto seq = generate_sequence(static_cast<uint64_t>(seed_base + s), cfg.integer("n_frames"),
                                           cfg.integer("frame_size"), cfg.integer("difficulty"));
        char name[32];
        std::snprintf(name, sizeof(name), "seq_%04d", s);
        save_sequence((fs::path(out_dir) / name).string(), seq);
    }
    std::cout << "wrote " << n_sequences << " sequences to " << out_dir << "\n";
    return 0;
}

int cmd_train(const Config& cfg, const std::string& data_dir, int n_pairs, const std::string& out_params,
              const std::string& loss_out) {
    Model model = Model::build(cfg);
    const auto seqs = load_sequences(data_dir);
    const auto pairs = build_pairs(model, seqs, n_pairs, static_cast<uint64_t>(cfg.integer("seed")));
    const auto report = train(model, pairs, &std::cout);
    model.params().save(out_params);
    if (!loss_out.empty()) {
        std::ofstream os(loss_out);
        if (!os) throw std::runtime_error("cannot open for write: " + loss_out);
        os << std::setprecision(17);
        for (double v : report.loss_curve) os << v << "\n";
    }
    std::cout << "saved " << model.params().scalar_count() << " scalars to " << out_params << "\n";
    return 0;
}

int cmd_track(const Config& cfg, const std::string& params_path, const std::string& frames_dir,
              const std::string& init_path, const std::string& out_path) {
    Model model = Model::build(cfg);
    load_params_into(model, params_path);

    require_exists(init_path);
    std::ifstream init(init_path);
    BoundingBox box;
    if (!(init >> box.x_tl >> box.y_tl >> box.x_br >> box.y_br))
        throw std::runtime_error("malformed init box file: " + init_path);

    require_exists(frames_dir);
    std::vector<std::string> frame_files;
    for (const auto& e : fs::directory_iterator(frames_dir))
        if (e.path().extension() == ".ppm") frame_files.push_back(e.path().string());
    std::sort(frame_files.begin(), frame_files.end());
    if (frame_files.empty()) throw MissingFile(frames_dir + " (no .ppm frames)");

    std::ofstream file_out;
    if (!out_path.empty()) {
        file_out.open(out_path);
        if (!file_out) throw std::runtime_error("cannot open for write: " + out_path);
    }
    std::ostream& os = out_path.empty() ? std::cout : file_out;
    os << std::setprecision(17);

    Tracker tracker(model);
    TrackerState st = tracker.init(read_ppm(frame_files[0]), box);
    os << box.x_tl << " " << box.y_tl << " " << box.x_br << " " << box.y_br << "\n";
    for (size_t f = 1; f < frame_files.size(); ++f) {
        const auto res = tracker.step(st, read_ppm(frame_files[f]));
        if (!res.ok) throw NumericError("non-finite presence map at frame " + std::to_string(f));
        os << res.box.x_tl << " " << res.box.y_tl << " " << res.box.x_br << " " << res.box.y_br << "\n";
    }
    return 0;
}

int cmd_eval(const Config& cfg, const std::string& params_path, const std::string& data_dir,
             const std::string& out_path) {
    Model model = Model::build(cfg);
    load_params_into(model, params_path);
    const auto rep = evaluate(model, load_sequences(data_dir));
    print_metrics(std::cout, rep);
    if (!out_path.empty()) {
        std::ofstream os(out_path);
        if (!os) throw std::runtime_error("cannot open for write: " + out_path);
        print_metrics(os, rep);
    }
    return 0;
}

int cmd_gradcheck(const Config& cfg, long long n_coords, double eps) {
    Model model = Model::build(cfg);
    const int t_size = cfg.integer("template_size");
    const int s_size = cfg.integer("search_size");
    const GeometryMap geom = model.presence_geometry();
    const int extent = model.presence_extent(s_size);

    std::mt19937_64 rng(static_cast<uint64_t>(cfg.integer("seed")) + 17);
    struct Pair {
        Tensor templ, search, target;
    };
    std::vector<Pair> batch;
    for (int p = 0; p < 2; ++p) {
        Pair pr{random_uniform({t_size, t_size, 3}, rng, 0, 1),
                random_uniform({s_size, s_size, 3}, rng, 0, 1), Tensor{}};
        const double a = geom.to_image(extent / 4 + p);
        const double b = geom.to_image(3 * extent / 4 - p);
        pr.target = encode_groundtruth({a, a, b, b}, geom, extent, extent).maps;
        batch.push_back(std::move(pr));
    }

    const LossFn f = [&](Tape& tape, const ParamSet::Binding& b) {
        int total = -1;
        for (const auto& pr : batch) {
            const auto fwd = model.forward_pair(tape, b, tape.leaf(pr.templ), tape.leaf(pr.search));
            const int pred = ops::concat_channels(tape, {fwd.top_left, fwd.bottom_right});
            const int loss = ops::focal_loss(tape, pred, pr.target);
            total = total < 0 ? loss : ops::add(tape, total, loss);
        }
        return total;
    };

    const auto rep = grad_check(model.params(), f, n_coords, eps, static_cast<uint64_t>(cfg.integer("seed")));
    std::cout << std::setprecision(6) << "max relative error " << rep.max_rel_error << " over " << rep.coords_checked
              << " coordinates (worst " << rep.worst_param << "[" << rep.worst_index << "])\n";
    if (!rep.finite || rep.max_rel_error > 1e-4) {
        std::cerr << "gradcheck: tolerance 1e-4 exceeded\n";
        return 5;
    }
    return 0;
}

std::vector<int> parse_size(const std::string& s) {
    std::vector<int> dims;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, 'x')) dims.push_back(std::stoi(item));
    if (dims.size() != 3) throw ConfigError("--size expects HxWxC");
    return dims;
}

int cmd_bench(const Config& cfg, const std::string& op, const std::string& size_str, int bank_rows, int iters) {
    const auto dims = parse_size(size_str);
    std::mt19937_64 rng(static_cast<uint64_t>(cfg.integer("seed")) + 99);
    const Tensor input = random_uniform(dims, rng, -1, 1);

    Tensor serial_out, parallel_out;
    auto run = [&](auto&& serial, auto&& parallel) {
        using clock = std::chrono::steady_clock;
        const auto t0 = clock::now();
        for (int i = 0; i < iters; ++i) serial_out = serial();
        const auto t1 = clock::now();
        for (int i = 0; i < iters; ++i) parallel_out = parallel();
        const auto t2 = clock::now();
        const double cells = static_cast<double>(serial_out.size()) * iters;
        const double s0 = std::chrono::duration<double>(t1 - t0).count();
        const double s1 = std::chrono::duration<double>(t2 - t1).count();
        double checksum = 0, diff = 0;
        for (size_t i = 0; i < parallel_out.data.size(); ++i) {
            checksum += parallel_out.data[i];
            diff = std::max(diff, std::abs(double(parallel_out.data[i] - serial_out.data[i])));
        }
        std::cout << std::setprecision(17) << "serial   " << cells / s0 << " cells/sec\n"
                  << "parallel " << cells / s1 << " cells/sec\n"
                  << "max |diff| " << diff << "\nchecksum " << checksum << "\n";
        if (diff != 0) throw NumericError("bench: parallel kernel diverged from the serial reference");
    };

    if (op == "conv") {
        const Tensor kernel = random_uniform({3, 3, dims[2], dims[2]}, rng, -1, 1);
        const Tensor bias = random_uniform({dims[2]}, rng, -1, 1);
        run([&] { return ref::conv2d(input, kernel, &bias, 1, 1); },
            [&] {
                Tape t;
                return t.value(ops::conv2d(t, t.leaf(input), t.leaf(kernel), t.leaf(bias), 1, 1));
            });
    } else if (op == "group-correlation") {
        const int groups = cfg.integer("groups");
        if (dims[2] % groups != 0) throw ConfigError("bench: C must be divisible by groups");
        const Tensor bank = random_uniform({bank_rows, dims[2]}, rng, -1, 1);
        run([&] { return ref::group_pixel_correlation(bank, input, groups); },
            [&] {
                Tape t;
                return t.value(pyramid::group_pixel_correlation(t, t.leaf(bank), t.leaf(input), groups));
            });
    } else {
        throw ConfigError("bench: unknown --op (conv | group-correlation)");
    }
    return 0;
}

int cmd_dump_votefield(const Config& cfg, const std::string& out_dir) {
    const auto field = voting::VoteField::build(cfg.integer("regions"), cfg.integer("vote_field_extent"),
                                                cfg.real_list("vote_field_radii"), cfg.integer("vote_field_angle_bins"));
    fs::create_directories(out_dir);
    const int E = field.extent, R = field.region_count();
    for (int r = 0; r < R; ++r) {
        Tensor slice({E, E});
        for (int y = 0; y < E; ++y)
            for (int x = 0; x < E; ++x) slice.at(y, x) = field.kernel.at(y, x, r);
        char name[32];
        std::snprintf(name, sizeof(name), "region_%02d.pgm", r);
        write_pgm((fs::path(out_dir) / name).string(), slice);
    }
    std::ofstream manifest(fs::path(out_dir) / "manifest.txt");
    if (!manifest) throw std::runtime_error("cannot open for write: " + (fs::path(out_dir) / "manifest.txt").string());
    manifest << std::setprecision(17);
    const int c = E / 2;
    for (int y = 0; y < E; ++y)
        for (int x = 0; x < E; ++x) {
            const int r = field.region_of(y - c, x - c);
            if (r < 0) continue;
            manifest << (x - c) << " " << (y - c) << " " << r << " " << field.kernel.at(y, x, r) << "\n";
        }
    std::cout << "wrote " << R << " region slices and manifest.txt to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pcdhv: pyramid pixel-wise correlation + deep Hough voting corner tracker"};
    app.require_subcommand(1);
    app.footer("config keys (key=value per line, # comments):\n" + Config::describe_keys());

    std::string config_path, out_dir, data_dir, params_path, frames_dir, init_path, out_path, loss_out;
    std::string bench_op = "group-correlation", bench_size = "31x31x32";
    int workers = 1, n_sequences = 10, n_pairs = 64, bench_bank = 57, bench_iters = 5;
    long long seed_base = -1, gc_coords = 200;
    double gc_eps = 1e-5;

    app.add_option("--workers", workers, "thread count (1 = bit-reproducible)")->capture_default_str();

    auto* gen = app.add_subcommand("gen-data", "generate synthetic sequences");
    gen->add_option("--config", config_path, "config file");
    gen->add_option("--out", out_dir, "output directory")->required();
    gen->add_option("--sequences", n_sequences, "sequence count")->capture_default_str();
    gen->add_option("--seed-base", seed_base, "first sequence seed (default: config seed)");

    auto* tr = app.add_subcommand("train", "train on frame pairs from a sequence directory");
    tr->add_option("--config", config_path, "config file");
    tr->add_option("--data", data_dir, "directory of sequence directories")->required();
    tr->add_option("--pairs", n_pairs, "training pair count")->capture_default_str();
    tr->add_option("--out", out_path, "output parameter container")->required();
    tr->add_option("--loss-out", loss_out, "write per-step loss curve to file");

    auto* tk = app.add_subcommand("track", "track one sequence, one box per line");
    tk->add_option("--config", config_path, "config file");
    tk->add_option("--params", params_path, "parameter container")->required();
    tk->add_option("--frames", frames_dir, "directory of .ppm frames")->required();
    tk->add_option("--init", init_path, "file with the frame-0 box: x_tl y_tl x_br y_br")->required();
    tk->add_option("--out", out_path, "box output file (default stdout)");

    auto* ev = app.add_subcommand("eval", "AO / SR metrics over a sequence directory");
    ev->add_option("--config", config_path, "config file");
    ev->add_option("--params", params_path, "parameter container")->required();
    ev->add_option("--data", data_dir, "directory of sequence directories")->required();
    ev->add_option("--out", out_path, "also write the report to this file");

    auto* gc = app.add_subcommand("gradcheck", "finite-difference check of tape gradients");
    gc->add_option("--config", config_path, "config file");
    gc->add_option("--coords", gc_coords, "parameter coordinates to sample")->capture_default_str();
    gc->add_option("--eps", gc_eps, "finite-difference step")->capture_default_str();

    auto* be = app.add_subcommand("bench", "serial reference vs parallel kernel");
    be->add_option("--config", config_path, "config file");
    be->add_option("--op", bench_op, "conv | group-correlation")->capture_default_str();
    be->add_option("--size", bench_size, "input size HxWxC")->capture_default_str();
    be->add_option("--bank-rows", bench_bank, "kernel bank rows M (group-correlation)")->capture_default_str();
    be->add_option("--iters", bench_iters, "repetitions")->capture_default_str();

    auto* dv = app.add_subcommand("dump-votefield", "PGM slices + text manifest of the vote field");
    dv->add_option("--config", config_path, "config file");
    dv->add_option("--out", out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
#ifdef _OPENMP
        omp_set_num_threads(workers);
#endif
        const Config cfg = load_config(config_path);
        if (*gen)
            return cmd_gen_data(cfg, out_dir, n_sequences, seed_base >= 0 ? seed_base : cfg.integer("seed"));
        if (*tr) return cmd_train(cfg, data_dir, n_pairs, out_path, loss_out);
        if (*tk) return cmd_track(cfg, params_path, frames_dir, init_path, out_path);
        if (*ev) return cmd_eval(cfg, params_path, data_dir, out_path);
        if (*gc) return cmd_gradcheck(cfg, gc_coords, gc_eps);
        if (*be) return cmd_bench(cfg, bench_op, bench_size, bench_bank, bench_iters);
        if (*dv) return cmd_dump_votefield(cfg, out_dir);
    } catch (const MissingFile& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 3;
    } catch (const ShapeError& e) {
        std::cerr << "error: shape: " << e.what() << "\n";
        return 4;
    } catch (const NumericError& e) {
        std::cerr << "error: numeric: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: io: " << e.what() << "\n";
        return 6;
    }
    return 1;
}
