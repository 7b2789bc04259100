#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "pcdhv/synthetic.hpp"
#include "pcdhv/tracker.hpp"

using namespace pcdhv;

namespace {

Config micro_cfg() {
    Config cfg;
    cfg.set("arch", "micro");
    cfg.set("channels", "8");
    cfg.set("groups", "4");
    cfg.set("regions", "5");
    cfg.set("vote_field_extent", "7");
    cfg.set("vote_field_radii", "1,3");
    cfg.set("vote_gen_width1", "16");
    cfg.set("vote_gen_width2", "8");
    cfg.set("vote_gen_width3", "8");
    cfg.set("vote_gen_width4", "8");
    cfg.set("template_size", "13");
    cfg.set("search_size", "63");
    cfg.set("refine_upsample", "0");
    return cfg;
}

}  // namespace

TEST_CASE("template crop side") {
    CHECK(template_crop_side(64, 64) == doctest::Approx(128.0).epsilon(1e-12));
    CHECK(template_crop_side(10, 30) == doctest::Approx(std::sqrt(30.0 * 50.0)).epsilon(1e-12));
}

TEST_CASE("crop transform round trip") {
    const CropTransform t{37.5, 12.25, 80.0, 17};
    for (int u = 0; u < 17; ++u) {
        CHECK(t.to_crop_x(t.to_image_x(u)) == doctest::Approx(double(u)).epsilon(1e-12));
        CHECK(t.to_crop_y(t.to_image_y(u)) == doctest::Approx(double(u)).epsilon(1e-12));
    }
}

TEST_CASE("identity crop reproduces the frame, outside taps read the mean") {
    std::mt19937_64 rng(3);
    const Tensor frame = random_uniform({16, 16, 3}, rng, 0, 1);
    const Tensor same = crop_resize(frame, {8.0, 8.0, 16.0, 16});
    for (size_t i = 0; i < frame.data.size(); ++i) CHECK(same.data[i] == doctest::Approx(frame.data[i]).epsilon(1e-12));

    std::vector<double> mean(3, 0);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            for (int c = 0; c < 3; ++c) mean[c] += frame.at(y, x, c);
    for (auto& m : mean) m /= 256.0;

    // crop centered far outside the frame: pure fill
    const Tensor off = crop_resize(frame, {200.0, 200.0, 8.0, 4});
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
            for (int c = 0; c < 3; ++c) CHECK(off.at(y, x, c) == doctest::Approx(mean[c]).epsilon(1e-12));
}

TEST_CASE("peak decode maps cells through geometry and crop") {
    Tensor tl = Tensor::zeros({16, 16, 1});
    tl.at(3, 2, 0) = 1;
    Tensor br = Tensor::zeros({16, 16, 1});
    br.at(12, 10, 0) = 1;
    const GeometryMap geom{2, 0};
    const CropTransform identity{16.0, 16.0, 32.0, 32};
    const auto [tlx, tly] = Tracker::decode_peak(tl, geom, identity);
    const auto [brx, bry] = Tracker::decode_peak(br, geom, identity);
    CHECK(tlx == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(tly == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(brx == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(bry == doctest::Approx(24.0).epsilon(1e-12));
}

TEST_CASE("argmax decode: monotone invariance and row-major ties") {
    std::mt19937_64 rng(5);
    const Tensor map = random_uniform({9, 9, 1}, rng, 0, 1);
    Tensor squashed = map;
    for (auto& v : squashed.data) v = std::tanh(3 * v);  // strictly monotone
    const GeometryMap geom{1, 0};
    const CropTransform id{4.5, 4.5, 9.0, 9};
    CHECK(Tracker::decode_peak(map, geom, id) == Tracker::decode_peak(squashed, geom, id));

    Tensor tie = Tensor::zeros({4, 4, 1});
    tie.at(1, 3, 0) = 1;
    tie.at(2, 0, 0) = 1;  // later in row-major order
    const auto [x, y] = Tracker::decode_peak(tie, geom, {2.0, 2.0, 4.0, 4});
    CHECK(x == doctest::Approx(3.0));
    CHECK(y == doctest::Approx(1.0));
}

TEST_CASE("tracker init is deterministic and validates the box") {
    const Model model = Model::build(micro_cfg());
    const Tracker tracker(model);
    const auto seq = generate_sequence(9, 2, 128, 0);

    const TrackerState a = tracker.init(seq.frames[0], seq.boxes[0]);
    const TrackerState b = tracker.init(seq.frames[0], seq.boxes[0]);
    CHECK(a.template_cache.data == b.template_cache.data);
    CHECK(a.template_side == b.template_side);

    CHECK_THROWS_AS(tracker.init(seq.frames[0], {10, 10, 10, 20}), ConfigError);
}

TEST_CASE("tracker step yields a normalized finite box") {
    Config cfg = micro_cfg();
    const Model model = Model::build(cfg);
    const Tracker tracker(model);
    const auto seq = generate_sequence(11, 3, 128, 0);

    TrackerState st = tracker.init(seq.frames[0], seq.boxes[0]);
    const double w0 = st.width, h0 = st.height;
    for (size_t f = 1; f < seq.frames.size(); ++f) {
        const auto res = tracker.step(st, seq.frames[f]);
        REQUIRE(res.ok);
        CHECK(res.box.x_br >= res.box.x_tl);
        CHECK(res.box.y_br >= res.box.y_tl);
        CHECK(std::isfinite(res.box.x_tl));
        CHECK(res.top_left_map.dims == res.bottom_right_map.dims);
    }

    // gamma = 0 freezes the size
    Config frozen = micro_cfg();
    frozen.set("smoothing", "0");
    const Model m2 = Model::build(frozen);
    const Tracker t2(m2);
    TrackerState st2 = t2.init(seq.frames[0], seq.boxes[0]);
    t2.step(st2, seq.frames[1]);
    CHECK(st2.width == w0);
    CHECK(st2.height == h0);
}

TEST_CASE("identical inputs give a bit-identical trajectory") {
    const Model model = Model::build(micro_cfg());
    const Tracker tracker(model);
    const auto seq = generate_sequence(13, 4, 128, 0);

    std::vector<double> first;
    for (int rep = 0; rep < 2; ++rep) {
        TrackerState st = tracker.init(seq.frames[0], seq.boxes[0]);
        std::vector<double> coords;
        for (size_t f = 1; f < seq.frames.size(); ++f) {
            const auto res = tracker.step(st, seq.frames[f]);
            coords.insert(coords.end(), {res.box.x_tl, res.box.y_tl, res.box.x_br, res.box.y_br});
        }
        if (rep == 0)
            first = coords;
        else
            CHECK(coords == first);
    }
}
