#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "pcdhv/model.hpp"
#include "pcdhv/ops.hpp"
#include "pcdhv/reference.hpp"

using namespace pcdhv;

namespace {

Config cfg_for(const std::string& arch, int channels, int groups) {
    Config cfg;
    cfg.set("arch", arch);
    cfg.set("channels", std::to_string(channels));
    cfg.set("groups", std::to_string(groups));
    return cfg;
}

}  // namespace

TEST_CASE("feature extents per architecture") {
    const Backbone toy8 = Backbone::make(cfg_for("toy8", 16, 8));
    CHECK(toy8.feature_extent(127) == 6);
    CHECK(toy8.feature_extent(303) == 50);

    Config c = cfg_for("toy8s", 16, 4);
    const Backbone toy8s = Backbone::make(c);
    CHECK(toy8s.feature_extent(80) == 6);
    CHECK(toy8s.feature_extent(160) == 26);

    const Backbone micro = Backbone::make(cfg_for("micro", 8, 4));
    CHECK(micro.feature_extent(13) == 6);
    CHECK(micro.feature_extent(63) == 31);

    CHECK_THROWS_AS(Backbone::make(cfg_for("toy4", 16, 8)), ConfigError);
    CHECK_THROWS_AS(toy8.feature_extent(20), ShapeError);
}

TEST_CASE("geometry composition") {
    CHECK(compose_geometry({}).stride == 1);
    CHECK(compose_geometry({}).offset == 0);
    const GeometryMap g = compose_geometry({{2, 0}, {2, 0}});
    CHECK(g.stride == 4);
    CHECK(g.offset == 0);

    // stride-8 backbone + adapter x2 -> 4; the voting head's x2 brings it to 2
    const Backbone toy8 = Backbone::make(cfg_for("toy8", 16, 8));
    CHECK(toy8.geometry().stride == doctest::Approx(4));
    auto layers = toy8.layer_geometries();
    layers.push_back(upsample2x_geometry());
    CHECK(compose_geometry(layers).stride == doctest::Approx(2));

    const GeometryMap r = toy8.geometry();
    CHECK(r.to_feature(r.to_image(7.0)) == doctest::Approx(7.0));
}

TEST_CASE("backbone parameters shared across branches, adapters unshared") {
    const Config cfg = cfg_for("micro", 8, 4);
    Model model = Model::build(cfg);
    std::mt19937_64 rng(3);
    const Tensor img_t = random_uniform({13, 13, 3}, rng, 0, 1);
    const Tensor img_s = random_uniform({21, 21, 3}, rng, 0, 1);

    auto run = [&](bool templ) {
        Tape t;
        const auto b = model.params().inject(t);
        return t.value(model.backbone().forward_branch(t, b, t.leaf(templ ? img_t : img_s), templ));
    };
    const Tensor ft0 = run(true);
    const Tensor fs0 = run(false);

    // perturbing a backbone weight moves both branches
    model.params().value("backbone.conv0.w").data[0] += Real(0.5);
    CHECK(run(true).data != ft0.data);
    CHECK(run(false).data != fs0.data);
    model.params().value("backbone.conv0.w").data[0] -= Real(0.5);

    // zeroing the template adapter leaves the search branch alone
    auto& tw = model.params().value("adapter_t.conv.w");
    std::fill(tw.data.begin(), tw.data.end(), Real(0));
    CHECK(run(false).data == fs0.data);
    CHECK(run(true).data != ft0.data);
}

TEST_CASE("spatial feature selection bounds") {
    ParamSet ps;
    std::mt19937_64 rng(5);
    pyramid::init_attention_params(ps, rng, 6, "he");

    Tape t;
    auto b = ps.inject(t);
    const Tensor ft = random_uniform({4, 4, 6}, rng);
    const Tensor fta = t.value(pyramid::spatial_feature_selection(t, b, t.leaf(ft)));
    for (size_t i = 0; i < fta.data.size(); ++i) CHECK(std::abs(fta.data[i]) <= std::abs(ft.data[i]));

    // zero weights force A = sigmoid(0) = 0.5
    ParamSet zeros;
    zeros.add("attn.conv1.w", Tensor::zeros({1, 1, 6, 6}));
    zeros.add("attn.conv1.b", Tensor::zeros({6}));
    zeros.add("attn.conv2.w", Tensor::zeros({1, 1, 6, 6}));
    zeros.add("attn.conv2.b", Tensor::zeros({6}));
    Tape t2;
    auto b2 = zeros.inject(t2);
    const Tensor half = t2.value(pyramid::spatial_feature_selection(t2, b2, t2.leaf(ft)));
    for (size_t i = 0; i < half.data.size(); ++i) CHECK(half.data[i] == doctest::Approx(0.5 * ft.data[i]).epsilon(1e-14));

    // zero template stays zero
    Tape t3;
    auto b3 = ps.inject(t3);
    const Tensor z = t3.value(pyramid::spatial_feature_selection(t3, b3, t3.leaf(Tensor::zeros({4, 4, 6}))));
    for (Real v : z.data) CHECK(v == 0);
}

TEST_CASE("pyramid pooling shape law") {
    CHECK(pyramid::pooling_kernels(6) == std::vector<int>{1, 3, 5, 6});
    CHECK(pyramid::bank_size(6) == 57);
    CHECK(pyramid::pooling_kernels(2) == std::vector<int>{1, 2});
    CHECK(pyramid::bank_size(2) == 5);
    CHECK_THROWS_AS(pyramid::pooling_kernels(1), ConfigError);

    // constant template: all 57 vectors equal the constant per channel
    Tape t;
    Tensor c({6, 6, 3});
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 6; ++x) c.at(y, x, ch) = Real(ch + 1);
    const Tensor bank = t.value(pyramid::pyramid_feature_pooling(t, t.leaf(c)));
    CHECK(bank.dims == std::vector<int>{57, 3});
    for (int i = 0; i < 57; ++i)
        for (int ch = 0; ch < 3; ++ch) CHECK(bank.at(i, ch) == Real(ch + 1));
}

TEST_CASE("group correlation properties") {
    std::mt19937_64 rng(7);
    Tape t;

    // zero bank -> zero volume, channel count M*N
    const Tensor zbank = Tensor::zeros({5, 8});
    const Tensor fs = random_uniform({6, 6, 8}, rng);
    const Tensor gz = t.value(pyramid::group_pixel_correlation(t, t.leaf(zbank), t.leaf(fs), 4));
    CHECK(gz.dims == std::vector<int>{6, 6, 20});
    for (Real v : gz.data) CHECK(v == 0);

    // C = N: one channel per group, one-hot bank picks out that channel
    Tensor hot = Tensor::zeros({1, 4});
    hot.at(0, 2) = Real(2.5);
    const Tensor fs4 = random_uniform({3, 3, 4}, rng);
    const Tensor gh = t.value(pyramid::group_pixel_correlation(t, t.leaf(hot), t.leaf(fs4), 4));
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) {
            CHECK(gh.at(y, x, 2) == doctest::Approx(2.5 * fs4.at(y, x, 2)).epsilon(1e-14));
            CHECK(gh.at(y, x, 0) == 0);
        }

    // reference agreement
    const Tensor bank = random_uniform({57, 16}, rng);
    const Tensor big = random_uniform({9, 9, 16}, rng);
    const Tensor got = t.value(pyramid::group_pixel_correlation(t, t.leaf(bank), t.leaf(big), 4));
    const Tensor want = ref::group_pixel_correlation(bank, big, 4);
    CHECK(got.dims == want.dims);
    for (size_t i = 0; i < got.data.size(); ++i) CHECK(std::abs(got.data[i] - want.data[i]) <= 1e-12);

    CHECK_THROWS_AS(pyramid::group_pixel_correlation(t, t.leaf(bank), t.leaf(big), 5), ConfigError);
}

TEST_CASE("group correlation translation equivariance and group independence") {
    std::mt19937_64 rng(9);
    Tape t;
    const Tensor bank = random_uniform({4, 8}, rng);
    const Tensor fs = random_uniform({5, 5, 8}, rng);

    Tensor shifted({5, 5, 8});
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x)
            for (int c = 0; c < 8; ++c) shifted.at(y, x, c) = fs.at((y + 2) % 5, (x + 1) % 5, c);
    const Tensor g0 = t.value(pyramid::group_pixel_correlation(t, t.leaf(bank), t.leaf(fs), 4));
    const Tensor g1 = t.value(pyramid::group_pixel_correlation(t, t.leaf(bank), t.leaf(shifted), 4));
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x)
            for (int c = 0; c < 16; ++c) CHECK(g1.at(y, x, c) == g0.at((y + 2) % 5, (x + 1) % 5, c));

    Tensor bumped = fs;
    bumped.at(2, 2, 3) += 1;  // group 1 when N=4 (channels 2,3 belong to group 1)
    const Tensor g2 = t.value(pyramid::group_pixel_correlation(t, t.leaf(bank), t.leaf(bumped), 4));
    for (int c = 0; c < 16; ++c) {
        const bool same_group = c % 4 == 1;
        if (!same_group) CHECK(g2.at(2, 2, c) == g0.at(2, 2, c));
    }
}

TEST_CASE("full correlation pipeline equals monolithic oracle") {
    const Config cfg = cfg_for("micro", 8, 4);
    Model model = Model::build(cfg);
    std::mt19937_64 rng(11);
    const Tensor img_t = random_uniform({13, 13, 3}, rng, 0, 1);
    const Tensor img_s = random_uniform({21, 21, 3}, rng, 0, 1);

    Tape t;
    const auto b = model.params().inject(t);
    const int ft = model.backbone().forward_branch(t, b, t.leaf(img_t), true);
    const int fs = model.backbone().forward_branch(t, b, t.leaf(img_s), false);
    const int fta = pyramid::spatial_feature_selection(t, b, ft);
    const int bank = pyramid::pyramid_feature_pooling(t, fta);
    const Tensor got = t.value(pyramid::group_pixel_correlation(t, bank, fs, 4));

    const Tensor want = ref::group_pixel_correlation(t.value(bank), t.value(fs), 4);
    CHECK(got.dims == want.dims);
    for (size_t i = 0; i < got.data.size(); ++i) CHECK(std::abs(got.data[i] - want.data[i]) <= 1e-10);
}
