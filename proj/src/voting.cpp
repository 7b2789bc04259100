#include "pcdhv/voting.hpp"

#include <cmath>

#include "pcdhv/ops.hpp"

namespace pcdhv::voting {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

VoteField VoteField::build(int regions, int extent, const std::vector<double>& radii, int angle_bins) {
    if (extent % 2 == 0) throw ConfigError("vote field extent must be odd");
    if (radii.empty()) throw ConfigError("vote field needs at least one ring radius");
    for (size_t i = 1; i < radii.size(); ++i)
        if (radii[i] <= radii[i - 1]) throw ConfigError("vote field radii must be strictly increasing");
    if (radii.back() > (extent - 1) / 2.0) throw ConfigError("vote field max radius exceeds kernel extent");
    const int expected = 1 + static_cast<int>(radii.size() - 1) * angle_bins;
    if (regions != expected)
        throw ConfigError("region count must equal 1 + (len(radii)-1)*angle_bins, got " + std::to_string(regions) +
                          " expected " + std::to_string(expected));

    VoteField f;
    f.extent = extent;
    f.radii = radii;
    f.angle_bins = angle_bins;
    f.region.assign(static_cast<size_t>(extent) * extent, -1);

    const int c = extent / 2;
    std::vector<int> counts(regions, 0);
    for (int y = 0; y < extent; ++y) {
        for (int x = 0; x < extent; ++x) {
            const int dy = y - c, dx = x - c;
            const double dist = std::sqrt(static_cast<double>(dy) * dy + static_cast<double>(dx) * dx);
            int r = -1;
            if (dist <= radii[0]) {
                r = 0;
            } else if (dist <= radii.back()) {
                size_t a = 1;
                while (dist > radii[a]) ++a;  // annulus (radii[a-1], radii[a]]
                double ang = std::atan2(static_cast<double>(dy), static_cast<double>(dx));
                if (ang < 0) ang += kTwoPi;
                const double width = kTwoPi / angle_bins;
                const double pos = ang / width;
                int sector = static_cast<int>(std::floor(pos));
                // offsets exactly on a sector boundary belong to the lower-index sector
                const double near = std::round(pos);
                if (std::abs(pos - near) < 1e-9) {
                    const int k = static_cast<int>(near) % angle_bins;
                    sector = (k == 0) ? 0 : k - 1;
                }
                if (sector >= angle_bins) sector = angle_bins - 1;
                r = 1 + static_cast<int>(a - 1) * angle_bins + sector;
            }
            f.region[static_cast<size_t>(y) * extent + x] = r;
            if (r >= 0) ++counts[r];
        }
    }
    for (int r = 0; r < regions; ++r)
        if (counts[r] == 0) throw ConfigError("vote field region " + std::to_string(r) + " is empty");
    if (f.region[static_cast<size_t>(c) * extent + c] != 0) throw ConfigError("vote field center must be region 0");

    f.kernel = Tensor::zeros({extent, extent, regions});
    for (int y = 0; y < extent; ++y)
        for (int x = 0; x < extent; ++x) {
            const int r = f.region[static_cast<size_t>(y) * extent + x];
            if (r >= 0) f.kernel.at(y, x, r) = Real(1) / static_cast<Real>(counts[r]);
        }
    return f;
}

int VoteField::region_of(int dy, int dx) const {
    const int c = extent / 2;
    if (std::abs(dy) > c || std::abs(dx) > c) return -1;
    return region[static_cast<size_t>(dy + c) * extent + (dx + c)];
}

void init_vote_params(ParamSet& params, std::mt19937_64& rng, int in_channels, VoteGenWidths w, int regions,
                      bool refine_upsample, const std::string& scheme) {
    auto conv = [&](const std::string& name, int k, int cin, int cout) {
        const Real std = scheme == "he" ? static_cast<Real>(std::sqrt(2.0 / (static_cast<double>(k) * k * cin)))
                                        : Real(0.01);
        params.add(name + ".w", random_gaussian({k, k, cin, cout}, rng, std));
        params.add(name + ".b", Tensor::zeros({cout}));
    };
    const int twoR = 2 * regions;
    conv("vote_gen.conv1", 1, in_channels, w.w1);
    conv("vote_gen.conv2", 1, w.w1, w.w2);
    conv("vote_gen.conv3", 3, w.w2, w.w3);
    conv("vote_gen.conv4", 3, w.w3, w.w4);
    conv("vote_gen.conv5", 3, w.w4, twoR);
    conv("refine.theta", 1, twoR + 2, regions + 1);
    conv("refine.phi", 1, twoR + 2, regions + 1);
    conv("refine.g", 1, twoR + 2, twoR);
    conv("refine.z", 1, twoR, refine_upsample ? 4 * twoR : twoR);
}

int vote_generation(Tape& tape, const ParamSet::Binding& b, int corr, const VoteGenWidths&) {
    const Tensor& G = tape.value(corr);
    if (G.dims[0] < 7 || G.dims[1] < 7) throw ShapeError("vote_generation: spatial extent must be >= 7");
    int x = ops::conv2d(tape, corr, b.node("vote_gen.conv1.w"), b.node("vote_gen.conv1.b"), 0, 1);
    x = ops::relu(tape, x);
    x = ops::conv2d(tape, x, b.node("vote_gen.conv2.w"), b.node("vote_gen.conv2.b"), 0, 1);
    x = ops::relu(tape, x);
    x = ops::conv2d(tape, x, b.node("vote_gen.conv3.w"), b.node("vote_gen.conv3.b"), 0, 1);
    x = ops::relu(tape, x);
    x = ops::conv2d(tape, x, b.node("vote_gen.conv4.w"), b.node("vote_gen.conv4.b"), 0, 1);
    x = ops::relu(tape, x);
    x = ops::conv2d(tape, x, b.node("vote_gen.conv5.w"), b.node("vote_gen.conv5.b"), 0, 1);
    return x;
}

int vote_refinement(Tape& tape, const ParamSet::Binding& b, int fv, bool upsample) {
    const Tensor& V = tape.value(fv);
    const int H = V.dims[0], W = V.dims[1], twoR = V.dims[2];
    const int L = H * W;

    const int fvp = ops::attach_coordinate_grid(tape, fv);
    auto embed = [&](const char* name) {
        return ops::conv2d(tape, fvp, b.node(std::string(name) + ".w"), b.node(std::string(name) + ".b"), 0, 1);
    };
    const int theta = embed("refine.theta");
    const int phi = embed("refine.phi");
    const int gv = embed("refine.g");

    const int emb = tape.value(theta).dims[2];
    const int tf = ops::reshape(tape, theta, {L, emb});
    const int pf = ops::reshape(tape, phi, {L, emb});
    const int gf = ops::reshape(tape, gv, {L, twoR});

    // attention = theta^T phi over positions, scaled by 1/L (no softmax)
    int att = ops::matmul(tape, tf, ops::transpose2d(tape, pf));
    att = ops::scale(tape, att, Real(1) / static_cast<Real>(L));
    int refined = ops::matmul(tape, att, gf);  // L x 2R
    refined = ops::reshape(tape, refined, {H, W, twoR});

    refined = ops::conv2d(tape, refined, b.node("refine.z.w"), b.node("refine.z.b"), 0, 1);
    int residual = fv;
    if (upsample) {
        refined = ops::pixel_shuffle_2x(tape, refined);
        residual = ops::upsample_bilinear_2x(tape, fv);
    }
    return ops::relu(tape, ops::add(tape, refined, residual));
}

PresenceMaps vote_aggregation(Tape& tape, int fr, const VoteField& field) {
    const Tensor& F = tape.value(fr);
    const int R = field.region_count();
    if (F.dims[2] != 2 * R) throw ShapeError("vote_aggregation: expected 2R channels");
    const int tl_in = ops::split_channels(tape, fr, 0, R);
    const int br_in = ops::split_channels(tape, fr, R, R);
    return {ops::transposed_conv2d_fixed(tape, tl_in, field.kernel),
            ops::transposed_conv2d_fixed(tape, br_in, field.kernel)};
}

}  // namespace pcdhv::voting
