#include "pcdhv/pyramid.hpp"

#include <cmath>

#include "pcdhv/ops.hpp"

namespace pcdhv::pyramid {

std::vector<int> pooling_kernels(int h) {
    if (h < 2) throw ConfigError("pyramid_feature_pooling: template extent must be >= 2");
    std::vector<int> ks = {1};
    for (int k = 3; k < h; k += 2) ks.push_back(k);
    ks.push_back(h);  // global
    return ks;
}

int bank_size(int h) {
    int m = 0;
    for (int k : pooling_kernels(h)) {
        const int e = h - k + 1;
        m += e * e;
    }
    return m;
}

void init_attention_params(ParamSet& params, std::mt19937_64& rng, int channels, const std::string& scheme) {
    const Real std = scheme == "he" ? static_cast<Real>(std::sqrt(2.0 / channels)) : Real(0.01);
    params.add("attn.conv1.w", random_gaussian({1, 1, channels, channels}, rng, std));
    params.add("attn.conv1.b", Tensor::zeros({channels}));
    params.add("attn.conv2.w", random_gaussian({1, 1, channels, channels}, rng, std));
    params.add("attn.conv2.b", Tensor::zeros({channels}));
}

int spatial_feature_selection(Tape& tape, const ParamSet::Binding& b, int ft) {
    int a = ops::conv2d(tape, ft, b.node("attn.conv1.w"), b.node("attn.conv1.b"), 0, 1);
    a = ops::relu(tape, a);
    a = ops::conv2d(tape, a, b.node("attn.conv2.w"), b.node("attn.conv2.b"), 0, 1);
    a = ops::sigmoid(tape, a);
    return ops::mul(tape, a, ft);
}

int pyramid_feature_pooling(Tape& tape, int fta) {
    const Tensor& v = tape.value(fta);
    const int h = v.dims[0], w = v.dims[1], C = v.dims[2];
    if (h != w) throw ShapeError("pyramid_feature_pooling: square template required");
    std::vector<int> parts;
    for (int k : pooling_kernels(h)) {
        const int level = k == 1 ? fta : ops::maxpool2d(tape, fta, k, 1);
        const int e = h - k + 1;
        parts.push_back(ops::reshape(tape, level, {e * e, C}));
    }
    return ops::concat_rows(tape, parts);
}

int group_pixel_correlation(Tape& tape, int bank, int fs, int groups) {
    const Tensor& B = tape.value(bank);
    const Tensor& S = tape.value(fs);
    if (B.rank() != 2) throw ShapeError("group_pixel_correlation: bank must be M x C");
    const int M = B.dims[0], C = B.dims[1];
    if (S.rank() != 3 || S.dims[2] != C) throw ShapeError("group_pixel_correlation: channel mismatch");
    if (groups < 1 || C % groups != 0) throw ConfigError("group_pixel_correlation: C not divisible by N");
    const int H = S.dims[0], W = S.dims[1];
    const int gsz = C / groups;

    Tensor out({H, W, M * groups});
    const Real* bd = B.data.data();
    const Real* sd = S.data.data();
    Real* od = out.data.data();
#pragma omp parallel for schedule(static)
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const Real* sp = sd + (static_cast<size_t>(y) * W + x) * C;
            Real* op = od + (static_cast<size_t>(y) * W + x) * M * groups;
            for (int i = 0; i < M; ++i) {
                const Real* bp = bd + static_cast<size_t>(i) * C;
                for (int n = 0; n < groups; ++n) {
                    Real s = 0;
                    const int c0 = n * gsz;
                    for (int c = c0; c < c0 + gsz; ++c) s += bp[c] * sp[c];
                    op[i * groups + n] = s;
                }
            }
        }
    }

    return tape.emit(std::move(out), {bank, fs}, [bank, fs, M, C, H, W, groups, gsz](Tape& tp, int self) {
        const Tensor& go = tp.grad(self);
        const Tensor& B = tp.value(bank);
        const Tensor& S = tp.value(fs);
        Tensor& gb = tp.grad(bank);
        Tensor& gs = tp.grad(fs);
        // bank grad: fixed reduction order over (y, x)
        for (int i = 0; i < M; ++i)
            for (int n = 0; n < groups; ++n) {
                const int ch = i * groups + n;
                const int c0 = n * gsz;
                for (int y = 0; y < H; ++y)
                    for (int x = 0; x < W; ++x) {
                        const Real g = go.at(y, x, ch);
                        if (g == Real(0)) continue;
                        for (int c = c0; c < c0 + gsz; ++c) gb.at(i, c) += g * S.at(y, x, c);
                    }
            }
#pragma omp parallel for schedule(static)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                for (int i = 0; i < M; ++i)
                    for (int n = 0; n < groups; ++n) {
                        const Real g = go.at(y, x, i * groups + n);
                        if (g == Real(0)) continue;
                        const int c0 = n * gsz;
                        for (int c = c0; c < c0 + gsz; ++c) gs.at(y, x, c) += g * B.at(i, c);
                    }
    });
}

int depthwise_correlation(Tape& tape, int ft, int fs) {
    const Tensor& T = tape.value(ft);
    const Tensor& S = tape.value(fs);
    const int h = T.dims[0], w = T.dims[1], C = T.dims[2];
    if (S.dims[2] != C) throw ShapeError("depthwise_correlation: channel mismatch");
    const int H = S.dims[0], W = S.dims[1];
    if (h > H || w > W) throw ShapeError("depthwise_correlation: template larger than search");
    const int Ho = H - h + 1, Wo = W - w + 1;

    Tensor out({Ho, Wo, C});
#pragma omp parallel for schedule(static)
    for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox)
            for (int c = 0; c < C; ++c) {
                Real s = 0;
                for (int dy = 0; dy < h; ++dy)
                    for (int dx = 0; dx < w; ++dx) s += T.at(dy, dx, c) * S.at(oy + dy, ox + dx, c);
                out.at(oy, ox, c) = s;
            }

    return tape.emit(std::move(out), {ft, fs}, [ft, fs, h, w, C, Ho, Wo](Tape& tp, int self) {
        const Tensor& go = tp.grad(self);
        const Tensor& T = tp.value(ft);
        const Tensor& S = tp.value(fs);
        Tensor& gt = tp.grad(ft);
        Tensor& gs = tp.grad(fs);
        for (int oy = 0; oy < Ho; ++oy)
            for (int ox = 0; ox < Wo; ++ox)
                for (int c = 0; c < C; ++c) {
                    const Real g = go.at(oy, ox, c);
                    if (g == Real(0)) continue;
                    for (int dy = 0; dy < h; ++dy)
                        for (int dx = 0; dx < w; ++dx) {
                            gt.at(dy, dx, c) += g * S.at(oy + dy, ox + dx, c);
                            gs.at(oy + dy, ox + dx, c) += g * T.at(dy, dx, c);
                        }
                }
    });
}

}  // namespace pcdhv::pyramid
