#include "pcdhv/reference.hpp"

#include <cmath>
#include <limits>

namespace pcdhv::ref {

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor* bias, int padding, int stride) {
    const int H = input.dims[0], W = input.dims[1], Cin = input.dims[2];
    const int k = kernel.dims[0], Cout = kernel.dims[3];
    const int Ho = (H + 2 * padding - k) / stride + 1;
    const int Wo = (W + 2 * padding - k) / stride + 1;
    Tensor out({Ho, Wo, Cout});
    for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox)
            for (int co = 0; co < Cout; ++co) {
                Real s = bias ? bias->data[co] : Real(0);
                for (int ky = 0; ky < k; ++ky)
                    for (int kx = 0; kx < k; ++kx)
                        for (int ci = 0; ci < Cin; ++ci) {
                            const int iy = oy * stride + ky - padding;
                            const int ix = ox * stride + kx - padding;
                            if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                            s += input.at(iy, ix, ci) *
                                 kernel.data[((static_cast<size_t>(ky) * k + kx) * Cin + ci) * Cout + co];
                        }
                out.at(oy, ox, co) = s;
            }
    return out;
}

Tensor transposed_conv2d_fixed(const Tensor& input, const Tensor& kernel) {
    const int H = input.dims[0], W = input.dims[1], R = input.dims[2];
    const int H0 = kernel.dims[0], W0 = kernel.dims[1];
    const int cy = H0 / 2, cx = W0 / 2;
    Tensor out({H, W, 1});
    for (int qy = 0; qy < H; ++qy)
        for (int qx = 0; qx < W; ++qx) {
            Real s = 0;
            for (int py = 0; py < H; ++py)
                for (int px = 0; px < W; ++px) {
                    const int ky = qy - py + cy;
                    const int kx = qx - px + cx;
                    if (ky < 0 || ky >= H0 || kx < 0 || kx >= W0) continue;
                    for (int r = 0; r < R; ++r) s += input.at(py, px, r) * kernel.at(ky, kx, r);
                }
            out.at(qy, qx, 0) = s;
        }
    return out;
}

Tensor maxpool2d(const Tensor& input, int k, int stride, int padding) {
    const int H = input.dims[0], W = input.dims[1], C = input.dims[2];
    const int Ho = (H + 2 * padding - k) / stride + 1;
    const int Wo = (W + 2 * padding - k) / stride + 1;
    Tensor out({Ho, Wo, C});
    for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox)
            for (int c = 0; c < C; ++c) {
                Real best = -std::numeric_limits<Real>::infinity();
                for (int ky = 0; ky < k; ++ky)
                    for (int kx = 0; kx < k; ++kx) {
                        const int iy = oy * stride + ky - padding;
                        const int ix = ox * stride + kx - padding;
                        if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                        if (input.at(iy, ix, c) > best) best = input.at(iy, ix, c);
                    }
                out.at(oy, ox, c) = best;
            }
    return out;
}

Tensor upsample_bilinear_2x(const Tensor& input) {
    const int H = input.dims[0], W = input.dims[1], C = input.dims[2];
    Tensor out({2 * H, 2 * W, C});
    for (int oy = 0; oy < 2 * H; ++oy)
        for (int ox = 0; ox < 2 * W; ++ox) {
            double sy = (oy + 0.5) / 2.0 - 0.5;
            double sx = (ox + 0.5) / 2.0 - 0.5;
            sy = std::min(std::max(sy, 0.0), static_cast<double>(H - 1));
            sx = std::min(std::max(sx, 0.0), static_cast<double>(W - 1));
            const int y0 = std::min(static_cast<int>(std::floor(sy)), H - 1);
            const int x0 = std::min(static_cast<int>(std::floor(sx)), W - 1);
            const int y1 = std::min(y0 + 1, H - 1);
            const int x1 = std::min(x0 + 1, W - 1);
            const double fy = sy - y0, fx = sx - x0;
            for (int c = 0; c < C; ++c) {
                const double v = (1 - fy) * ((1 - fx) * input.at(y0, x0, c) + fx * input.at(y0, x1, c)) +
                                 fy * ((1 - fx) * input.at(y1, x0, c) + fx * input.at(y1, x1, c));
                out.at(oy, ox, c) = static_cast<Real>(v);
            }
        }
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    const int M = a.dims[0], K = a.dims[1], N = b.dims[1];
    Tensor out({M, N});
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j) {
            Real s = 0;
            for (int kk = 0; kk < K; ++kk) s += a.at(i, kk) * b.at(kk, j);
            out.at(i, j) = s;
        }
    return out;
}

Tensor group_pixel_correlation(const Tensor& bank, const Tensor& search, int groups) {
    const int M = bank.dims[0], C = bank.dims[1];
    const int H = search.dims[0], W = search.dims[1];
    const int gsz = C / groups;
    Tensor out({H, W, M * groups});
    for (int i = 0; i < M; ++i)
        for (int n = 0; n < groups; ++n)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    Real s = 0;
                    for (int c = n * gsz; c < (n + 1) * gsz; ++c) s += bank.at(i, c) * search.at(y, x, c);
                    out.at(y, x, i * groups + n) = s;
                }
    return out;
}

}  // namespace pcdhv::ref
