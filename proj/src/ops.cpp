#include "pcdhv/ops.hpp"

#include <cmath>
#include <limits>
#include <memory>

namespace pcdhv::ops {

namespace {

void require_rank3(const Tensor& t, const char* what) {
    if (t.rank() != 3) throw ShapeError(std::string(what) + ": expected rank-3 tensor");
}

}  // namespace

int conv2d(Tape& t, int input, int kernel, int bias, int padding, int stride) {
    const Tensor& in = t.value(input);
    const Tensor& ker = t.value(kernel);
    require_rank3(in, "conv2d input");
    if (ker.rank() != 4) throw ShapeError("conv2d kernel: expected k x k x Cin x Cout");
    if (padding < 0 || stride < 1) throw ShapeError("conv2d: bad padding/stride");
    const int H = in.dims[0], W = in.dims[1], Cin = in.dims[2];
    const int k = ker.dims[0];
    if (ker.dims[1] != k) throw ShapeError("conv2d: kernel must be square");
    if (ker.dims[2] != Cin) throw ShapeError("conv2d: kernel Cin mismatch");
    const int Cout = ker.dims[3];
    if (bias >= 0) {
        const Tensor& b = t.value(bias);
        if (b.size() != Cout) throw ShapeError("conv2d: bias length mismatch");
    }
    if (k > H + 2 * padding || k > W + 2 * padding) throw ShapeError("conv2d: kernel larger than padded input");
    const int Ho = (H + 2 * padding - k) / stride + 1;
    const int Wo = (W + 2 * padding - k) / stride + 1;

    Tensor out({Ho, Wo, Cout});
    const Real* ind = in.data.data();
    const Real* kd = ker.data.data();
    const Real* bd = bias >= 0 ? t.value(bias).data.data() : nullptr;
    Real* od = out.data.data();

#pragma omp parallel for schedule(static)
    for (int oy = 0; oy < Ho; ++oy) {
        std::vector<Real> acc(Cout);
        for (int ox = 0; ox < Wo; ++ox) {
            for (int co = 0; co < Cout; ++co) acc[co] = bd ? bd[co] : Real(0);
            for (int ky = 0; ky < k; ++ky) {
                const int iy = oy * stride + ky - padding;
                if (iy < 0 || iy >= H) continue;
                for (int kx = 0; kx < k; ++kx) {
                    const int ix = ox * stride + kx - padding;
                    if (ix < 0 || ix >= W) continue;
                    const Real* ip = ind + (static_cast<size_t>(iy) * W + ix) * Cin;
                    const Real* kp = kd + (static_cast<size_t>(ky) * k + kx) * Cin * Cout;
                    for (int ci = 0; ci < Cin; ++ci) {
                        const Real v = ip[ci];
                        const Real* kc = kp + static_cast<size_t>(ci) * Cout;
                        for (int co = 0; co < Cout; ++co) acc[co] += v * kc[co];
                    }
                }
            }
            Real* op = od + (static_cast<size_t>(oy) * Wo + ox) * Cout;
            for (int co = 0; co < Cout; ++co) op[co] = acc[co];
        }
    }

    std::vector<int> inputs = {input, kernel};
    if (bias >= 0) inputs.push_back(bias);
    return t.emit(std::move(out), std::move(inputs),
                  [input, kernel, bias, padding, stride, H, W, Cin, k, Cout, Ho, Wo](Tape& tp, int self) {
                      const Tensor& go = tp.grad(self);
                      const Tensor& in = tp.value(input);
                      const Tensor& ker = tp.value(kernel);
                      Tensor& gin = tp.grad(input);
                      Tensor& gker = tp.grad(kernel);
                      const Real* god = go.data.data();
                      const Real* kd = ker.data.data();
                      const Real* ind = in.data.data();
                      Real* gid = gin.data.data();
                      Real* gkd = gker.data.data();

#pragma omp parallel for schedule(static)
                      for (int iy = 0; iy < H; ++iy) {
                          for (int ix = 0; ix < W; ++ix) {
                              Real* gp = gid + (static_cast<size_t>(iy) * W + ix) * Cin;
                              for (int ky = 0; ky < k; ++ky) {
                                  const int ny = iy + padding - ky;
                                  if (ny < 0 || ny % stride != 0) continue;
                                  const int oy = ny / stride;
                                  if (oy >= Ho) continue;
                                  for (int kx = 0; kx < k; ++kx) {
                                      const int nx = ix + padding - kx;
                                      if (nx < 0 || nx % stride != 0) continue;
                                      const int ox = nx / stride;
                                      if (ox >= Wo) continue;
                                      const Real* gop = god + (static_cast<size_t>(oy) * Wo + ox) * Cout;
                                      const Real* kp = kd + (static_cast<size_t>(ky) * k + kx) * Cin * Cout;
                                      for (int ci = 0; ci < Cin; ++ci) {
                                          const Real* kc = kp + static_cast<size_t>(ci) * Cout;
                                          Real s = 0;
                                          for (int co = 0; co < Cout; ++co) s += gop[co] * kc[co];
                                          gp[ci] += s;
                                      }
                                  }
                              }
                          }
                      }

#pragma omp parallel for collapse(2) schedule(static)
                      for (int ky = 0; ky < k; ++ky) {
                          for (int kx = 0; kx < k; ++kx) {
                              Real* gkp = gkd + (static_cast<size_t>(ky) * k + kx) * Cin * Cout;
                              for (int oy = 0; oy < Ho; ++oy) {
                                  const int iy = oy * stride + ky - padding;
                                  if (iy < 0 || iy >= H) continue;
                                  for (int ox = 0; ox < Wo; ++ox) {
                                      const int ix = ox * stride + kx - padding;
                                      if (ix < 0 || ix >= W) continue;
                                      const Real* ip = ind + (static_cast<size_t>(iy) * W + ix) * Cin;
                                      const Real* gop = god + (static_cast<size_t>(oy) * Wo + ox) * Cout;
                                      for (int ci = 0; ci < Cin; ++ci) {
                                          const Real v = ip[ci];
                                          Real* gc = gkp + static_cast<size_t>(ci) * Cout;
                                          for (int co = 0; co < Cout; ++co) gc[co] += v * gop[co];
                                      }
                                  }
                              }
                          }
                      }

                      if (bias >= 0) {
                          Tensor& gb = tp.grad(bias);
                          for (int oy = 0; oy < Ho; ++oy)
                              for (int ox = 0; ox < Wo; ++ox) {
                                  const Real* gop = god + (static_cast<size_t>(oy) * Wo + ox) * Cout;
                                  for (int co = 0; co < Cout; ++co) gb.data[co] += gop[co];
                              }
                      }
                  });
}

int transposed_conv2d_fixed(Tape& t, int input, const Tensor& kernel) {
    const Tensor& in = t.value(input);
    require_rank3(in, "transposed_conv2d_fixed input");
    if (kernel.rank() != 3) throw ShapeError("transposed_conv2d_fixed: kernel must be H0 x W0 x R");
    const int H = in.dims[0], W = in.dims[1], R = in.dims[2];
    const int H0 = kernel.dims[0], W0 = kernel.dims[1];
    if (H0 % 2 == 0 || W0 % 2 == 0) throw ConfigError("transposed_conv2d_fixed: kernel extents must be odd");
    if (kernel.dims[2] != R) throw ShapeError("transposed_conv2d_fixed: region channel mismatch");
    const int cy = H0 / 2, cx = W0 / 2;

    Tensor out({H, W, 1});
    const Real* ind = in.data.data();
    const Real* kd = kernel.data.data();
    Real* od = out.data.data();

#pragma omp parallel for schedule(static)
    for (int qy = 0; qy < H; ++qy) {
        for (int qx = 0; qx < W; ++qx) {
            Real s = 0;
            for (int ky = 0; ky < H0; ++ky) {
                const int py = qy + cy - ky;
                if (py < 0 || py >= H) continue;
                for (int kx = 0; kx < W0; ++kx) {
                    const int px = qx + cx - kx;
                    if (px < 0 || px >= W) continue;
                    const Real* ip = ind + (static_cast<size_t>(py) * W + px) * R;
                    const Real* kp = kd + (static_cast<size_t>(ky) * W0 + kx) * R;
                    for (int r = 0; r < R; ++r) s += ip[r] * kp[r];
                }
            }
            od[static_cast<size_t>(qy) * W + qx] = s;
        }
    }

    // kernel is captured by value; it is fixed and receives no gradient
    return t.emit(std::move(out), {input}, [input, kernel, H, W, R, H0, W0, cy, cx](Tape& tp, int self) {
        const Tensor& go = tp.grad(self);
        Tensor& gin = tp.grad(input);
        const Real* god = go.data.data();
        const Real* kd = kernel.data.data();
        Real* gid = gin.data.data();
#pragma omp parallel for schedule(static)
        for (int py = 0; py < H; ++py) {
            for (int px = 0; px < W; ++px) {
                Real* gp = gid + (static_cast<size_t>(py) * W + px) * R;
                for (int ky = 0; ky < H0; ++ky) {
                    const int qy = py + ky - cy;
                    if (qy < 0 || qy >= H) continue;
                    for (int kx = 0; kx < W0; ++kx) {
                        const int qx = px + kx - cx;
                        if (qx < 0 || qx >= W) continue;
                        const Real g = god[static_cast<size_t>(qy) * W + qx];
                        const Real* kp = kd + (static_cast<size_t>(ky) * W0 + kx) * R;
                        for (int r = 0; r < R; ++r) gp[r] += g * kp[r];
                    }
                }
            }
        }
    });
}

int maxpool2d(Tape& t, int input, int k, int stride, int padding) {
    const Tensor& in = t.value(input);
    require_rank3(in, "maxpool2d input");
    const int H = in.dims[0], W = in.dims[1], C = in.dims[2];
    if (k < 1 || stride < 1 || padding < 0) throw ShapeError("maxpool2d: bad parameters");
    if (k > H + 2 * padding || k > W + 2 * padding) throw ShapeError("maxpool2d: kernel larger than padded input");
    const int Ho = (H + 2 * padding - k) / stride + 1;
    const int Wo = (W + 2 * padding - k) / stride + 1;

    Tensor out({Ho, Wo, C});
    auto argmax = std::make_shared<std::vector<int>>(out.size(), -1);
    const Real* ind = in.data.data();
    Real* od = out.data.data();
    int* am = argmax->data();

#pragma omp parallel for schedule(static)
    for (int oy = 0; oy < Ho; ++oy) {
        for (int ox = 0; ox < Wo; ++ox) {
            for (int c = 0; c < C; ++c) {
                Real best = -std::numeric_limits<Real>::infinity();
                int bi = -1;
                for (int ky = 0; ky < k; ++ky) {
                    const int iy = oy * stride + ky - padding;
                    if (iy < 0 || iy >= H) continue;
                    for (int kx = 0; kx < k; ++kx) {
                        const int ix = ox * stride + kx - padding;
                        if (ix < 0 || ix >= W) continue;
                        const int fi = (iy * W + ix) * C + c;
                        if (ind[fi] > best) {  // first occurrence wins ties
                            best = ind[fi];
                            bi = fi;
                        }
                    }
                }
                const size_t oi = (static_cast<size_t>(oy) * Wo + ox) * C + c;
                od[oi] = best;
                am[oi] = bi;
            }
        }
    }

    return t.emit(std::move(out), {input}, [input, argmax](Tape& tp, int self) {
        const Tensor& go = tp.grad(self);
        Tensor& gin = tp.grad(input);
        for (size_t i = 0; i < go.data.size(); ++i) {
            const int src = (*argmax)[i];
            if (src >= 0) gin.data[src] += go.data[i];
        }
    });
}

int pixel_shuffle_2x(Tape& t, int input) {
    const Tensor& in = t.value(input);
    require_rank3(in, "pixel_shuffle_2x input");
    const int H = in.dims[0], W = in.dims[1], C4 = in.dims[2];
    if (C4 % 4 != 0) throw ShapeError("pixel_shuffle_2x: channels not divisible by 4");
    const int C = C4 / 4;
    Tensor out({2 * H, 2 * W, C});
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j)
            for (int c = 0; c < C; ++c)
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b)
                        out.at(2 * i + a, 2 * j + b, c) = in.at(i, j, c * 4 + a * 2 + b);
    return t.emit(std::move(out), {input}, [input, H, W, C](Tape& tp, int self) {
        const Tensor& go = tp.grad(self);
        Tensor& gin = tp.grad(input);
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j)
                for (int c = 0; c < C; ++c)
                    for (int a = 0; a < 2; ++a)
                        for (int b = 0; b < 2; ++b)
                            gin.at(i, j, c * 4 + a * 2 + b) += go.at(2 * i + a, 2 * j + b, c);
    });
}

int pixel_unshuffle_2x(Tape& t, int input) {
    const Tensor& in = t.value(input);
    require_rank3(in, "pixel_unshuffle_2x input");
    const int H2 = in.dims[0], W2 = in.dims[1], C = in.dims[2];
    if (H2 % 2 != 0 || W2 % 2 != 0) throw ShapeError("pixel_unshuffle_2x: spatial extents must be even");
    const int H = H2 / 2, W = W2 / 2;
    Tensor out({H, W, 4 * C});
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j)
            for (int c = 0; c < C; ++c)
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b)
                        out.at(i, j, c * 4 + a * 2 + b) = in.at(2 * i + a, 2 * j + b, c);
    return t.emit(std::move(out), {input}, [input, H, W, C](Tape& tp, int self) {
        const Tensor& go = tp.grad(self);
        Tensor& gin = tp.grad(input);
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j)
                for (int c = 0; c < C; ++c)
                    for (int a = 0; a < 2; ++a)
                        for (int b = 0; b < 2; ++b)
                            gin.at(2 * i + a, 2 * j + b, c) += go.at(i, j, c * 4 + a * 2 + b);
    });
}

namespace {

struct LinTap {
    int i0, i1;
    Real w0, w1;
};

// Source taps for one output axis of length 2n, align-corners-false.
std::vector<LinTap> bilinear_taps(int n) {
    std::vector<LinTap> taps(2 * n);
    for (int g = 0; g < 2 * n; ++g) {
        double src = (g + 0.5) / 2.0 - 0.5;
        if (src < 0) src = 0;
        if (src > n - 1) src = n - 1;
        int i0 = static_cast<int>(std::floor(src));
        if (i0 > n - 2) i0 = n - 2;
        if (i0 < 0) i0 = 0;
        const int i1 = n >= 2 ? i0 + 1 : 0;
        const Real f = static_cast<Real>(src - i0);
        taps[g] = {i0, i1, Real(1) - f, n >= 2 ? f : Real(0)};
    }
    if (n == 1) taps[0] = taps[1] = {0, 0, Real(1), Real(0)};
    return taps;
}

}  // namespace

int upsample_bilinear_2x(Tape& t, int input) {
    const Tensor& in = t.value(input);
    require_rank3(in, "upsample_bilinear_2x input");
    const int H = in.dims[0], W = in.dims[1], C = in.dims[2];
    const auto ty = bilinear_taps(H);
    const auto tx = bilinear_taps(W);
    Tensor out({2 * H, 2 * W, C});
#pragma omp parallel for schedule(static)
    for (int oy = 0; oy < 2 * H; ++oy) {
        const LinTap& y = ty[oy];
        for (int ox = 0; ox < 2 * W; ++ox) {
            const LinTap& x = tx[ox];
            for (int c = 0; c < C; ++c) {
                out.at(oy, ox, c) = y.w0 * (x.w0 * in.at(y.i0, x.i0, c) + x.w1 * in.at(y.i0, x.i1, c)) +
                                    y.w1 * (x.w0 * in.at(y.i1, x.i0, c) + x.w1 * in.at(y.i1, x.i1, c));
            }
        }
    }
    return t.emit(std::move(out), {input}, [input, H, W, C, ty, tx](Tape& tp, int self) {
        const Tensor& go = tp.grad(self);
        Tensor& gin = tp.grad(input);
        for (int oy = 0; oy < 2 * H; ++oy) {
            const LinTap& y = ty[oy];
            for (int ox = 0; ox < 2 * W; ++ox) {
                const LinTap& x = tx[ox];
                for (int c = 0; c < C; ++c) {
                    const Real g = go.at(oy, ox, c);
                    gin.at(y.i0, x.i0, c) += y.w0 * x.w0 * g;
                    gin.at(y.i0, x.i1, c) += y.w0 * x.w1 * g;
                    gin.at(y.i1, x.i0, c) += y.w1 * x.w0 * g;
                    gin.at(y.i1, x.i1, c) += y.w1 * x.w1 * g;
                }
            }
        }
    });
}

int matmul(Tape& t, int a, int b) {
    const Tensor& A = t.value(a);
    const Tensor& B = t.value(b);
    if (A.rank() != 2 || B.rank() != 2) throw ShapeError("matmul: rank-2 operands required");
    const int M = A.dims[0], K = A.dims[1], N = B.dims[1];
    if (B.dims[0] != K) throw ShapeError("matmul: inner extents disagree");
    Tensor out({M, N});
    const Real* ad = A.data.data();
    const Real* bd = B.data.data();
    Real* od = out.data.data();
#pragma omp parallel for schedule(static)
    for (int i = 0; i < M; ++i) {
        Real* op = od + static_cast<size_t>(i) * N;
        for (int kk = 0; kk < K; ++kk) {
            const Real v = ad[static_cast<size_t>(i) * K + kk];
            const Real* bp = bd + static_cast<size_t>(kk) * N;
            for (int j = 0; j < N; ++j) op[j] += v * bp[j];
        }
    }
    return t.emit(std::move(out), {a, b}, [a, b, M, K, N](Tape& tp, int self) {
        const Tensor& go = tp.grad(self);
        const Tensor& A = tp.value(a);
        const Tensor& B = tp.value(b);
        Tensor& ga = tp.grad(a);
        Tensor& gb = tp.grad(b);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < N; ++j) {
                const Real g = go.at(i, j);
                for (int kk = 0; kk < K; ++kk) ga.at(i, kk) += g * B.at(kk, j);
            }
#pragma omp parallel for schedule(static)
        for (int kk = 0; kk < K; ++kk)
            for (int i = 0; i < M; ++i) {
                const Real v = A.at(i, kk);
                for (int j = 0; j < N; ++j) gb.at(kk, j) += v * go.at(i, j);
            }
    });
}

int transpose2d(Tape& t, int x) {
    const Tensor& X = t.value(x);
    if (X.rank() != 2) throw ShapeError("transpose2d: rank-2 required");
    const int M = X.dims[0], N = X.dims[1];
    Tensor out({N, M});
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j) out.at(j, i) = X.at(i, j);
    return t.emit(std::move(out), {x}, [x, M, N](Tape& tp, int self) {
        const Tensor& go = tp.grad(self);
        Tensor& gx = tp.grad(x);
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < N; ++j) gx.at(i, j) += go.at(j, i);
    });
}

int add(Tape& t, int a, int b) {
    const Tensor& A = t.value(a);
    const Tensor& B = t.value(b);
    if (!A.same_dims(B)) throw ShapeError("add: dims mismatch");
    Tensor out(A.dims);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = A.data[i] + B.data[i];
    return t.emit(std::move(out), {a, b}, [a, b](Tape& tp, int self) {
        const Tensor& go = tp.grad(self);
        Tensor& ga = tp.grad(a);
        Tensor& gb = tp.grad(b);
        for (size_t i = 0; i < go.data.size(); ++i) {
            ga.data[i] += go.data[i];
            gb.data[i] += go.data[i];
        }
    });
}

int mul(Tape& t, int a, int b) {
    const Tensor& A = t.value(a);
    const Tensor& B = t.value(b);
    if (!A.same_dims(B)) throw ShapeError("mul: dims mismatch");
    Tensor out(A.dims);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = A.data[i] * B.data[i];
    return t.emit(std::move(out), {a, b}, [a, b](Tape& tp, int self) {
        const Tensor& go = tp.grad(self);
        const Tensor& A = tp.value(a);
        const Tensor& B = tp.value(b);
        Tensor& ga = tp.grad(a);
        Tensor& gb = tp.grad(b);
        for (size_t i = 0; i < go.data.size(); ++i) {
            ga.data[i] += go.data[i] * B.data[i];
            gb.data[i] += go.data[i] * A.data[i];
        }
    });
}

int relu(Tape& t, int x) {
    const Tensor& X = t.value(x);
    Tensor out(X.dims);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = X.data[i] > Real(0) ? X.data[i] : Real(0);
    return t.emit(std::move(out), {x}, [x](Tape& tp, int self) {
        const Tensor& go = tp.grad(self);
        const Tensor& X = tp.value(x);
        Tensor& gx = tp.grad(x);
        // subgradient at 0 is 0
        for (size_t i = 0; i < go.data.size(); ++i)
            if (X.data[i] > Real(0)) gx.data[i] += go.data[i];
    });
}

int sigmoid(Tape& t, int x) {
    const Tensor& X = t.value(x);
    Tensor out(X.dims);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = Real(1) / (Real(1) + std::exp(-X.data[i]));
    return t.emit(std::move(out), {x}, [x](Tape& tp, int self) {
        const Tensor& go = tp.grad(self);
        const Tensor& Y = tp.value(self);
        Tensor& gx = tp.grad(x);
        for (size_t i = 0; i < go.data.size(); ++i) gx.data[i] += go.data[i] * Y.data[i] * (Real(1) - Y.data[i]);
    });
}

int scale(Tape& t, int x, Real s) {
    const Tensor& X = t.value(x);
    Tensor out(X.dims);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = X.data[i] * s;
    return t.emit(std::move(out), {x}, [x, s](Tape& tp, int self) {
        const Tensor& go = tp.grad(self);
        Tensor& gx = tp.grad(x);
        for (size_t i = 0; i < go.data.size(); ++i) gx.data[i] += go.data[i] * s;
    });
}

int concat_channels(Tape& t, const std::vector<int>& parts) {
    if (parts.empty()) throw ShapeError("concat_channels: no inputs");
    const Tensor& first = t.value(parts[0]);
    require_rank3(first, "concat_channels input");
    const int H = first.dims[0], W = first.dims[1];
    int Ctot = 0;
    for (int p : parts) {
        const Tensor& v = t.value(p);
        require_rank3(v, "concat_channels input");
        if (v.dims[0] != H || v.dims[1] != W) throw ShapeError("concat_channels: spatial dims mismatch");
        Ctot += v.dims[2];
    }
    Tensor out({H, W, Ctot});
    int off = 0;
    std::vector<int> offsets(parts.size());
    for (size_t pi = 0; pi < parts.size(); ++pi) {
        const Tensor& v = t.value(parts[pi]);
        offsets[pi] = off;
        const int C = v.dims[2];
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                for (int c = 0; c < C; ++c) out.at(y, x, off + c) = v.at(y, x, c);
        off += C;
    }
    std::vector<int> ins = parts;
    return t.emit(std::move(out), std::move(ins), [parts, offsets, H, W](Tape& tp, int self) {
        const Tensor& go = tp.grad(self);
        for (size_t pi = 0; pi < parts.size(); ++pi) {
            Tensor& g = tp.grad(parts[pi]);
            const int C = g.dims[2];
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    for (int c = 0; c < C; ++c) g.at(y, x, c) += go.at(y, x, offsets[pi] + c);
        }
    });
}

int split_channels(Tape& t, int x, int first, int count) {
    const Tensor& X = t.value(x);
    require_rank3(X, "split_channels input");
    const int H = X.dims[0], W = X.dims[1], C = X.dims[2];
    if (first < 0 || count < 1 || first + count > C) throw ShapeError("split_channels: range out of bounds");
    Tensor out({H, W, count});
    for (int y = 0; y < H; ++y)
        for (int xx = 0; xx < W; ++xx)
            for (int c = 0; c < count; ++c) out.at(y, xx, c) = X.at(y, xx, first + c);
    return t.emit(std::move(out), {x}, [x, first, count, H, W](Tape& tp, int self) {
        const Tensor& go = tp.grad(self);
        Tensor& gx = tp.grad(x);
        for (int y = 0; y < H; ++y)
            for (int xx = 0; xx < W; ++xx)
                for (int c = 0; c < count; ++c) gx.at(y, xx, first + c) += go.at(y, xx, c);
    });
}

int concat_rows(Tape& t, const std::vector<int>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no inputs");
    const int cols = t.value(parts[0]).dims.at(1);
    int rows = 0;
    for (int p : parts) {
        const Tensor& v = t.value(p);
        if (v.rank() != 2 || v.dims[1] != cols) throw ShapeError("concat_rows: rank-2 with equal columns required");
        rows += v.dims[0];
    }
    Tensor out({rows, cols});
    std::vector<int> offsets(parts.size());
    size_t off = 0;
    for (size_t pi = 0; pi < parts.size(); ++pi) {
        const Tensor& v = t.value(parts[pi]);
        offsets[pi] = static_cast<int>(off);
        std::copy(v.data.begin(), v.data.end(), out.data.begin() + off * cols);
        off += v.dims[0];
    }
    std::vector<int> ins = parts;
    return t.emit(std::move(out), std::move(ins), [parts, offsets, cols](Tape& tp, int self) {
        const Tensor& go = tp.grad(self);
        for (size_t pi = 0; pi < parts.size(); ++pi) {
            Tensor& g = tp.grad(parts[pi]);
            const size_t n = g.data.size();
            const size_t base = static_cast<size_t>(offsets[pi]) * cols;
            for (size_t i = 0; i < n; ++i) g.data[i] += go.data[base + i];
        }
    });
}

int reshape(Tape& t, int x, std::vector<int> dims) {
    const Tensor& X = t.value(x);
    if (Tensor::count(dims) != X.size()) throw ShapeError("reshape: element count mismatch");
    Tensor out(std::move(dims), X.data);
    return t.emit(std::move(out), {x}, [x](Tape& tp, int self) {
        const Tensor& go = tp.grad(self);
        Tensor& gx = tp.grad(x);
        for (size_t i = 0; i < go.data.size(); ++i) gx.data[i] += go.data[i];
    });
}

int sum_all(Tape& t, int x) {
    const Tensor& X = t.value(x);
    Real s = 0;
    for (Real v : X.data) s += v;
    Tensor out({1});
    out.data[0] = s;
    return t.emit(std::move(out), {x}, [x](Tape& tp, int self) {
        const Real g = tp.grad(self).data[0];
        Tensor& gx = tp.grad(x);
        for (auto& v : gx.data) v += g;
    });
}

int attach_coordinate_grid(Tape& t, int x) {
    const Tensor& X = t.value(x);
    require_rank3(X, "attach_coordinate_grid input");
    const int H = X.dims[0], W = X.dims[1], C = X.dims[2];
    Tensor out({H, W, C + 2});
    for (int y = 0; y < H; ++y) {
        const Real ny = H > 1 ? Real(-1) + Real(2) * y / Real(H - 1) : Real(0);
        for (int xx = 0; xx < W; ++xx) {
            const Real nx = W > 1 ? Real(-1) + Real(2) * xx / Real(W - 1) : Real(0);
            for (int c = 0; c < C; ++c) out.at(y, xx, c) = X.at(y, xx, c);
            out.at(y, xx, C) = nx;
            out.at(y, xx, C + 1) = ny;
        }
    }
    return t.emit(std::move(out), {x}, [x, H, W, C](Tape& tp, int self) {
        const Tensor& go = tp.grad(self);
        Tensor& gx = tp.grad(x);
        for (int y = 0; y < H; ++y)
            for (int xx = 0; xx < W; ++xx)
                for (int c = 0; c < C; ++c) gx.at(y, xx, c) += go.at(y, xx, c);
    });
}

int focal_loss(Tape& t, int yhat, const Tensor& target, Real alpha, Real beta) {
    const Tensor& P = t.value(yhat);
    if (!P.same_dims(target)) throw ShapeError("focal_loss: prediction/target dims mismatch");
    constexpr Real kLo = Real(1e-7);
    const Real kHi = Real(1) - kLo;
    long long npos = 0;
    for (Real y : target.data)
        if (y == Real(1)) ++npos;
    if (npos == 0) throw NumericError("focal_loss: no positive cells in target");

    double loss = 0;
    for (size_t i = 0; i < P.data.size(); ++i) {
        const Real q = std::min(kHi, std::max(kLo, P.data[i]));
        const Real y = target.data[i];
        if (y == Real(1)) {
            loss -= std::pow(Real(1) - q, alpha) * std::log(q);
        } else {
            loss -= std::pow(Real(1) - y, beta) * std::pow(q, alpha) * std::log(Real(1) - q);
        }
    }
    Tensor out({1});
    out.data[0] = static_cast<Real>(loss / static_cast<double>(npos));

    auto tgt = std::make_shared<Tensor>(target);
    return t.emit(std::move(out), {yhat}, [yhat, tgt, alpha, beta, npos, kLo, kHi](Tape& tp, int self) {
        const Real g = tp.grad(self).data[0];
        const Tensor& P = tp.value(yhat);
        Tensor& gp = tp.grad(yhat);
        const Real inv = Real(1) / static_cast<Real>(npos);
        for (size_t i = 0; i < P.data.size(); ++i) {
            if (P.data[i] <= kLo || P.data[i] >= kHi) continue;  // clamped region, flat
            const Real q = P.data[i];
            const Real y = tgt->data[i];
            Real d;
            if (y == Real(1)) {
                d = -(-alpha * std::pow(Real(1) - q, alpha - 1) * std::log(q) + std::pow(Real(1) - q, alpha) / q);
            } else {
                d = -std::pow(Real(1) - y, beta) *
                    (alpha * std::pow(q, alpha - 1) * std::log(Real(1) - q) - std::pow(q, alpha) / (Real(1) - q));
            }
            gp.data[i] += g * inv * d;
        }
    });
}

}  // namespace pcdhv::ops
