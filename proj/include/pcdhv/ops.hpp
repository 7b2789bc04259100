#pragma once

#include "pcdhv/tape.hpp"

namespace pcdhv::ops {

// All operations take H x W x C tensors unless noted. Forward kernels may
// parallelize over output cells; the per-cell accumulation order is fixed, so
// results are bit-identical for any thread count.

// input H x W x Cin, kernel k x k x Cin x Cout, bias Cout (pass -1 for none).
int conv2d(Tape& t, int input, int kernel, int bias, int padding, int stride);

// Fixed (unlearnable) kernel H0 x W0 x R, input H x W x R -> H x W x 1.
// Gradient flows to the input only.
int transposed_conv2d_fixed(Tape& t, int input, const Tensor& kernel);

int maxpool2d(Tape& t, int input, int k, int stride, int padding = 0);

int pixel_shuffle_2x(Tape& t, int input);    // H x W x 4C -> 2H x 2W x C
int pixel_unshuffle_2x(Tape& t, int input);  // exact inverse

int upsample_bilinear_2x(Tape& t, int input);  // align-corners-false

int matmul(Tape& t, int a, int b);  // M x K by K x N
int transpose2d(Tape& t, int x);

int add(Tape& t, int a, int b);
int mul(Tape& t, int a, int b);
int relu(Tape& t, int x);
int sigmoid(Tape& t, int x);
int scale(Tape& t, int x, Real s);

int concat_channels(Tape& t, const std::vector<int>& parts);
int split_channels(Tape& t, int x, int first, int count);

int concat_rows(Tape& t, const std::vector<int>& parts);  // rank-2 along dim 0
int reshape(Tape& t, int x, std::vector<int> dims);       // metadata only

int sum_all(Tape& t, int x);  // -> [1]

// Appends normalized [-1,1] x and y coordinate channels (constant wrt params).
int attach_coordinate_grid(Tape& t, int x);

// Penalty-reduced keypoint focal loss. yhat and target share dims; yhat is
// clamped to [1e-7, 1-1e-7]. Normalized by the number of target==1 cells.
int focal_loss(Tape& t, int yhat, const Tensor& target, Real alpha = Real(2), Real beta = Real(4));

}  // namespace pcdhv::ops
