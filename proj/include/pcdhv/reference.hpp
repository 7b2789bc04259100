#pragma once

#include "pcdhv/tensor.hpp"

namespace pcdhv::ref {

// Serial, naive nested-loop implementations. These are the reference the
// parallel kernels are checked against and the baseline for `bench`. Keep
// them independent of the tape path: plain loops only.

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor* bias, int padding, int stride);

Tensor transposed_conv2d_fixed(const Tensor& input, const Tensor& kernel);

Tensor maxpool2d(const Tensor& input, int k, int stride, int padding = 0);

Tensor upsample_bilinear_2x(const Tensor& input);

Tensor matmul(const Tensor& a, const Tensor& b);

// bank: M x C pixel vectors, search H x W x C, N channel groups -> H x W x (M*N)
Tensor group_pixel_correlation(const Tensor& bank, const Tensor& search, int groups);

}  // namespace pcdhv::ref
