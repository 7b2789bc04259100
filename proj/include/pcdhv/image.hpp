#pragma once

#include <string>

#include "pcdhv/tensor.hpp"

namespace pcdhv {

// 8-bit binary PPM (P6), scaled to [0,1] per channel.
Tensor read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Tensor& image);

// Single-channel map as binary PGM (P5), min-max normalized to 0..255.
void write_pgm(const std::string& path, const Tensor& map);

}  // namespace pcdhv
