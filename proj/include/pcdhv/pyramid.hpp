#pragma once

#include "pcdhv/params.hpp"

namespace pcdhv::pyramid {

// Number of pixel-level vectors produced by pyramid pooling of an h x h map:
// un-pooled map, every odd kernel 3,5,... below h, then the global kernel h.
int bank_size(int h);
std::vector<int> pooling_kernels(int h);

// A = sigmoid(conv1x1(relu(conv1x1(F_T)))), F_T^A = A .* F_T.
// Uses parameters attn.conv1.{w,b}, attn.conv2.{w,b}.
int spatial_feature_selection(Tape& tape, const ParamSet::Binding& b, int ft);

void init_attention_params(ParamSet& params, std::mt19937_64& rng, int channels, const std::string& scheme);

// h x w x C attentive template -> M x C kernel bank (ascending kernel size,
// row-major within each pyramid level).
int pyramid_feature_pooling(Tape& tape, int fta);

// bank M x C against search H x W x C over N channel groups -> H x W x (M*N).
// Channel block [i*N, (i+1)*N) is owned by bank vector i.
int group_pixel_correlation(Tape& tape, int bank, int fs, int groups);

// Ablation baseline: whole-template depth-wise correlation (valid positions).
int depthwise_correlation(Tape& tape, int ft, int fs);

}  // namespace pcdhv::pyramid
