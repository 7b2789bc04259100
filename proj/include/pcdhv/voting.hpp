#pragma once

#include "pcdhv/params.hpp"

namespace pcdhv::voting {

// Fixed log-polar vote field: a central disk plus annuli split into angle
// sectors, one kernel slice per region, uniform weights summing to 1.
struct VoteField {
    Tensor kernel;            // H0 x W0 x R
    std::vector<int> region;  // per offset cell, row-major; -1 outside the disk
    int extent = 0;
    std::vector<double> radii;
    int angle_bins = 0;

    static VoteField build(int regions, int extent, const std::vector<double>& radii, int angle_bins);

    int region_of(int dy, int dx) const;  // -1 if outside
    int region_count() const { return kernel.dims[2]; }
};

struct VoteGenWidths {
    int w1 = 128, w2 = 64, w3 = 64, w4 = 32;
};

void init_vote_params(ParamSet& params, std::mt19937_64& rng, int in_channels, VoteGenWidths widths, int regions,
                      bool refine_upsample, const std::string& scheme);

// Two 1x1 reductions then three unpadded 3x3 convolutions -> H-6 x W-6 x 2R.
int vote_generation(Tape& tape, const ParamSet::Binding& b, int corr, const VoteGenWidths& widths);

// Position-aware non-local refinement with pixel-shuffle expansion and a
// bilinear-upsampled residual. With upsample=false the expansion and residual
// upsampling are removed (ablation) and the output keeps F_V's spatial dims.
int vote_refinement(Tape& tape, const ParamSet::Binding& b, int fv, bool upsample);

struct PresenceMaps {
    int top_left;      // node, H x W x 1
    int bottom_right;  // node, H x W x 1
};

PresenceMaps vote_aggregation(Tape& tape, int fr, const VoteField& field);

}  // namespace pcdhv::voting
