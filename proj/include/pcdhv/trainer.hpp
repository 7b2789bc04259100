#pragma once

#include <iosfwd>

#include "pcdhv/synthetic.hpp"

namespace pcdhv {

struct TrainSample {
    Tensor template_crop;
    Tensor search_crop;
    BoundingBox box;  // groundtruth in search-crop pixels
};

// Frame pairs drawn from the sequences, cropped the same way the tracker
// crops at inference, with jittered search centers so the target is not
// always dead center. Pairs whose corners would clamp at the edge of the
// presence map are redrawn.
std::vector<TrainSample> build_pairs(const Model& model, const std::vector<SyntheticSequence>& sequences,
                                     int n_pairs, uint64_t seed);

// Linear warmup from lr_start to lr_peak over warmup_frac of the run, then
// cosine decay to zero.
double learning_rate_at(int step, int total_steps, double lr_start, double lr_peak, double warmup_frac);

struct TrainReport {
    std::vector<double> loss_curve;  // mean batch loss per step
};

// SGD with momentum and L2 weight decay, gradients accumulated per sample in
// a fixed order so runs are bit reproducible. Throws NumericError naming the
// failing step if the loss turns non-finite.
TrainReport train(Model& model, const std::vector<TrainSample>& samples, std::ostream* log = nullptr);

}  // namespace pcdhv
