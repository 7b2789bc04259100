#pragma once

#include "pcdhv/model.hpp"
#include "pcdhv/supervision.hpp"

namespace pcdhv {

struct SyntheticSequence {
    std::vector<Tensor> frames;
    std::vector<BoundingBox> boxes;
    uint64_t seed = 0;
    int size = 0;
    int difficulty = 0;
};

// One moving shape (rectangle / ellipse / triangle) over textured noise,
// bounded scale drift, optional distractors at higher difficulty. Bit
// reproducible per seed.
SyntheticSequence generate_sequence(uint64_t seed, int n_frames, int size, int difficulty);

void save_sequence(const std::string& dir, const SyntheticSequence& seq);
SyntheticSequence load_sequence(const std::string& dir);

struct MetricReport {
    std::vector<double> per_frame_iou;
    double ao = 0;    // mean IoU
    double sr50 = 0;  // fraction of frames with IoU > 0.5
    double sr75 = 0;
};

MetricReport evaluate(const Model& model, const std::vector<SyntheticSequence>& sequences);

}  // namespace pcdhv
