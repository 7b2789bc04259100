#pragma once

#include <functional>

#include "pcdhv/params.hpp"

namespace pcdhv {

struct GradCheckReport {
    double max_rel_error = 0;
    long long coords_checked = 0;
    std::string worst_param;
    long long worst_index = -1;
    bool finite = true;
};

// f builds a scalar loss on a fresh tape from injected parameters.
using LossFn = std::function<int(Tape&, const ParamSet::Binding&)>;

// Central finite differences against tape gradients over `n_coords` parameter
// coordinates sampled with `seed`. Relative error uses max(|fd|, |ad|, floor).
GradCheckReport grad_check(ParamSet& params, const LossFn& f, long long n_coords, double eps = 1e-5,
                           uint64_t seed = 7, double denom_floor = 1e-6);

}  // namespace pcdhv
