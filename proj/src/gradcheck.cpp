#include "pcdhv/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pcdhv {

GradCheckReport grad_check(ParamSet& params, const LossFn& f, long long n_coords, double eps, uint64_t seed,
                           double denom_floor) {
    GradCheckReport rep;

    // analytic gradients once
    params.zero_grad();
    {
        Tape tape;
        auto binding = params.inject(tape);
        const int root = f(tape, binding);
        tape.backward(root);
        params.collect_grads(tape, binding);
    }

    const long long total = params.scalar_count();
    std::mt19937_64 rng(seed);
    const long long n = std::min(n_coords, total);

    auto eval = [&]() -> double {
        Tape tape;
        auto binding = params.inject(tape);
        return static_cast<double>(tape.value(f(tape, binding)).data[0]);
    };

    for (long long s = 0; s < n; ++s) {
        long long flat = static_cast<long long>(rng() % static_cast<uint64_t>(total));
        // locate the owning parameter
        size_t pi = 0;
        for (; pi < params.count(); ++pi) {
            if (flat < params.entries()[pi].value.size()) break;
            flat -= params.entries()[pi].value.size();
        }
        auto& e = params.entries()[pi];
        const Real saved = e.value.data[flat];

        e.value.data[flat] = saved + static_cast<Real>(eps);
        const double lp = eval();
        e.value.data[flat] = saved - static_cast<Real>(eps);
        const double lm = eval();
        e.value.data[flat] = saved;

        const double fd = (lp - lm) / (2 * eps);
        const double ad = static_cast<double>(e.grad.data[flat]);
        if (!std::isfinite(fd) || !std::isfinite(ad)) {
            rep.finite = false;
            rep.worst_param = e.name;
            rep.worst_index = flat;
            rep.max_rel_error = std::numeric_limits<double>::infinity();
            return rep;
        }
        const double rel = std::abs(fd - ad) / std::max({std::abs(fd), std::abs(ad), denom_floor});
        if (rel > rep.max_rel_error) {
            rep.max_rel_error = rel;
            rep.worst_param = e.name;
            rep.worst_index = flat;
        }
        ++rep.coords_checked;
    }
    return rep;
}

}  // namespace pcdhv
