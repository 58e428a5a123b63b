#include "mopatch/gradcheck.hpp"

#include <cmath>

#include "mopatch/common.hpp"

namespace mopatch {

FdCheck finite_difference_check(const std::function<double()>& loss_fn,
                                std::vector<std::pair<Tensor*, const Tensor*>> params,
                                double epsilon, int samples, uint64_t seed,
                                double grad_floor) {
    if (epsilon <= 0.0) fail("finite_difference_check: epsilon must be positive");
    int64_t total = 0;
    for (auto& [value, grad] : params) {
        if (value->size() != grad->size()) fail("finite_difference_check: value/grad size mismatch");
        total += value->size();
    }
    if (total == 0) fail("finite_difference_check: no coordinates");

    Rng rng(seed);
    FdCheck result;
    int attempts = 0;
    const int max_attempts = samples * 64;
    while (result.checked < samples && attempts < max_attempts) {
        ++attempts;
        int64_t flat = int64_t(rng.below(uint64_t(total)));
        size_t which = 0;
        while (flat >= params[which].first->size()) {
            flat -= params[which].first->size();
            ++which;
        }
        float& coord = params[which].first->data[size_t(flat)];
        const double analytic = double(params[which].second->data[size_t(flat)]);
        if (std::fabs(analytic) < grad_floor) continue;

        const float original = coord;
        coord = float(double(original) + epsilon);
        const double f_plus = loss_fn();
        coord = float(double(original) - epsilon);
        const double f_minus = loss_fn();
        coord = original;

        const double fd = (f_plus - f_minus) / (2.0 * epsilon);
        const double rel = std::fabs(analytic - fd) / (std::fabs(analytic) + 1e-8);
        result.max_rel_err = std::max(result.max_rel_err, rel);
        ++result.checked;
    }
    return result;
}

}  // namespace mopatch
