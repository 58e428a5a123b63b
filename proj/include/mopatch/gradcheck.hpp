#pragma once

#include <functional>

#include "mopatch/tensor.hpp"

namespace mopatch {

// Central finite-difference check of analytic gradients.
//
// `loss_fn` must recompute the scalar loss from the current contents of the
// parameter tensors (the graph is rebuilt per call). `params` pairs each
// parameter tensor with its analytic gradient, computed beforehand by one
// backward pass. Frozen parameters are simply not passed in.
//
// Coordinates are sampled uniformly across all parameters; coordinates whose
// analytic gradient is below `grad_floor` are skipped, because f32 forward
// rounding (~1e-7 relative on the loss) makes the relative-error quotient
// meaningless there. Returns the max of
//   |analytic - (f(t+e) - f(t-e)) / 2e| / (|analytic| + 1e-8).
struct FdCheck {
    double max_rel_err = 0.0;
    int checked = 0;
};

FdCheck finite_difference_check(const std::function<double()>& loss_fn,
                                std::vector<std::pair<Tensor*, const Tensor*>> params,
                                double epsilon, int samples, uint64_t seed,
                                double grad_floor = 1e-3);

}  // namespace mopatch
