#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "f2f/tensor.hpp"

namespace f2f {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moment accumulators are sized lazily on the first step, one per parameter
// in the order the parameters are passed.
struct AdamState {
  AdamOptions options;
  std::int64_t step_count = 0;
  std::vector<Tensor4> m;
  std::vector<Tensor4> v;

  AdamState() = default;
  explicit AdamState(AdamOptions opts) : options(opts) {}

  void reset() {
    step_count = 0;
    m.clear();
    v.clear();
  }
};

// One bias-corrected Adam update. Gradients are read, not cleared. Throws
// Error(kNonFinite) before touching anything if any trainable gradient is
// NaN or infinite.
void adam_step(std::span<Parameter* const> params, AdamState& state);

}  // namespace f2f
