#include "f2f/adam.hpp"

#include <cmath>
#include <string>

#include "f2f/error.hpp"

namespace f2f {

void adam_step(std::span<Parameter* const> params, AdamState& state) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->trainable && !params[i]->grad.all_finite()) {
      throw Error(ErrorCode::kNonFinite, "adam_step: non-finite gradient in parameter " + std::to_string(i));
    }
  }
  if (state.m.size() != params.size()) {
    state.m.clear();
    state.v.clear();
    for (const auto* p : params) {
      state.m.emplace_back(p->value.shape());
      state.v.emplace_back(p->value.shape());
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].shape() != params[i]->value.shape()) {
      throw Error(ErrorCode::kShapeMismatch, "adam_step: moment shape does not match parameter " + std::to_string(i));
    }
  }

  ++state.step_count;
  const auto& o = state.options;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (!p.trainable) continue;
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      const double mj = o.beta1 * m[j] + (1.0 - o.beta1) * g;
      const double vj = o.beta2 * v[j] + (1.0 - o.beta2) * g * g;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double mhat = mj / correction1;
      const double vhat = vj / correction2;
      p.value[j] = static_cast<float>(p.value[j] - o.lr * mhat / (std::sqrt(vhat) + o.eps));
    }
  }
}

}  // namespace f2f
