#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "f2f/tensor.hpp"

namespace f2f {

// Activation node on a tape. grad is allocated on first use.
template <typename T>
struct Node {
  BasicTensor4<T> value;
  BasicTensor4<T> grad;
  bool requires_grad = false;

  BasicTensor4<T>& ensure_grad() {
    if (grad.shape() != value.shape()) grad = BasicTensor4<T>(value.shape());
    return grad;
  }
};

template <typename T>
using BasicVar = std::shared_ptr<Node<T>>;
using Var = BasicVar<float>;

// Records backward closures in execution order and replays them in reverse.
// A tape built with recording=false evaluates ops without keeping any state
// for differentiation.
template <typename T>
class BasicTape {
 public:
  explicit BasicTape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }

  BasicVar<T> leaf(BasicTensor4<T> value, bool requires_grad = false) {
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    node->requires_grad = requires_grad && recording_;
    return node;
  }

  void record(std::function<void()> step) {
    if (recording_) steps_.push_back(std::move(step));
  }

  // Seeds d(loss)/d(loss) = 1 and propagates. loss must hold one element.
  void backward(const BasicVar<T>& loss);

 private:
  bool recording_;
  std::vector<std::function<void()>> steps_;
};

using Tape = BasicTape<float>;

enum class NormMode { kTrain, kEval };

template <typename T>
struct RunningStats {
  std::vector<T> mean;
  std::vector<T> var;

  RunningStats() = default;
  explicit RunningStats(int channels) : mean(channels, T{0}), var(channels, T{1}) {}
  friend bool operator==(const RunningStats&, const RunningStats&) = default;
};

struct BatchNormOptions {
  double momentum = 0.1;
  double eps = 1e-5;
  // Train mode only: whether the running statistics absorb this batch.
  bool update_stats = true;
};

// Same-size 2-D convolution, stride 1, zero padding. weights: (out, in, k, k),
// bias: (1, out, 1, 1). padding must equal (k - 1) / 2.
template <typename T>
BasicVar<T> conv2d(BasicTape<T>& tape, const BasicVar<T>& input, BasicParameter<T>& weights,
                   BasicParameter<T>& bias, int padding);

template <typename T>
BasicVar<T> relu(BasicTape<T>& tape, const BasicVar<T>& input);

// Per-channel normalization with statistics pooled over (batch, row, col).
// gamma and beta have shape (1, channels, 1, 1).
template <typename T>
BasicVar<T> batch_norm(BasicTape<T>& tape, const BasicVar<T>& input, BasicParameter<T>& gamma,
                       BasicParameter<T>& beta, RunningStats<T>& stats, NormMode mode,
                       const BatchNormOptions& options = {});

// a - b, elementwise.
template <typename T>
BasicVar<T> subtract(BasicTape<T>& tape, const BasicVar<T>& a, const BasicVar<T>& b);

// Sum of all elements as a 1x1x1x1 tensor.
template <typename T>
BasicVar<T> sum(BasicTape<T>& tape, const BasicVar<T>& input);

// sum(mask * |pred - target|) / max(1, sum(mask)). target and mask are
// constants; mask has one channel and broadcasts over pred's channels.
template <typename T>
BasicVar<T> masked_l1_loss(BasicTape<T>& tape, const BasicVar<T>& prediction, const BasicTensor4<T>& target,
                           const BasicTensor4<T>& mask);

// sum(mask * (pred - target)^2) / max(1, sum(mask)).
template <typename T>
BasicVar<T> l2_loss(BasicTape<T>& tape, const BasicVar<T>& prediction, const BasicTensor4<T>& target,
                    const BasicTensor4<T>& mask);

}  // namespace f2f
