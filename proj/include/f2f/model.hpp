#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "f2f/autodiff.hpp"
#include "f2f/image.hpp"

namespace f2f {

// DnCNN-style stack: conv+ReLU, then depth-2 x conv(+BN)+ReLU, then conv.
struct ModelConfig {
  int depth = 7;
  int width = 32;
  int kernel = 3;
  bool use_norm = true;
  // Network predicts the noise; denoised = input - output.
  bool residual = true;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct ConvLayer {
  Parameter weight;  // (out, in, k, k)
  Parameter bias;    // (1, out, 1, 1)
  bool has_norm = false;
  Parameter gamma;
  Parameter beta;
  RunningStats<float> stats;

  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

struct ModelParams {
  ModelConfig config;
  std::vector<ConvLayer> layers;

  // Learnable tensors in a fixed order (per layer: weight, bias, gamma, beta).
  std::vector<Parameter*> parameters();
  std::size_t parameter_count() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// He-scaled Gaussian weights (variance 2 / fan_in), zero biases, unit gamma.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

// Graph-building forward pass on a (batch, 1, rows, cols) input. Returns the
// raw network output (the noise estimate when config.residual is set).
// update_stats controls whether train-mode batch norm moves the running
// statistics.
Var forward_network(Tape& tape, ModelParams& params, const Var& input, NormMode mode, bool update_stats = true);

// Denoised estimate as a graph node: input - output for residual models.
Var denoise_graph(Tape& tape, ModelParams& params, const Var& input, NormMode mode, bool update_stats = true);

// Noise residual predicted for a frame. Train mode normalizes with the frame's
// own statistics but never moves the running statistics here.
Frame forward_residual(const ModelParams& params, const Frame& frame, NormMode mode = NormMode::kEval);

// frame - forward_residual(frame), eval mode.
Frame denoise(const ModelParams& params, const Frame& frame);

Tensor4 to_tensor(const Frame& frame);
Tensor4 to_tensor(std::span<const Frame> frames);
Frame to_frame(const Tensor4& tensor, int index = 0);

// Binary weights file, little-endian:
//   "F2FW" | u32 version | u32 depth | u32 width | u32 kernel | u8 use_norm | u8 residual
//   per layer: u32 out | u32 in | u32 kernel | u8 has_norm
//              | f32 weight[out*in*k*k] | f32 bias[out]
//              | (has_norm) f32 gamma[out] | beta[out] | running_mean[out] | running_var[out]
inline constexpr std::uint32_t kWeightsVersion = 1;

void save_weights(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_weights(const std::filesystem::path& path);

// FNV-1a over the raw parameter bytes; cheap identity check for logs.
std::uint64_t weights_checksum(const ModelParams& params);

}  // namespace f2f
