#pragma once

#include <filesystem>
#include <vector>

#include "f2f/image.hpp"

namespace f2f {

// Dual TV-L1 optical flow settings. Images are rescaled jointly to [0,255]
// before solving, so lambda_data is on the 8-bit intensity scale. The energy
// minimized per level is
//   sum_x |grad u1| + |grad u2| + lambda_data * |I1(x + u) - I0(x)|.
struct FlowConfig {
  double lambda_data = 0.15;
  double theta_tv = 0.3;
  double tau_pd = 0.25;
  double pyramid_scale = 0.5;
  // 0 selects as many levels as fit above min_level_size.
  int n_scales = 0;
  int n_warps = 5;
  int n_iters = 50;
  int prefilter_downscale = 2;
  double stop_eps = 0.01;
  bool median_filter = true;
  double presmooth_sigma = 0.8;
  int min_level_size = 16;

  void validate() const;
};

// Energy after each warp, per pyramid level (coarsest first).
struct FlowTrace {
  struct Level {
    int rows = 0;
    int cols = 0;
    std::vector<double> energy;
  };
  std::vector<Level> levels;
};

// Flow v with reference(x + v(x)) ~= target(x).
FlowField tvl1_flow(const Frame& target, const Frame& reference, const FlowConfig& config = {},
                    FlowTrace* trace = nullptr);

// TV-L1 energy of a flow for a pair, using bilinear clamped warping.
double tvl1_energy(const Frame& target, const Frame& reference, const FlowField& flow, double lambda);

// Level 0 is the input; level k+1 is Gaussian-smoothed and resampled by scale.
std::vector<Frame> build_pyramid(const Frame& frame, double scale, int n_scales);

// Number of levels build_pyramid can produce while keeping min(rows, cols) >= min_size.
int max_pyramid_levels(int rows, int cols, double scale, int min_size);

// Size of the next pyramid level.
int pyramid_level_size(int n, double scale);

// Bilinear resize of both components; values scaled by the per-axis size ratio.
FlowField upsample_flow(const FlowField& flow, int rows, int cols);

// Middlebury .flo: float magic 202021.25, int32 width, int32 height, then
// row-major interleaved (u, v) float32, little-endian.
void write_flo(const FlowField& flow, const std::filesystem::path& path);
FlowField read_flo(const std::filesystem::path& path);

}  // namespace f2f
