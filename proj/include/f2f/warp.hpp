#pragma once

#include "f2f/flow.hpp"
#include "f2f/image.hpp"

namespace f2f {

struct WarpResult {
  Frame warped;
  // 1 where every bilinear neighbour with nonzero weight lies inside the domain.
  Mask valid;
};

// warped(x) = reference(x + flow(x)), bilinear, border-clamped.
WarpResult warp_bilinear(const Frame& reference, const FlowField& flow);

// du/dx + dv/dy; central differences inside, one-sided on the border.
Image<float> divergence(const FlowField& flow);

struct OcclusionConfig {
  double tau_div = 0.5;
  int dilation_radius = 1;

  void validate() const;
};

// 0 where |div flow| > tau or x + flow(x) leaves the image, then zeros are
// grown by dilation_radius (Chebyshev).
OcclusionMask occlusion_mask(const FlowField& flow, const OcclusionConfig& config);

// Zeros of mask grown by a (2r+1) x (2r+1) square.
Mask dilate_zeros(const Mask& mask, int radius);

// A noise-to-noise training pair: f_t against the motion-compensated reference.
struct TrainingPair {
  Frame warped;
  OcclusionMask mask;
  FlowField flow;
  // No visible pixel: the pair carries no training signal.
  bool skipped = false;

  double visible_fraction() const;
};

// Estimates flow from f_t to f_ref, warps f_ref onto f_t and intersects the
// occlusion mask with warp validity.
TrainingPair build_pair(const Frame& f_t, const Frame& f_ref, const FlowConfig& flow_config,
                        const OcclusionConfig& occlusion_config);

// Same, with a given flow.
TrainingPair build_pair_from_flow(const Frame& f_ref, FlowField flow, const OcclusionConfig& occlusion_config);

}  // namespace f2f
