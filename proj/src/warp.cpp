#include "f2f/warp.hpp"

#include <algorithm>
#include <cmath>

#include "f2f/error.hpp"
#include "f2f/image_ops.hpp"

namespace f2f {
namespace {

void check_dims(const Frame& frame, const FlowField& flow, const char* what) {
  if (!frame.same_dims(flow.u)) throw Error(ErrorCode::kShapeMismatch, std::string(what) + ": frame and flow dims differ");
}

// Whether the bilinear footprint of a coordinate stays inside [0, n-1].
bool footprint_inside(double p, int n) {
  const double base = std::floor(p);
  if (base < 0.0) return false;
  const double top = p > base ? base + 1.0 : base;
  return top <= n - 1;
}

bool inside(double p, int n) { return p >= 0.0 && p <= n - 1; }

}  // namespace

WarpResult warp_bilinear(const Frame& reference, const FlowField& flow) {
  check_dims(reference, flow, "warp_bilinear");
  const int rows = reference.rows();
  const int cols = reference.cols();
  WarpResult out{Frame(rows, cols), Mask(rows, cols)};
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double x = c + static_cast<double>(flow.u(r, c));
      const double y = r + static_cast<double>(flow.v(r, c));
      out.warped(r, c) = sample_bilinear(reference, x, y);
      out.valid(r, c) = footprint_inside(x, cols) && footprint_inside(y, rows) ? 1 : 0;
    }
  }
  return out;
}

Image<float> divergence(const FlowField& flow) {
  const int rows = flow.rows();
  const int cols = flow.cols();
  Image<float> div(rows, cols);
  auto d_dx = [&](int r, int c) -> double {
    if (cols < 2) return 0.0;
    if (c == 0) return flow.u(r, 1) - flow.u(r, 0);
    if (c == cols - 1) return flow.u(r, c) - flow.u(r, c - 1);
    return 0.5 * (flow.u(r, c + 1) - flow.u(r, c - 1));
  };
  auto d_dy = [&](int r, int c) -> double {
    if (rows < 2) return 0.0;
    if (r == 0) return flow.v(1, c) - flow.v(0, c);
    if (r == rows - 1) return flow.v(r, c) - flow.v(r - 1, c);
    return 0.5 * (flow.v(r + 1, c) - flow.v(r - 1, c));
  };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) div(r, c) = static_cast<float>(d_dx(r, c) + d_dy(r, c));
  }
  return div;
}

void OcclusionConfig::validate() const {
  if (!(tau_div > 0.0)) throw Error(ErrorCode::kInvalidArgument, "occlusion tau_div must be positive");
  if (dilation_radius < 0) throw Error(ErrorCode::kInvalidArgument, "occlusion dilation_radius must be >= 0");
}

Mask dilate_zeros(const Mask& mask, int radius) {
  if (radius <= 0) return mask;
  const int rows = mask.rows();
  const int cols = mask.cols();
  // Separable: a pixel survives iff its whole square window is nonzero.
  Mask horizontal(rows, cols, 1);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      for (int j = std::max(0, c - radius); j <= std::min(cols - 1, c + radius); ++j) {
        if (mask(r, j) == 0) {
          horizontal(r, c) = 0;
          break;
        }
      }
    }
  }
  Mask out(rows, cols, 1);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      for (int i = std::max(0, r - radius); i <= std::min(rows - 1, r + radius); ++i) {
        if (horizontal(i, c) == 0) {
          out(r, c) = 0;
          break;
        }
      }
    }
  }
  return out;
}

OcclusionMask occlusion_mask(const FlowField& flow, const OcclusionConfig& config) {
  config.validate();
  const int rows = flow.rows();
  const int cols = flow.cols();
  const auto div = divergence(flow);
  OcclusionMask mask(rows, cols, 1);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const bool steep = std::abs(div(r, c)) > config.tau_div;
      const bool exits = !inside(c + static_cast<double>(flow.u(r, c)), cols) ||
                         !inside(r + static_cast<double>(flow.v(r, c)), rows);
      mask(r, c) = steep || exits ? 0 : 1;
    }
  }
  return dilate_zeros(mask, config.dilation_radius);
}

double TrainingPair::visible_fraction() const {
  if (mask.empty()) return 0.0;
  std::size_t n = 0;
  for (auto k : mask.pixels()) n += k;
  return static_cast<double>(n) / static_cast<double>(mask.size());
}

TrainingPair build_pair_from_flow(const Frame& f_ref, FlowField flow, const OcclusionConfig& occlusion_config) {
  check_dims(f_ref, flow, "build_pair");
  TrainingPair pair;
  auto warp = warp_bilinear(f_ref, flow);
  pair.mask = occlusion_mask(flow, occlusion_config);
  bool any = false;
  for (std::size_t i = 0; i < pair.mask.size(); ++i) {
    pair.mask[i] = pair.mask[i] & warp.valid[i];
    any = any || pair.mask[i] != 0;
  }
  pair.warped = std::move(warp.warped);
  pair.flow = std::move(flow);
  pair.skipped = !any;
  return pair;
}

TrainingPair build_pair(const Frame& f_t, const Frame& f_ref, const FlowConfig& flow_config,
                        const OcclusionConfig& occlusion_config) {
  if (!f_t.same_dims(f_ref)) throw Error(ErrorCode::kShapeMismatch, "build_pair: frames differ in size");
  return build_pair_from_flow(f_ref, tvl1_flow(f_t, f_ref, flow_config), occlusion_config);
}

}  // namespace f2f
