#include "f2f/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "f2f/error.hpp"
#include "f2f/image_ops.hpp"

namespace f2f {

void FlowConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidArgument, "flow config: " + what); };
  if (!(lambda_data > 0.0)) fail("lambda_data must be positive");
  if (!(theta_tv > 0.0)) fail("theta_tv must be positive");
  if (!(tau_pd > 0.0 && tau_pd <= 0.25)) fail("tau_pd must lie in (0, 0.25]");
  if (!(pyramid_scale >= 0.5 && pyramid_scale < 1.0)) fail("pyramid_scale must lie in [0.5, 1)");
  if (n_scales < 0) fail("n_scales must be >= 0 (0 = auto)");
  if (n_warps < 1) fail("n_warps must be >= 1");
  if (n_iters < 1) fail("n_iters must be >= 1");
  if (prefilter_downscale < 1) fail("prefilter_downscale must be >= 1");
  if (!(stop_eps > 0.0)) fail("stop_eps must be positive");
  if (min_level_size < 1) fail("min_level_size must be >= 1");
}

int pyramid_level_size(int n, double scale) { return std::max(1, static_cast<int>(n * scale + 0.5)); }

int max_pyramid_levels(int rows, int cols, double scale, int min_size) {
  int levels = 1;
  while (true) {
    const int r = pyramid_level_size(rows, scale);
    const int c = pyramid_level_size(cols, scale);
    if (std::min(r, c) < min_size || (r == rows && c == cols)) break;
    rows = r;
    cols = c;
    ++levels;
  }
  return levels;
}

std::vector<Frame> build_pyramid(const Frame& frame, double scale, int n_scales) {
  std::vector<Frame> levels{frame};
  const double sigma = 0.6 * std::sqrt(1.0 / (scale * scale) - 1.0);
  for (int k = 1; k < n_scales; ++k) {
    const Frame& prev = levels.back();
    const Frame smooth = gaussian_blur(prev, sigma);
    const int rows = pyramid_level_size(prev.rows(), scale);
    const int cols = pyramid_level_size(prev.cols(), scale);
    const double sy = static_cast<double>(prev.rows()) / rows;
    const double sx = static_cast<double>(prev.cols()) / cols;
    Frame next(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) next(r, c) = sample_bilinear(smooth, (c + 0.5) * sx - 0.5, (r + 0.5) * sy - 0.5);
    }
    levels.push_back(std::move(next));
  }
  return levels;
}

FlowField upsample_flow(const FlowField& flow, int rows, int cols) {
  if (flow.rows() == rows && flow.cols() == cols) return flow;
  FlowField out;
  out.u = resize_bilinear(flow.u, rows, cols);
  out.v = resize_bilinear(flow.v, rows, cols);
  const float ku = static_cast<float>(static_cast<double>(cols) / flow.cols());
  const float kv = static_cast<float>(static_cast<double>(rows) / flow.rows());
  for (auto& x : out.u.pixels()) x *= ku;
  for (auto& x : out.v.pixels()) x *= kv;
  return out;
}

namespace {

using Field = Image<float>;

// Forward differences, zero on the last column/row.
void forward_gradient(const Field& f, Field& fx, Field& fy) {
  const int rows = f.rows();
  const int cols = f.cols();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      fx(r, c) = c + 1 < cols ? f(r, c + 1) - f(r, c) : 0.0f;
      fy(r, c) = r + 1 < rows ? f(r + 1, c) - f(r, c) : 0.0f;
    }
  }
}

// Negative adjoint of forward_gradient.
void divergence_adjoint(const Field& p1, const Field& p2, Field& div) {
  const int rows = p1.rows();
  const int cols = p1.cols();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const float dx = (c + 1 < cols ? p1(r, c) : 0.0f) - (c > 0 ? p1(r, c - 1) : 0.0f);
      const float dy = (r + 1 < rows ? p2(r, c) : 0.0f) - (r > 0 ? p2(r - 1, c) : 0.0f);
      div(r, c) = dx + dy;
    }
  }
}

void centered_gradient(const Field& f, Field& fx, Field& fy) {
  const int rows = f.rows();
  const int cols = f.cols();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      fx(r, c) = 0.5f * (f(r, std::min(c + 1, cols - 1)) - f(r, std::max(c - 1, 0)));
      fy(r, c) = 0.5f * (f(std::min(r + 1, rows - 1), c) - f(std::max(r - 1, 0), c));
    }
  }
}

Field warp_clamped(const Field& image, const FlowField& flow) {
  Field out(image.rows(), image.cols());
  for (int r = 0; r < image.rows(); ++r) {
    for (int c = 0; c < image.cols(); ++c) out(r, c) = sample_bilinear(image, c + flow.u(r, c), r + flow.v(r, c));
  }
  return out;
}

double tv_term(const FlowField& flow) {
  const int rows = flow.rows();
  const int cols = flow.cols();
  Field ux(rows, cols), uy(rows, cols), vx(rows, cols), vy(rows, cols);
  forward_gradient(flow.u, ux, uy);
  forward_gradient(flow.v, vx, vy);
  double e = 0.0;
  for (std::size_t i = 0; i < ux.size(); ++i) e += std::hypot(ux[i], uy[i]) + std::hypot(vx[i], vy[i]);
  return e;
}

double data_term(const Field& target, const Field& reference, const FlowField& flow) {
  const Field warped = warp_clamped(reference, flow);
  double e = 0.0;
  for (std::size_t i = 0; i < warped.size(); ++i) e += std::abs(static_cast<double>(warped[i]) - target[i]);
  return e;
}

// Zach-Pock-Bischof dual scheme on one level, refining flow in place.
void solve_level(const Field& i0, const Field& i1, FlowField& flow, const FlowConfig& cfg, FlowTrace::Level* trace) {
  const int rows = i0.rows();
  const int cols = i0.cols();
  const std::size_t size = i0.size();
  const double lt = cfg.lambda_data * cfg.theta_tv;
  const double taut = cfg.tau_pd / cfg.theta_tv;
  constexpr double kGradIsZero = 1e-10;

  Field i1x(rows, cols), i1y(rows, cols);
  centered_gradient(i1, i1x, i1y);

  Field p11(rows, cols), p12(rows, cols), p21(rows, cols), p22(rows, cols);
  Field v1(rows, cols), v2(rows, cols), div1(rows, cols), div2(rows, cols);
  Field u1x(rows, cols), u1y(rows, cols), u2x(rows, cols), u2y(rows, cols);
  Field grad(rows, cols), rho_c(rows, cols);
  Field& u1 = flow.u;
  Field& u2 = flow.v;

  for (int warp = 0; warp < cfg.n_warps; ++warp) {
    const Field i1w = warp_clamped(i1, flow);
    const Field i1wx = warp_clamped(i1x, flow);
    const Field i1wy = warp_clamped(i1y, flow);
    for (std::size_t i = 0; i < size; ++i) {
      grad[i] = i1wx[i] * i1wx[i] + i1wy[i] * i1wy[i];
      rho_c[i] = i1w[i] - i1wx[i] * u1[i] - i1wy[i] * u2[i] - i0[i];
    }

    double error = std::numeric_limits<double>::infinity();
    for (int n = 0; n < cfg.n_iters && error > cfg.stop_eps * cfg.stop_eps; ++n) {
      // Pointwise thresholding of the linearized data term.
      for (std::size_t i = 0; i < size; ++i) {
        const double rho = rho_c[i] + i1wx[i] * u1[i] + i1wy[i] * u2[i];
        double d1 = 0.0;
        double d2 = 0.0;
        if (rho < -lt * grad[i]) {
          d1 = lt * i1wx[i];
          d2 = lt * i1wy[i];
        } else if (rho > lt * grad[i]) {
          d1 = -lt * i1wx[i];
          d2 = -lt * i1wy[i];
        } else if (grad[i] >= kGradIsZero) {
          const double fi = -rho / grad[i];
          d1 = fi * i1wx[i];
          d2 = fi * i1wy[i];
        }
        v1[i] = static_cast<float>(u1[i] + d1);
        v2[i] = static_cast<float>(u2[i] + d2);
      }

      divergence_adjoint(p11, p12, div1);
      divergence_adjoint(p21, p22, div2);
      error = 0.0;
      for (std::size_t i = 0; i < size; ++i) {
        const float a = u1[i];
        const float b = u2[i];
        u1[i] = static_cast<float>(v1[i] + cfg.theta_tv * div1[i]);
        u2[i] = static_cast<float>(v2[i] + cfg.theta_tv * div2[i]);
        error += (u1[i] - a) * (u1[i] - a) + (u2[i] - b) * (u2[i] - b);
      }
      error /= static_cast<double>(size);

      forward_gradient(u1, u1x, u1y);
      forward_gradient(u2, u2x, u2y);
      for (std::size_t i = 0; i < size; ++i) {
        const double ng1 = 1.0 + taut * std::hypot(u1x[i], u1y[i]);
        const double ng2 = 1.0 + taut * std::hypot(u2x[i], u2y[i]);
        p11[i] = static_cast<float>((p11[i] + taut * u1x[i]) / ng1);
        p12[i] = static_cast<float>((p12[i] + taut * u1y[i]) / ng1);
        p21[i] = static_cast<float>((p21[i] + taut * u2x[i]) / ng2);
        p22[i] = static_cast<float>((p22[i] + taut * u2y[i]) / ng2);
      }
    }

    if (cfg.median_filter) {
      u1 = median3x3(u1);
      u2 = median3x3(u2);
    }
    if (trace != nullptr) trace->energy.push_back(tv_term(flow) + cfg.lambda_data * data_term(i0, i1, flow));
  }
}

// Joint affine map of both frames onto [0, 255].
void normalize_pair(Frame& a, Frame& b) {
  float lo = std::numeric_limits<float>::max();
  float hi = std::numeric_limits<float>::lowest();
  for (const Frame* f : {&a, &b}) {
    for (float x : f->pixels()) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (!(hi > lo)) return;
  const float k = 255.0f / (hi - lo);
  for (Frame* f : {&a, &b}) {
    for (auto& x : f->pixels()) x = (x - lo) * k;
  }
}

}  // namespace

double tvl1_energy(const Frame& target, const Frame& reference, const FlowField& flow, double lambda) {
  return tv_term(flow) + lambda * data_term(target, reference, flow);
}

FlowField tvl1_flow(const Frame& target, const Frame& reference, const FlowConfig& config, FlowTrace* trace) {
  config.validate();
  if (!target.same_dims(reference)) {
    throw Error(ErrorCode::kShapeMismatch, "tvl1_flow: frames are " + std::to_string(target.rows()) + "x" +
                                               std::to_string(target.cols()) + " and " +
                                               std::to_string(reference.rows()) + "x" +
                                               std::to_string(reference.cols()));
  }
  const int rows = target.rows();
  const int cols = target.cols();
  if (rows == 0 || cols == 0) return FlowField(rows, cols);

  int factor = config.prefilter_downscale;
  while (factor > 1 && std::min(rows, cols) / factor < 2) --factor;
  Frame i0 = box_downscale(target, factor);
  Frame i1 = box_downscale(reference, factor);
  normalize_pair(i0, i1);
  i0 = gaussian_blur(i0, config.presmooth_sigma);
  i1 = gaussian_blur(i1, config.presmooth_sigma);

  const int fit = max_pyramid_levels(i0.rows(), i0.cols(), config.pyramid_scale, config.min_level_size);
  const int levels = config.n_scales == 0 ? fit : std::min(config.n_scales, fit);
  const auto pyr0 = build_pyramid(i0, config.pyramid_scale, levels);
  const auto pyr1 = build_pyramid(i1, config.pyramid_scale, levels);

  FlowField flow(pyr0.back().rows(), pyr0.back().cols());
  for (int level = levels - 1; level >= 0; --level) {
    const Frame& a = pyr0[level];
    const Frame& b = pyr1[level];
    flow = upsample_flow(flow, a.rows(), a.cols());
    FlowTrace::Level* level_trace = nullptr;
    if (trace != nullptr) {
      trace->levels.push_back({a.rows(), a.cols(), {}});
      level_trace = &trace->levels.back();
    }
    solve_level(a, b, flow, config, level_trace);
  }
  return upsample_flow(flow, rows, cols);
}

}  // namespace f2f
