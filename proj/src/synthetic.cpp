#include "f2f/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "f2f/image_ops.hpp"
#include "f2f/noise.hpp"

namespace f2f {
namespace {

void rescale(Frame& f, float lo, float hi) {
  const auto [mn, mx] = std::minmax_element(f.pixels().begin(), f.pixels().end());
  const float a = *mn;
  const float b = *mx;
  const float k = b > a ? (hi - lo) / (b - a) : 0.0f;
  for (auto& x : f.pixels()) x = lo + (x - a) * k;
}

Frame white_noise(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Frame f(rows, cols);
  for (auto& x : f.pixels()) x = static_cast<float>(normal(rng));
  return f;
}

}  // namespace

Frame synthetic_texture(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Frame out(rows, cols);
  const double scales[] = {10.0, 4.0, 1.5};
  const double weights[] = {1.0, 0.45, 0.15};
  for (int s = 0; s < 3; ++s) {
    Frame layer = gaussian_blur(white_noise(rows, cols, rng), scales[s]);
    rescale(layer, -1.0f, 1.0f);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += static_cast<float>(weights[s] * layer[i]);
  }
  rescale(out, 0.2f, 0.8f);

  // Flat-shaded rectangles and disks give sharp edges.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int shapes = std::max(3, rows * cols / 900);
  for (int k = 0; k < shapes; ++k) {
    const double cy = unit(rng) * rows;
    const double cx = unit(rng) * cols;
    const double size = 3.0 + unit(rng) * std::min(rows, cols) / 5.0;
    const double level = 0.1 + 0.8 * unit(rng);
    const double alpha = 0.5 + 0.4 * unit(rng);
    const bool disk = unit(rng) < 0.5;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const double dy = r - cy;
        const double dx = c - cx;
        const bool in = disk ? dx * dx + dy * dy <= size * size : std::abs(dx) <= size && std::abs(dy) <= 0.6 * size;
        if (in) out(r, c) = static_cast<float>((1.0 - alpha) * out(r, c) + alpha * level);
      }
    }
  }
  for (auto& x : out.pixels()) x = std::clamp(x, 0.1f, 0.9f);
  return out;
}

Frame periodic_blurred_noise(int rows, int cols, double blur_sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Frame noise = white_noise(rows, cols, rng);
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * blur_sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (int i = -radius; i <= radius; ++i) norm += kernel[i + radius] = std::exp(-0.5 * i * i / (blur_sigma * blur_sigma));
  for (auto& k : kernel) k /= norm;
  auto wrap = [](int i, int n) { return ((i % n) + n) % n; };
  Frame tmp(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int i = -radius; i <= radius; ++i) s += kernel[i + radius] * noise(r, wrap(c + i, cols));
      tmp(r, c) = static_cast<float>(s);
    }
  }
  Frame out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int i = -radius; i <= radius; ++i) s += kernel[i + radius] * tmp(wrap(r + i, rows), c);
      out(r, c) = static_cast<float>(s);
    }
  }
  rescale(out, 0.1f, 0.9f);
  return out;
}

Frame circular_shift(const Frame& frame, int dx, int dy) {
  const int rows = frame.rows();
  const int cols = frame.cols();
  Frame out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      out(r, c) = frame((((r - dy) % rows) + rows) % rows, (((c - dx) % cols) + cols) % cols);
    }
  }
  return out;
}

FrameSequence synthetic_video(const SceneConfig& config, std::uint64_t seed) {
  const int margin = static_cast<int>(std::ceil(std::max(std::abs(config.pan_x), std::abs(config.pan_y)) *
                                                std::max(config.frames, 1))) + 4;
  const Frame canvas = synthetic_texture(config.rows + 2 * margin, config.cols + 2 * margin, seed);
  const int object_size = static_cast<int>(std::ceil(2.0 * config.object_radius)) + 3;
  const Frame object_texture = synthetic_texture(object_size, object_size, splitmix64(seed));

  // Camera origin starts on the side of the canvas opposite to the pan.
  const double ox0 = config.pan_x >= 0.0 ? 2.0 : 2.0 * margin - 2.0;
  const double oy0 = config.pan_y >= 0.0 ? 2.0 : 2.0 * margin - 2.0;
  // Object starts near the frame centre, offset against its motion.
  const double bx0 = config.cols / 2.0 - config.object_vx * config.frames / 2.0;
  const double by0 = config.rows / 2.0 - config.object_vy * config.frames / 2.0;

  FrameSequence video;
  for (int t = 0; t < config.frames; ++t) {
    const double ox = ox0 + config.pan_x * t;
    const double oy = oy0 + config.pan_y * t;
    const double bx = bx0 + config.object_vx * t;
    const double by = by0 + config.object_vy * t;
    Frame f(config.rows, config.cols);
    for (int r = 0; r < config.rows; ++r) {
      for (int c = 0; c < config.cols; ++c) {
        double value = sample_bilinear(canvas, c + ox, r + oy);
        if (config.object_radius > 0.0) {
          const double dx = c - bx;
          const double dy = r - by;
          // Anti-aliased coverage of the disk edge.
          const double coverage = std::clamp(config.object_radius + 0.5 - std::hypot(dx, dy), 0.0, 1.0);
          if (coverage > 0.0) {
            const double inner = 1.0 - sample_bilinear(object_texture, dx + object_size / 2.0, dy + object_size / 2.0);
            value = (1.0 - coverage) * value + coverage * inner;
          }
        }
        f(r, c) = static_cast<float>(value);
      }
    }
    video.push_back(std::move(f));
  }
  return video;
}

}  // namespace f2f
