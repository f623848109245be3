#include "f2f/image_ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "f2f/error.hpp"

namespace f2f {

float sample_bilinear(const Frame& image, double x, double y) {
  const int rows = image.rows();
  const int cols = image.cols();
  x = std::clamp(x, 0.0, static_cast<double>(cols - 1));
  y = std::clamp(y, 0.0, static_cast<double>(rows - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, cols - 1);
  const int y1 = std::min(y0 + 1, rows - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1.0 - fx) * image(y0, x0) + fx * image(y0, x1);
  const double bottom = (1.0 - fx) * image(y1, x0) + fx * image(y1, x1);
  return static_cast<float>((1.0 - fy) * top + fy * bottom);
}

namespace {

int mirror(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
  }
  return i;
}

}  // namespace

Frame gaussian_blur(const Frame& image, double sigma) {
  if (sigma <= 0.0 || image.empty()) return image;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    norm += kernel[i + radius];
  }
  for (auto& k : kernel) k /= norm;

  const int rows = image.rows();
  const int cols = image.cols();
  Frame tmp(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int i = -radius; i <= radius; ++i) s += kernel[i + radius] * image(r, mirror(c + i, cols));
      tmp(r, c) = static_cast<float>(s);
    }
  }
  Frame out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int i = -radius; i <= radius; ++i) s += kernel[i + radius] * tmp(mirror(r + i, rows), c);
      out(r, c) = static_cast<float>(s);
    }
  }
  return out;
}

Frame box_downscale(const Frame& image, int factor) {
  if (factor < 1) throw Error(ErrorCode::kInvalidArgument, "box_downscale: factor must be >= 1");
  if (factor == 1) return image;
  const int rows = image.rows() / factor;
  const int cols = image.cols() / factor;
  Frame out(rows, cols);
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int i = 0; i < factor; ++i) {
        for (int j = 0; j < factor; ++j) s += image(r * factor + i, c * factor + j);
      }
      out(r, c) = static_cast<float>(s * inv);
    }
  }
  return out;
}

Frame resize_bilinear(const Frame& image, int rows, int cols) {
  if (image.same_dims(rows, cols)) return image;
  Frame out(rows, cols);
  const double sy = static_cast<double>(image.rows()) / rows;
  const double sx = static_cast<double>(image.cols()) / cols;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out(r, c) = sample_bilinear(image, (c + 0.5) * sx - 0.5, (r + 0.5) * sy - 0.5);
  }
  return out;
}

Frame median3x3(const Frame& image) {
  const int rows = image.rows();
  const int cols = image.cols();
  Frame out(rows, cols);
  std::array<float, 9> window{};
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      int k = 0;
      for (int i = -1; i <= 1; ++i) {
        for (int j = -1; j <= 1; ++j) {
          window[k++] = image(std::clamp(r + i, 0, rows - 1), std::clamp(c + j, 0, cols - 1));
        }
      }
      std::nth_element(window.begin(), window.begin() + 4, window.end());
      out(r, c) = window[4];
    }
  }
  return out;
}

}  // namespace f2f
