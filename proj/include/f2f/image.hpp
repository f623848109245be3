#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace f2f {

// Row-major single-channel raster.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int rows, int cols, T fill = T{}) : rows_(rows), cols_(cols), px_(static_cast<std::size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return px_.size(); }
  bool empty() const { return px_.empty(); }

  T& operator()(int r, int c) { return px_[static_cast<std::size_t>(r) * cols_ + c]; }
  const T& operator()(int r, int c) const { return px_[static_cast<std::size_t>(r) * cols_ + c]; }
  T& operator[](std::size_t i) { return px_[i]; }
  const T& operator[](std::size_t i) const { return px_[i]; }

  T* data() { return px_.data(); }
  const T* data() const { return px_.data(); }
  std::vector<T>& pixels() { return px_; }
  const std::vector<T>& pixels() const { return px_; }

  bool same_dims(int rows, int cols) const { return rows_ == rows && cols_ == cols; }
  template <typename U>
  bool same_dims(const Image<U>& other) const {
    return rows_ == other.rows() && cols_ == other.cols();
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> px_;
};

// Grayscale intensity image, nominally in [0,1].
using Frame = Image<float>;
// Binary per-pixel field, values in {0,1}.
using Mask = Image<std::uint8_t>;
using OcclusionMask = Mask;
using FrameSequence = std::vector<Frame>;

// Displacement in pixels: u along columns (x), v along rows (y).
struct FlowField {
  Image<float> u;
  Image<float> v;

  FlowField() = default;
  FlowField(int rows, int cols, float u0 = 0.0f, float v0 = 0.0f) : u(rows, cols, u0), v(rows, cols, v0) {}

  int rows() const { return u.rows(); }
  int cols() const { return u.cols(); }
};

}  // namespace f2f
