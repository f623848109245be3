#include "f2f/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "f2f/error.hpp"
#include "f2f/parallel.hpp"

namespace f2f {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using StridedMap = Eigen::Map<RowMatrix<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstStridedMap = Eigen::Map<const RowMatrix<T>, 0, Eigen::OuterStride<>>;

// Image rows are processed in chunks whose size depends only on the image
// width, so per-chunk partial sums (and hence results) do not depend on the
// number of worker threads.
int chunk_rows(int rows, int cols) { return std::clamp(4096 / std::max(cols, 1), 1, std::max(rows, 1)); }

struct ConvGeometry {
  int batch, in_channels, rows, cols, out_channels, kernel, padding;

  int chunk() const { return chunk_rows(rows, cols); }
  int chunks() const { return (rows + chunk() - 1) / chunk(); }
  int patch() const { return in_channels * kernel * kernel; }
};

template <typename T>
void im2col(const T* image, const ConvGeometry& g, int r0, int r1, AlignedVector<T>& col) {
  const int width = g.cols;
  const int span = (r1 - r0) * width;
  col.resize(static_cast<std::size_t>(g.patch()) * span);
  for (int ci = 0; ci < g.in_channels; ++ci) {
    const T* plane = image + static_cast<std::size_t>(ci) * g.rows * width;
    for (int ki = 0; ki < g.kernel; ++ki) {
      for (int kj = 0; kj < g.kernel; ++kj) {
        T* dst = col.data() + static_cast<std::size_t>((ci * g.kernel + ki) * g.kernel + kj) * span;
        const int dc = kj - g.padding;
        const int c_lo = std::max(0, -dc);
        const int c_hi = std::max(c_lo, std::min(width, width - dc));
        for (int r = r0; r < r1; ++r) {
          const int sr = r + ki - g.padding;
          T* out = dst + static_cast<std::size_t>(r - r0) * width;
          if (sr < 0 || sr >= g.rows) {
            std::fill(out, out + width, T{0});
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(sr) * width;
          std::fill(out, out + c_lo, T{0});
          std::copy(src + c_lo + dc, src + c_hi + dc, out + c_lo);
          std::fill(out + c_hi, out + width, T{0});
        }
      }
    }
  }
}

// out = conv(input, weights) + bias for every image in the batch.
template <typename T>
void conv_forward(const T* input, const T* weights, const T* bias, T* out, const ConvGeometry& g) {
  const std::size_t plane = static_cast<std::size_t>(g.rows) * g.cols;
  const int chunks = g.chunks();
  const ConstStridedMap<T> w(weights, g.out_channels, g.patch(), Eigen::OuterStride<>(g.patch()));
  parallel_for(static_cast<std::size_t>(g.batch) * chunks, [&](std::size_t item) {
    const int n = static_cast<int>(item / chunks);
    const int r0 = static_cast<int>(item % chunks) * g.chunk();
    const int r1 = std::min(g.rows, r0 + g.chunk());
    const int span = (r1 - r0) * g.cols;
    thread_local AlignedVector<T> col;
    im2col(input + static_cast<std::size_t>(n) * g.in_channels * plane, g, r0, r1, col);
    const ConstStridedMap<T> patches(col.data(), g.patch(), span, Eigen::OuterStride<>(span));
    StridedMap<T> result(out + static_cast<std::size_t>(n) * g.out_channels * plane + static_cast<std::size_t>(r0) * g.cols,
                         g.out_channels, span, Eigen::OuterStride<>(static_cast<Eigen::Index>(plane)));
    result.noalias() = w * patches;
    if (bias != nullptr) {
      for (int co = 0; co < g.out_channels; ++co) result.row(co).array() += bias[co];
    }
  });
}

template <typename T>
Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>> channel_plane(BasicTensor4<T>& t, int n, int c) {
  return {t.data() + t.offset(n, c, 0, 0), static_cast<Eigen::Index>(t.rows()) * t.cols()};
}

template <typename T>
Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>> channel_plane(const BasicTensor4<T>& t, int n, int c) {
  return {t.data() + t.offset(n, c, 0, 0), static_cast<Eigen::Index>(t.rows()) * t.cols()};
}

template <typename T>
void check_same_shape(const BasicTensor4<T>& a, const BasicTensor4<T>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(what) + ": shape " + shape_string<T>(a.shape()) + " vs " + shape_string<T>(b.shape()));
  }
}

template <typename T>
BasicVar<T> make_output(BasicTape<T>& tape, typename BasicTensor4<T>::Shape shape, bool requires_grad) {
  auto out = tape.leaf(BasicTensor4<T>(shape));
  out->requires_grad = requires_grad && tape.recording();
  return out;
}

template <typename T>
void check_mask_shape(const BasicTensor4<T>& pred, const BasicTensor4<T>& mask, const char* what) {
  const auto& p = pred.shape();
  const auto& m = mask.shape();
  if (m[0] != p[0] || m[2] != p[2] || m[3] != p[3] || (m[1] != 1 && m[1] != p[1])) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(what) + ": mask " + shape_string<T>(m) + " does not cover " + shape_string<T>(p));
  }
}

template <typename T>
std::size_t mask_index(const BasicTensor4<T>& mask, int n, int c, std::size_t spatial) {
  const int mc = mask.channels() == 1 ? 0 : c;
  return (static_cast<std::size_t>(n) * mask.channels() + mc) * mask.rows() * mask.cols() + spatial;
}

enum class LossKind { kL1, kL2 };

template <typename T>
BasicVar<T> masked_loss(BasicTape<T>& tape, const BasicVar<T>& prediction, const BasicTensor4<T>& target,
                        const BasicTensor4<T>& mask, LossKind kind, const char* what) {
  const auto& pred = prediction->value;
  check_same_shape(pred, target, what);
  check_mask_shape(pred, mask, what);

  const int batch = pred.batch();
  const int channels = pred.channels();
  const std::size_t plane = static_cast<std::size_t>(pred.rows()) * pred.cols();
  double weight = 0.0;
  double total = 0.0;
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < channels; ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double k = mask[mask_index(mask, n, c, i)];
        if (k == 0.0) continue;
        const double d = static_cast<double>(pred[base + i]) - static_cast<double>(target[base + i]);
        total += k * (kind == LossKind::kL1 ? std::abs(d) : d * d);
        weight += k;
      }
    }
  }
  const double count = std::max(1.0, weight);

  auto out = make_output(tape, {1, 1, 1, 1}, prediction->requires_grad);
  out->value[0] = static_cast<T>(total / count);
  if (!out->requires_grad) return out;

  tape.record([prediction, out, target, mask, kind, count, batch, channels, plane] {
    if (out->grad.empty()) return;
    const double upstream = out->grad[0];
    auto& grad = prediction->ensure_grad();
    const auto& pred = prediction->value;
    for (int n = 0; n < batch; ++n) {
      for (int c = 0; c < channels; ++c) {
        const std::size_t base = (static_cast<std::size_t>(n) * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double k = mask[mask_index(mask, n, c, i)];
          if (k == 0.0) continue;
          const double d = static_cast<double>(pred[base + i]) - static_cast<double>(target[base + i]);
          const double g = kind == LossKind::kL1 ? (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) : 2.0 * d;
          grad[base + i] += static_cast<T>(upstream * k * g / count);
        }
      }
    }
  });
  return out;
}

}  // namespace

template <typename T>
void BasicTape<T>::backward(const BasicVar<T>& loss) {
  if (loss->value.size() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "backward: loss must be a single element, got " +
                                               shape_string<T>(loss->value.shape()));
  }
  loss->ensure_grad()[0] = T{1};
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
  steps_.clear();
}

template <typename T>
BasicVar<T> conv2d(BasicTape<T>& tape, const BasicVar<T>& input, BasicParameter<T>& weights,
                   BasicParameter<T>& bias, int padding) {
  const auto& x = input->value;
  const auto& ws = weights.value.shape();
  if (ws[2] != ws[3] || ws[2] % 2 == 0) {
    throw Error(ErrorCode::kShapeMismatch, "conv2d: kernel must be square with odd size, got " + shape_string<T>(ws));
  }
  if (padding != (ws[2] - 1) / 2) {
    throw Error(ErrorCode::kInvalidArgument, "conv2d: padding " + std::to_string(padding) +
                                                 " does not preserve size for kernel " + std::to_string(ws[2]));
  }
  if (x.channels() != ws[1]) {
    throw Error(ErrorCode::kShapeMismatch, "conv2d: input " + shape_string<T>(x.shape()) + " has " +
                                               std::to_string(x.channels()) + " channels, weights " +
                                               shape_string<T>(ws) + " expect " + std::to_string(ws[1]));
  }
  if (bias.value.size() != static_cast<std::size_t>(ws[0])) {
    throw Error(ErrorCode::kShapeMismatch, "conv2d: bias " + shape_string<T>(bias.value.shape()) +
                                               " does not match " + std::to_string(ws[0]) + " output channels");
  }

  const ConvGeometry g{x.batch(), ws[1], x.rows(), x.cols(), ws[0], ws[2], padding};
  auto out = make_output(tape, {g.batch, g.out_channels, g.rows, g.cols},
                         input->requires_grad || weights.trainable || bias.trainable);
  conv_forward(x.data(), weights.value.data(), bias.value.data(), out->value.data(), g);
  if (!out->requires_grad) return out;

  tape.record([input, out, w = &weights, b = &bias, g] {
    if (out->grad.empty()) return;
    const auto& gout = out->grad;
    const std::size_t plane = static_cast<std::size_t>(g.rows) * g.cols;
    const int chunks = g.chunks();

    if (w->trainable || b->trainable) {
      const std::size_t items = static_cast<std::size_t>(g.batch) * chunks;
      std::vector<RowMatrix<T>> dw(items);
      std::vector<Eigen::Matrix<T, Eigen::Dynamic, 1>> db(items);
      parallel_for(items, [&](std::size_t item) {
        const int n = static_cast<int>(item / chunks);
        const int r0 = static_cast<int>(item % chunks) * g.chunk();
        const int r1 = std::min(g.rows, r0 + g.chunk());
        const int span = (r1 - r0) * g.cols;
        const ConstStridedMap<T> go(gout.data() + static_cast<std::size_t>(n) * g.out_channels * plane +
                                        static_cast<std::size_t>(r0) * g.cols,
                                    g.out_channels, span, Eigen::OuterStride<>(static_cast<Eigen::Index>(plane)));
        db[item] = go.rowwise().sum();
        if (w->trainable) {
          thread_local AlignedVector<T> col;
          im2col(input->value.data() + static_cast<std::size_t>(n) * g.in_channels * plane, g, r0, r1, col);
          const ConstStridedMap<T> patches(col.data(), g.patch(), span, Eigen::OuterStride<>(span));
          dw[item].noalias() = go * patches.transpose();
        }
      });
      StridedMap<T> wgrad(w->grad.data(), g.out_channels, g.patch(), Eigen::OuterStride<>(g.patch()));
      for (std::size_t item = 0; item < items; ++item) {
        if (w->trainable) wgrad += dw[item];
        if (b->trainable) {
          for (int co = 0; co < g.out_channels; ++co) b->grad[co] += db[item](co);
        }
      }
    }

    if (input->requires_grad) {
      // Input gradient of a same-size stride-1 convolution is the convolution
      // of the output gradient with the spatially flipped, channel-transposed
      // kernel.
      const int k = g.kernel;
      AlignedVector<T> flipped(static_cast<std::size_t>(g.in_channels) * g.out_channels * k * k);
      for (int co = 0; co < g.out_channels; ++co) {
        for (int ci = 0; ci < g.in_channels; ++ci) {
          for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) {
              flipped[((static_cast<std::size_t>(ci) * g.out_channels + co) * k + (k - 1 - i)) * k + (k - 1 - j)] =
                  w->value(co, ci, i, j);
            }
          }
        }
      }
      const ConvGeometry back{g.batch, g.out_channels, g.rows, g.cols, g.in_channels, k, g.padding};
      BasicTensor4<T> dx(input->value.shape());
      conv_forward<T>(gout.data(), flipped.data(), nullptr, dx.data(), back);
      auto& gin = input->ensure_grad();
      for (std::size_t i = 0; i < dx.size(); ++i) gin[i] += dx[i];
    }
  });
  return out;
}

template <typename T>
BasicVar<T> relu(BasicTape<T>& tape, const BasicVar<T>& input) {
  auto out = make_output(tape, input->value.shape(), input->requires_grad);
  const auto& x = input->value;
  for (std::size_t i = 0; i < x.size(); ++i) out->value[i] = x[i] > T{0} ? x[i] : T{0};
  if (!out->requires_grad) return out;

  tape.record([input, out] {
    if (out->grad.empty()) return;
    auto& gin = input->ensure_grad();
    const auto& x = input->value;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] > T{0}) gin[i] += out->grad[i];
    }
  });
  return out;
}

template <typename T>
BasicVar<T> batch_norm(BasicTape<T>& tape, const BasicVar<T>& input, BasicParameter<T>& gamma,
                       BasicParameter<T>& beta, RunningStats<T>& stats, NormMode mode,
                       const BatchNormOptions& options) {
  const auto& x = input->value;
  const int batch = x.batch();
  const int channels = x.channels();
  const std::size_t plane = static_cast<std::size_t>(x.rows()) * x.cols();
  if (gamma.value.size() != static_cast<std::size_t>(channels) ||
      beta.value.size() != static_cast<std::size_t>(channels) || stats.mean.size() != static_cast<std::size_t>(channels) ||
      stats.var.size() != static_cast<std::size_t>(channels)) {
    throw Error(ErrorCode::kShapeMismatch,
                "batch_norm: parameters do not match " + std::to_string(channels) + " channels");
  }
  const std::size_t count = static_cast<std::size_t>(batch) * plane;

  std::vector<T> mean(channels);
  std::vector<T> inv_std(channels);
  if (mode == NormMode::kTrain) {
    parallel_for(static_cast<std::size_t>(channels), [&](std::size_t c) {
      double s = 0.0;
      for (int n = 0; n < batch; ++n) s += channel_plane(x, n, static_cast<int>(c)).template cast<double>().sum();
      const double mu = s / static_cast<double>(count);
      double ss = 0.0;
      for (int n = 0; n < batch; ++n) {
        ss += (channel_plane(x, n, static_cast<int>(c)).template cast<double>() - mu).square().sum();
      }
      const double var = ss / static_cast<double>(count);
      mean[c] = static_cast<T>(mu);
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + options.eps));
      if (options.update_stats) {
        const double unbiased = count > 1 ? ss / static_cast<double>(count - 1) : var;
        stats.mean[c] = static_cast<T>((1.0 - options.momentum) * stats.mean[c] + options.momentum * mu);
        stats.var[c] = static_cast<T>((1.0 - options.momentum) * stats.var[c] + options.momentum * unbiased);
      }
    });
  } else {
    for (int c = 0; c < channels; ++c) {
      mean[c] = stats.mean[c];
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(stats.var[c]) + options.eps));
    }
  }

  auto out = make_output(tape, x.shape(), input->requires_grad || gamma.trainable || beta.trainable);
  // Normalized input, kept for the backward pass.
  auto xhat = std::make_shared<BasicTensor4<T>>(x.shape());
  parallel_for(static_cast<std::size_t>(channels), [&](std::size_t cs) {
    const int c = static_cast<int>(cs);
    for (int n = 0; n < batch; ++n) {
      const std::size_t base = x.offset(n, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) {
        const T h = (x[base + i] - mean[c]) * inv_std[c];
        (*xhat)[base + i] = h;
        out->value[base + i] = gamma.value[c] * h + beta.value[c];
      }
    }
  });
  if (!out->requires_grad) return out;

  tape.record([input, out, xhat, g = &gamma, b = &beta, inv_std, mode, batch, channels, plane, count] {
    if (out->grad.empty()) return;
    const auto& dy = out->grad;
    std::vector<double> sum_dy(channels, 0.0);
    std::vector<double> sum_dy_xhat(channels, 0.0);
    for (int c = 0; c < channels; ++c) {
      for (int n = 0; n < batch; ++n) {
        const auto d = channel_plane(dy, n, c).template cast<double>();
        sum_dy[c] += d.sum();
        sum_dy_xhat[c] += (d * channel_plane(*xhat, n, c).template cast<double>()).sum();
      }
    }
    for (int c = 0; c < channels; ++c) {
      if (g->trainable) g->grad[c] += static_cast<T>(sum_dy_xhat[c]);
      if (b->trainable) b->grad[c] += static_cast<T>(sum_dy[c]);
    }
    if (!input->requires_grad) return;
    auto& dx = input->ensure_grad();
    const double m = static_cast<double>(count);
    for (int c = 0; c < channels; ++c) {
      const double scale = static_cast<double>(g->value[c]) * inv_std[c];
      for (int n = 0; n < batch; ++n) {
        auto gin = channel_plane(dx, n, c);
        const auto d = channel_plane(dy, n, c).template cast<double>();
        if (mode == NormMode::kTrain) {
          const auto h = channel_plane(*xhat, n, c).template cast<double>();
          gin += (scale * (d - sum_dy[c] / m - h * (sum_dy_xhat[c] / m))).template cast<T>();
        } else {
          gin += (scale * d).template cast<T>();
        }
      }
    }
  });
  return out;
}

template <typename T>
BasicVar<T> subtract(BasicTape<T>& tape, const BasicVar<T>& a, const BasicVar<T>& b) {
  check_same_shape(a->value, b->value, "subtract");
  auto out = make_output(tape, a->value.shape(), a->requires_grad || b->requires_grad);
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = a->value[i] - b->value[i];
  if (!out->requires_grad) return out;

  tape.record([a, b, out] {
    if (out->grad.empty()) return;
    if (a->requires_grad) {
      auto& ga = a->ensure_grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += out->grad[i];
    }
    if (b->requires_grad) {
      auto& gb = b->ensure_grad();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= out->grad[i];
    }
  });
  return out;
}

template <typename T>
BasicVar<T> sum(BasicTape<T>& tape, const BasicVar<T>& input) {
  auto out = make_output(tape, {1, 1, 1, 1}, input->requires_grad);
  double s = 0.0;
  for (T v : input->value.values()) s += v;
  out->value[0] = static_cast<T>(s);
  if (!out->requires_grad) return out;

  tape.record([input, out] {
    if (out->grad.empty()) return;
    auto& g = input->ensure_grad();
    for (auto& v : g.values()) v += out->grad[0];
  });
  return out;
}

template <typename T>
BasicVar<T> masked_l1_loss(BasicTape<T>& tape, const BasicVar<T>& prediction, const BasicTensor4<T>& target,
                           const BasicTensor4<T>& mask) {
  return masked_loss(tape, prediction, target, mask, LossKind::kL1, "masked_l1_loss");
}

template <typename T>
BasicVar<T> l2_loss(BasicTape<T>& tape, const BasicVar<T>& prediction, const BasicTensor4<T>& target,
                    const BasicTensor4<T>& mask) {
  return masked_loss(tape, prediction, target, mask, LossKind::kL2, "l2_loss");
}

#define F2F_INSTANTIATE(T)                                                                                     \
  template class BasicTape<T>;                                                                                 \
  template BasicVar<T> conv2d(BasicTape<T>&, const BasicVar<T>&, BasicParameter<T>&, BasicParameter<T>&, int); \
  template BasicVar<T> relu(BasicTape<T>&, const BasicVar<T>&);                                                \
  template BasicVar<T> batch_norm(BasicTape<T>&, const BasicVar<T>&, BasicParameter<T>&, BasicParameter<T>&,   \
                                  RunningStats<T>&, NormMode, const BatchNormOptions&);                        \
  template BasicVar<T> subtract(BasicTape<T>&, const BasicVar<T>&, const BasicVar<T>&);                        \
  template BasicVar<T> sum(BasicTape<T>&, const BasicVar<T>&);                                                 \
  template BasicVar<T> masked_l1_loss(BasicTape<T>&, const BasicVar<T>&, const BasicTensor4<T>&,               \
                                      const BasicTensor4<T>&);                                                 \
  template BasicVar<T> l2_loss(BasicTape<T>&, const BasicVar<T>&, const BasicTensor4<T>&, const BasicTensor4<T>&);

F2F_INSTANTIATE(float)
F2F_INSTANTIATE(double)

#undef F2F_INSTANTIATE

}  // namespace f2f
