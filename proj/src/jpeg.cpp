#include <algorithm>
#include <cmath>
#include <numbers>

#include "f2f/error.hpp"
#include "f2f/noise.hpp"

namespace f2f {
namespace {

// Annex K luminance table, row-major frequency order.
constexpr std::array<int, 64> kLuminance = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99,
};

using Block = std::array<double, 64>;

struct DctBasis {
  // basis[u][x] = c(u)/2 * cos((2x+1) u pi / 16), orthonormal.
  std::array<std::array<double, 8>, 8> basis{};

  DctBasis() {
    for (int u = 0; u < 8; ++u) {
      const double c = u == 0 ? std::sqrt(0.125) : 0.5;
      for (int x = 0; x < 8; ++x) basis[u][x] = c * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
    }
  }

  Block forward(const Block& f) const {
    Block tmp{};
    Block out{};
    for (int y = 0; y < 8; ++y) {
      for (int v = 0; v < 8; ++v) {
        double s = 0.0;
        for (int x = 0; x < 8; ++x) s += basis[v][x] * f[y * 8 + x];
        tmp[y * 8 + v] = s;
      }
    }
    for (int u = 0; u < 8; ++u) {
      for (int v = 0; v < 8; ++v) {
        double s = 0.0;
        for (int y = 0; y < 8; ++y) s += basis[u][y] * tmp[y * 8 + v];
        out[u * 8 + v] = s;
      }
    }
    return out;
  }

  Block inverse(const Block& coef) const {
    Block tmp{};
    Block out{};
    for (int u = 0; u < 8; ++u) {
      for (int x = 0; x < 8; ++x) {
        double s = 0.0;
        for (int v = 0; v < 8; ++v) s += basis[v][x] * coef[u * 8 + v];
        tmp[u * 8 + x] = s;
      }
    }
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        double s = 0.0;
        for (int u = 0; u < 8; ++u) s += basis[u][y] * tmp[u * 8 + x];
        out[y * 8 + x] = s;
      }
    }
    return out;
  }
};

const DctBasis& dct() {
  static const DctBasis basis;
  return basis;
}

void check_quality(int quality) {
  if (quality < 1 || quality > 100) {
    throw Error(ErrorCode::kInvalidArgument, "jpeg quality must lie in [1,100], got " + std::to_string(quality));
  }
}

// Level-shifted 8-bit samples of the block at (by, bx), edges replicated.
Block load_block(const Frame& u, int by, int bx) {
  Block b{};
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      const int r = std::min(by * 8 + y, u.rows() - 1);
      const int c = std::min(bx * 8 + x, u.cols() - 1);
      const double clipped = std::clamp(static_cast<double>(u(r, c)), 0.0, 1.0);
      b[y * 8 + x] = std::round(clipped * 255.0) - 128.0;
    }
  }
  return b;
}

Block quantize_round_trip(const Block& samples, const std::array<int, 64>& table) {
  Block coef = dct().forward(samples);
  for (int i = 0; i < 64; ++i) coef[i] = std::round(coef[i] / table[i]) * table[i];
  return coef;
}

}  // namespace

std::array<int, 64> jpeg_quant_table(int quality) {
  check_quality(quality);
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<int, 64> table{};
  for (int i = 0; i < 64; ++i) table[i] = std::clamp((kLuminance[i] * scale + 50) / 100, 1, 255);
  return table;
}

std::vector<std::array<double, 64>> jpeg_dequantized_blocks(const Frame& u, int quality) {
  const auto table = jpeg_quant_table(quality);
  const int brows = (u.rows() + 7) / 8;
  const int bcols = (u.cols() + 7) / 8;
  std::vector<Block> out;
  out.reserve(static_cast<std::size_t>(brows) * bcols);
  for (int by = 0; by < brows; ++by) {
    for (int bx = 0; bx < bcols; ++bx) out.push_back(quantize_round_trip(load_block(u, by, bx), table));
  }
  return out;
}

Frame jpeg_degrade(const Frame& u, int quality) {
  const auto table = jpeg_quant_table(quality);
  Frame out(u.rows(), u.cols());
  const int brows = (u.rows() + 7) / 8;
  const int bcols = (u.cols() + 7) / 8;
  for (int by = 0; by < brows; ++by) {
    for (int bx = 0; bx < bcols; ++bx) {
      const Block pixels = dct().inverse(quantize_round_trip(load_block(u, by, bx), table));
      for (int y = 0; y < 8 && by * 8 + y < u.rows(); ++y) {
        for (int x = 0; x < 8 && bx * 8 + x < u.cols(); ++x) {
          const double v = std::clamp(std::round(pixels[y * 8 + x] + 128.0), 0.0, 255.0);
          out(by * 8 + y, bx * 8 + x) = static_cast<float>(v / 255.0);
        }
      }
    }
  }
  return out;
}

}  // namespace f2f
