#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "f2f/image.hpp"

namespace f2f {

enum class NoiseKind { kAwgn, kMultiplicative, kCorrelated, kSaltPepper, kJpegAwgn };

std::string_view to_string(NoiseKind kind);
NoiseKind parse_noise_kind(std::string_view name);

// Corruption process. Standard deviations are on the [0,1] intensity scale.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::kAwgn;
  // awgn / correlated / jpeg_awgn: noise std; multiplicative: std of r.
  double sigma = 0.0;
  // salt_pepper replacement probability.
  double p = 0.0;
  // correlated: disk radius in pixels.
  double disk_radius = 2.0;
  // jpeg_awgn: IJG quality in [1, 100].
  int quality = 10;

  static NoiseSpec awgn(double sigma);
  static NoiseSpec multiplicative(double sigma_r);
  static NoiseSpec correlated(double sigma, double disk_radius = 2.0);
  static NoiseSpec salt_pepper(double p);
  static NoiseSpec jpeg_awgn(double sigma, int quality);

  void validate() const;
  // Compact text form, e.g. "awgn(sigma=25.00/255)".
  std::string describe() const;

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

struct NoiseSchedule {
  enum class Mode { kConstant, kLinearRamp, kSwitch };

  Mode mode = Mode::kConstant;
  NoiseSpec first;
  // Ramp end point or the spec after the switch.
  NoiseSpec second;
  int t_start = 0;
  int t_end = 0;
  int t_switch = 0;

  static NoiseSchedule constant(NoiseSpec spec);
  static NoiseSchedule linear_ramp(NoiseSpec start, NoiseSpec end, int t_start, int t_end);
  static NoiseSchedule switch_at(NoiseSpec before, NoiseSpec after, int t_switch);

  void validate() const;
};

// constant -> spec; ramp -> sigma interpolated on [t_start, t_end] and clamped
// outside; switch -> first for t < t_switch, else second.
NoiseSpec schedule_eval(const NoiseSchedule& schedule, int t);

// Parses the key=value schedule format (one pair per line or separated by
// whitespace, '#' starts a comment). Sigmas are given in 8-bit units.
//   mode=constant|ramp|switch
//   kind=awgn sigma=25 [p= radius= quality=]
//   to_kind=... to_sigma=... (ramp end / switch target)
//   t_start= t_end= (ramp)   at= (switch)
NoiseSchedule parse_noise_config(std::string_view text);

enum class StreamPurpose : std::uint64_t {
  kNoise = 1,
  kSaltPepper = 2,
  kPretrainCrops = 3,
  kPretrainNoise = 4,
  kShuffle = 5,
  kSynthetic = 6,
};

// Independent random streams keyed by (frame index, purpose).
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t master_seed) : master_(master_seed) {}

  std::uint64_t master_seed() const { return master_; }
  std::uint64_t derive(std::int64_t frame, StreamPurpose purpose) const;
  std::mt19937_64 stream(std::int64_t frame, StreamPurpose purpose) const {
    return std::mt19937_64(derive(frame, purpose));
  }

 private:
  std::uint64_t master_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Noisy version of u per spec. Only the JPEG path clips.
Frame apply_noise(const Frame& u, const NoiseSpec& spec, const SeededRng& rng, std::int64_t t);

// AWGN convolved with an L2-normalized disk of the given radius, scaled to
// marginal std sigma. A radius below 1 degenerates to a single pixel.
Image<float> correlated_noise(int rows, int cols, double sigma, double disk_radius, std::mt19937_64& rng);

// Disk offsets {dy, dx} with dy^2 + dx^2 <= radius^2.
std::vector<std::array<int, 2>> disk_offsets(double radius);

// Each pixel replaced by Uniform[0,1] with probability p.
Frame salt_pepper(const Frame& u, double p, std::mt19937_64& rng);

// IJG-scaled luminance quantization table for a quality in [1, 100].
std::array<int, 64> jpeg_quant_table(int quality);

// 8-bit quantization, 8x8 DCT quantization round trip, 8-bit output.
Frame jpeg_degrade(const Frame& u, int quality);

// Dequantized DCT coefficients of every 8x8 block (row-major blocks,
// coefficients in row-major frequency order).
std::vector<std::array<double, 64>> jpeg_dequantized_blocks(const Frame& u, int quality);

}  // namespace f2f
