#include "f2f/noise.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "f2f/error.hpp"

namespace f2f {

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kAwgn: return "awgn";
    case NoiseKind::kMultiplicative: return "multiplicative";
    case NoiseKind::kCorrelated: return "correlated";
    case NoiseKind::kSaltPepper: return "salt_pepper";
    case NoiseKind::kJpegAwgn: return "jpeg_awgn";
  }
  return "unknown";
}

NoiseKind parse_noise_kind(std::string_view name) {
  for (auto kind : {NoiseKind::kAwgn, NoiseKind::kMultiplicative, NoiseKind::kCorrelated, NoiseKind::kSaltPepper,
                    NoiseKind::kJpegAwgn}) {
    if (name == to_string(kind)) return kind;
  }
  throw Error(ErrorCode::kUnknownNoiseKind, "unknown noise kind '" + std::string(name) + "'");
}

NoiseSpec NoiseSpec::awgn(double sigma) { return {NoiseKind::kAwgn, sigma}; }

NoiseSpec NoiseSpec::multiplicative(double sigma_r) { return {NoiseKind::kMultiplicative, sigma_r}; }

NoiseSpec NoiseSpec::correlated(double sigma, double disk_radius) {
  NoiseSpec s{NoiseKind::kCorrelated, sigma};
  s.disk_radius = disk_radius;
  return s;
}

NoiseSpec NoiseSpec::salt_pepper(double p) {
  NoiseSpec s{NoiseKind::kSaltPepper};
  s.p = p;
  return s;
}

NoiseSpec NoiseSpec::jpeg_awgn(double sigma, int quality) {
  NoiseSpec s{NoiseKind::kJpegAwgn, sigma};
  s.quality = quality;
  return s;
}

void NoiseSpec::validate() const {
  auto fail = [this](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, std::string(to_string(kind)) + ": " + what);
  };
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail("sigma must be >= 0");
  if (!(p >= 0.0 && p <= 1.0)) fail("p must lie in [0,1]");
  if (kind == NoiseKind::kCorrelated && !(disk_radius > 0.0)) fail("disk radius must be positive");
  if (kind == NoiseKind::kJpegAwgn && (quality < 1 || quality > 100)) fail("quality must lie in [1,100]");
}

std::string NoiseSpec::describe() const {
  char buf[128];
  switch (kind) {
    case NoiseKind::kAwgn: std::snprintf(buf, sizeof buf, "awgn(sigma=%.2f/255)", sigma * 255.0); break;
    case NoiseKind::kMultiplicative:
      std::snprintf(buf, sizeof buf, "multiplicative(sigma_r=%.2f/255)", sigma * 255.0);
      break;
    case NoiseKind::kCorrelated:
      std::snprintf(buf, sizeof buf, "correlated(sigma=%.2f/255;radius=%g)", sigma * 255.0, disk_radius);
      break;
    case NoiseKind::kSaltPepper: std::snprintf(buf, sizeof buf, "salt_pepper(p=%.4f)", p); break;
    case NoiseKind::kJpegAwgn:
      std::snprintf(buf, sizeof buf, "jpeg_awgn(sigma=%.2f/255;quality=%d)", sigma * 255.0, quality);
      break;
  }
  return buf;
}

NoiseSchedule NoiseSchedule::constant(NoiseSpec spec) {
  NoiseSchedule s;
  s.first = s.second = spec;
  return s;
}

NoiseSchedule NoiseSchedule::linear_ramp(NoiseSpec start, NoiseSpec end, int t_start, int t_end) {
  NoiseSchedule s;
  s.mode = Mode::kLinearRamp;
  s.first = start;
  s.second = end;
  s.t_start = t_start;
  s.t_end = t_end;
  return s;
}

NoiseSchedule NoiseSchedule::switch_at(NoiseSpec before, NoiseSpec after, int t_switch) {
  NoiseSchedule s;
  s.mode = Mode::kSwitch;
  s.first = before;
  s.second = after;
  s.t_switch = t_switch;
  return s;
}

void NoiseSchedule::validate() const {
  first.validate();
  second.validate();
  if (mode == Mode::kLinearRamp) {
    if (first.kind != second.kind) {
      throw Error(ErrorCode::kInvalidArgument, "ramp endpoints must share the same noise kind");
    }
    if (t_end < t_start) throw Error(ErrorCode::kInvalidArgument, "ramp t_end must be >= t_start");
  }
}

NoiseSpec schedule_eval(const NoiseSchedule& schedule, int t) {
  switch (schedule.mode) {
    case NoiseSchedule::Mode::kConstant: return schedule.first;
    case NoiseSchedule::Mode::kSwitch: return t < schedule.t_switch ? schedule.first : schedule.second;
    case NoiseSchedule::Mode::kLinearRamp: {
      NoiseSpec spec = schedule.first;
      const double span = schedule.t_end - schedule.t_start;
      const double a = span <= 0.0 ? (t >= schedule.t_end ? 1.0 : 0.0)
                                   : std::clamp((t - schedule.t_start) / span, 0.0, 1.0);
      spec.sigma = (1.0 - a) * schedule.first.sigma + a * schedule.second.sigma;
      return spec;
    }
  }
  return schedule.first;
}

namespace {

double parse_number(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kInvalidArgument, "noise config: '" + key + "' expects a number, got '" + value + "'");
  }
  return out;
}

NoiseSpec spec_from(std::map<std::string, std::string>& kv, const std::string& prefix, const NoiseSpec* fallback) {
  NoiseSpec spec = fallback != nullptr ? *fallback : NoiseSpec{};
  auto take = [&](const std::string& key) -> const std::string* {
    auto it = kv.find(prefix + key);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (const auto* v = take("kind")) spec.kind = parse_noise_kind(*v);
  if (const auto* v = take("sigma")) spec.sigma = parse_number(prefix + "sigma", *v) / 255.0;
  if (const auto* v = take("p")) spec.p = parse_number(prefix + "p", *v);
  if (const auto* v = take("radius")) spec.disk_radius = parse_number(prefix + "radius", *v);
  if (const auto* v = take("quality")) spec.quality = static_cast<int>(parse_number(prefix + "quality", *v));
  return spec;
}

}  // namespace

NoiseSchedule parse_noise_config(std::string_view text) {
  static const std::vector<std::string> kKnown = {
      "mode",    "kind",       "sigma", "p",   "radius", "quality", "to_kind", "to_sigma",
      "to_p",    "to_radius",  "to_quality", "t_start", "t_end", "at"};
  std::map<std::string, std::string> kv;
  std::istringstream lines{std::string(text)};
  std::string line;
  while (std::getline(lines, line)) {
    line = line.substr(0, line.find('#'));
    std::istringstream tokens(line);
    std::string token;
    while (tokens >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw Error(ErrorCode::kInvalidArgument, "noise config: expected key=value, got '" + token + "'");
      }
      const std::string key = token.substr(0, eq);
      if (std::find(kKnown.begin(), kKnown.end(), key) == kKnown.end()) {
        throw Error(ErrorCode::kInvalidArgument, "noise config: unknown key '" + key + "'");
      }
      kv[key] = token.substr(eq + 1);
    }
  }

  const std::string mode = kv.contains("mode") ? kv["mode"] : "constant";
  const NoiseSpec first = spec_from(kv, "", nullptr);
  const NoiseSpec second = spec_from(kv, "to_", &first);
  NoiseSchedule schedule;
  if (mode == "constant") {
    schedule = NoiseSchedule::constant(first);
  } else if (mode == "ramp") {
    schedule = NoiseSchedule::linear_ramp(first, second,
                                          static_cast<int>(kv.contains("t_start") ? parse_number("t_start", kv["t_start"]) : 0),
                                          static_cast<int>(kv.contains("t_end") ? parse_number("t_end", kv["t_end"]) : 0));
  } else if (mode == "switch") {
    if (!kv.contains("at")) throw Error(ErrorCode::kInvalidArgument, "noise config: switch mode requires 'at'");
    schedule = NoiseSchedule::switch_at(first, second, static_cast<int>(parse_number("at", kv["at"])));
  } else {
    throw Error(ErrorCode::kInvalidArgument, "noise config: unknown mode '" + mode + "'");
  }
  schedule.validate();
  return schedule;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t SeededRng::derive(std::int64_t frame, StreamPurpose purpose) const {
  std::uint64_t h = splitmix64(master_);
  h = splitmix64(h ^ static_cast<std::uint64_t>(frame));
  return splitmix64(h ^ (static_cast<std::uint64_t>(purpose) * 0xd1b54a32d192ed03ull));
}

std::vector<std::array<int, 2>> disk_offsets(double radius) {
  const int r = std::max(0, static_cast<int>(std::floor(radius)));
  std::vector<std::array<int, 2>> out;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dy * dy + dx * dx <= radius * radius || (dy == 0 && dx == 0)) out.push_back({dy, dx});
    }
  }
  return out;
}

Image<float> correlated_noise(int rows, int cols, double sigma, double disk_radius, std::mt19937_64& rng) {
  const auto disk = disk_offsets(disk_radius);
  const int r = std::max(0, static_cast<int>(std::floor(disk_radius)));
  const int prow = rows + 2 * r;
  const int pcol = cols + 2 * r;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> white(static_cast<std::size_t>(prow) * pcol);
  for (auto& w : white) w = normal(rng);

  const double weight = sigma / std::sqrt(static_cast<double>(disk.size()));
  Image<float> out(rows, cols);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      double s = 0.0;
      for (const auto& [dy, dx] : disk) s += white[static_cast<std::size_t>(y + r + dy) * pcol + (x + r + dx)];
      out(y, x) = static_cast<float>(weight * s);
    }
  }
  return out;
}

Frame salt_pepper(const Frame& u, double p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Frame out = u;
  for (auto& x : out.pixels()) {
    if (uniform(rng) < p) x = static_cast<float>(uniform(rng));
  }
  return out;
}

Frame apply_noise(const Frame& u, const NoiseSpec& spec, const SeededRng& rng, std::int64_t t) {
  spec.validate();
  Frame out = u;
  switch (spec.kind) {
    case NoiseKind::kAwgn:
    case NoiseKind::kJpegAwgn: {
      if (spec.sigma > 0.0) {
        auto gen = rng.stream(t, StreamPurpose::kNoise);
        std::normal_distribution<double> normal(0.0, spec.sigma);
        for (auto& x : out.pixels()) x = static_cast<float>(x + normal(gen));
      }
      if (spec.kind == NoiseKind::kJpegAwgn) out = jpeg_degrade(out, spec.quality);
      break;
    }
    case NoiseKind::kMultiplicative: {
      if (spec.sigma > 0.0) {
        auto gen = rng.stream(t, StreamPurpose::kNoise);
        std::normal_distribution<double> normal(0.0, spec.sigma);
        for (auto& x : out.pixels()) x = static_cast<float>(x + normal(gen) * x);
      }
      break;
    }
    case NoiseKind::kCorrelated: {
      auto gen = rng.stream(t, StreamPurpose::kNoise);
      const auto noise = correlated_noise(u.rows(), u.cols(), spec.sigma, spec.disk_radius, gen);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += noise[i];
      break;
    }
    case NoiseKind::kSaltPepper: {
      auto gen = rng.stream(t, StreamPurpose::kSaltPepper);
      out = salt_pepper(u, spec.p, gen);
      break;
    }
  }
  return out;
}

}  // namespace f2f
