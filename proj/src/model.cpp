#include "f2f/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "f2f/error.hpp"

namespace f2f {

void ModelConfig::validate() const {
  if (depth < 3) throw Error(ErrorCode::kInvalidArgument, "model depth must be >= 3, got " + std::to_string(depth));
  if (width < 1) throw Error(ErrorCode::kInvalidArgument, "model width must be >= 1, got " + std::to_string(width));
  if (kernel < 1 || kernel % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "model kernel must be odd, got " + std::to_string(kernel));
  }
}

std::vector<Parameter*> ModelParams::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
    if (layer.has_norm) {
      out.push_back(&layer.gamma);
      out.push_back(&layer.beta);
    }
  }
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) {
    n += layer.weight.value.size() + layer.bias.value.size();
    if (layer.has_norm) n += layer.gamma.value.size() + layer.beta.value.size();
  }
  return n;
}

namespace {

ConvLayer make_layer(int in, int out, int kernel, bool norm) {
  ConvLayer layer;
  layer.weight = Parameter(Tensor4({out, in, kernel, kernel}));
  layer.bias = Parameter(Tensor4({1, out, 1, 1}));
  layer.has_norm = norm;
  if (norm) {
    layer.gamma = Parameter(Tensor4({1, out, 1, 1}, 1.0f));
    layer.beta = Parameter(Tensor4({1, out, 1, 1}));
    layer.stats = RunningStats<float>(out);
  }
  return layer;
}

ModelParams empty_params(const ModelConfig& config) {
  config.validate();
  ModelParams params;
  params.config = config;
  for (int l = 0; l < config.depth; ++l) {
    const bool first = l == 0;
    const bool last = l == config.depth - 1;
    const int in = first ? 1 : config.width;
    const int out = last ? 1 : config.width;
    params.layers.push_back(make_layer(in, out, config.kernel, config.use_norm && !first && !last));
  }
  return params;
}

}  // namespace

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams params = empty_params(config);
  std::mt19937_64 rng(seed);
  for (auto& layer : params.layers) {
    const auto& s = layer.weight.value.shape();
    const double fan_in = static_cast<double>(s[1]) * s[2] * s[3];
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
    for (auto& w : layer.weight.value.values()) w = static_cast<float>(normal(rng));
  }
  return params;
}

Var forward_network(Tape& tape, ModelParams& params, const Var& input, NormMode mode, bool update_stats) {
  if (input->value.channels() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "model expects single-channel input, got " +
                                               shape_string<float>(input->value.shape()));
  }
  if (!input->value.all_finite()) throw Error(ErrorCode::kNonFinite, "model input contains non-finite values");

  const int pad = (params.config.kernel - 1) / 2;
  BatchNormOptions bn;
  bn.update_stats = update_stats;
  Var x = input;
  const std::size_t n = params.layers.size();
  for (std::size_t l = 0; l < n; ++l) {
    auto& layer = params.layers[l];
    x = conv2d(tape, x, layer.weight, layer.bias, pad);
    if (layer.has_norm) x = batch_norm(tape, x, layer.gamma, layer.beta, layer.stats, mode, bn);
    if (l + 1 < n) x = relu(tape, x);
  }
  return x;
}

Var denoise_graph(Tape& tape, ModelParams& params, const Var& input, NormMode mode, bool update_stats) {
  Var out = forward_network(tape, params, input, mode, update_stats);
  return params.config.residual ? subtract(tape, input, out) : out;
}

Tensor4 to_tensor(const Frame& frame) {
  Tensor4 t({1, 1, frame.rows(), frame.cols()});
  std::copy(frame.pixels().begin(), frame.pixels().end(), t.data());
  return t;
}

Tensor4 to_tensor(std::span<const Frame> frames) {
  if (frames.empty()) return {};
  Tensor4 t({static_cast<int>(frames.size()), 1, frames[0].rows(), frames[0].cols()});
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (!frames[i].same_dims(frames[0])) throw Error(ErrorCode::kShapeMismatch, "to_tensor: frame dims differ");
    std::copy(frames[i].pixels().begin(), frames[i].pixels().end(), t.data() + t.offset(static_cast<int>(i), 0, 0, 0));
  }
  return t;
}

Frame to_frame(const Tensor4& tensor, int index) {
  Frame f(tensor.rows(), tensor.cols());
  const float* src = tensor.data() + tensor.offset(index, 0, 0, 0);
  std::copy(src, src + f.size(), f.data());
  return f;
}

Frame forward_residual(const ModelParams& params, const Frame& frame, NormMode mode) {
  // Inference never changes the parameters; running stats stay untouched
  // because update_stats is off.
  auto& mutable_params = const_cast<ModelParams&>(params);
  Tape tape(false);
  Var input = tape.leaf(to_tensor(frame));
  Var out = forward_network(tape, mutable_params, input, mode, false);
  Frame result = to_frame(out->value);
  if (!params.config.residual) {
    for (std::size_t i = 0; i < result.size(); ++i) result[i] = frame[i] - result[i];
  }
  return result;
}

Frame denoise(const ModelParams& params, const Frame& frame) {
  Frame residual = forward_residual(params, frame, NormMode::kEval);
  Frame out(frame.rows(), frame.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = frame[i] - residual[i];
  return out;
}

namespace {

constexpr char kMagic[4] = {'F', '2', 'F', 'W'};

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void floats(std::span<const float> values) {
    for (float f : values) u32(std::bit_cast<std::uint32_t>(f));
  }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

  void need(std::size_t n, const char* what) const {
    if (pos_ + n > bytes_.size()) {
      throw Error(ErrorCode::kTruncated, std::string("weights file truncated while reading ") + what);
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  void floats(std::span<float> out, const char* what) {
    need(out.size() * 4, what);
    for (auto& f : out) f = std::bit_cast<float>(u32(what));
  }
  bool at_end() const { return pos_ == bytes_.size(); }
  const char* peek() const { return bytes_.data() + pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void skip(std::size_t n) { pos_ += n; }

 private:
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

void write_layer(Writer& w, const ConvLayer& layer) {
  const auto& s = layer.weight.value.shape();
  w.u32(static_cast<std::uint32_t>(s[0]));
  w.u32(static_cast<std::uint32_t>(s[1]));
  w.u32(static_cast<std::uint32_t>(s[2]));
  w.u8(layer.has_norm ? 1 : 0);
  w.floats(layer.weight.value.values());
  w.floats(layer.bias.value.values());
  if (layer.has_norm) {
    w.floats(layer.gamma.value.values());
    w.floats(layer.beta.value.values());
    w.floats(layer.stats.mean);
    w.floats(layer.stats.var);
  }
}

}  // namespace

void save_weights(const ModelParams& params, const std::filesystem::path& path) {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kWeightsVersion);
  w.u32(static_cast<std::uint32_t>(params.config.depth));
  w.u32(static_cast<std::uint32_t>(params.config.width));
  w.u32(static_cast<std::uint32_t>(params.config.kernel));
  w.u8(params.config.use_norm ? 1 : 0);
  w.u8(params.config.residual ? 1 : 0);
  for (const auto& layer : params.layers) write_layer(w, layer);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

ModelParams load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(std::move(bytes));

  r.need(4, "magic");
  if (std::memcmp(r.peek(), kMagic, 4) != 0) throw Error(ErrorCode::kBadMagic, path.string() + ": not a weights file");
  r.skip(4);
  const std::uint32_t version = r.u32("version");
  if (version != kWeightsVersion) {
    throw Error(ErrorCode::kBadVersion, path.string() + ": weights format version " + std::to_string(version) +
                                            " (expected " + std::to_string(kWeightsVersion) + ")");
  }
  ModelConfig config;
  config.depth = static_cast<int>(r.u32("depth"));
  config.width = static_cast<int>(r.u32("width"));
  config.kernel = static_cast<int>(r.u32("kernel"));
  config.use_norm = r.u8("use_norm") != 0;
  config.residual = r.u8("residual") != 0;
  try {
    config.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kShapeInconsistent, path.string() + ": " + e.what());
  }

  ModelParams params = empty_params(config);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& layer = params.layers[l];
    const auto& s = layer.weight.value.shape();
    const std::uint32_t out = r.u32("layer header");
    const std::uint32_t inc = r.u32("layer header");
    const std::uint32_t k = r.u32("layer header");
    const bool norm = r.u8("layer header") != 0;
    if (out != static_cast<std::uint32_t>(s[0]) || inc != static_cast<std::uint32_t>(s[1]) ||
        k != static_cast<std::uint32_t>(s[2]) || norm != layer.has_norm) {
      throw Error(ErrorCode::kShapeInconsistent,
                  path.string() + ": layer " + std::to_string(l) + " stored as " + std::to_string(out) + "x" +
                      std::to_string(inc) + "x" + std::to_string(k) + (norm ? "+norm" : "") +
                      " but the declared config expects " + std::to_string(s[0]) + "x" + std::to_string(s[1]) +
                      "x" + std::to_string(s[2]) + (layer.has_norm ? "+norm" : ""));
    }
    r.floats(layer.weight.value.values(), "weights");
    r.floats(layer.bias.value.values(), "bias");
    if (layer.has_norm) {
      r.floats(layer.gamma.value.values(), "gamma");
      r.floats(layer.beta.value.values(), "beta");
      r.floats(layer.stats.mean, "running mean");
      r.floats(layer.stats.var, "running variance");
    }
  }
  if (!r.at_end()) {
    throw Error(ErrorCode::kShapeInconsistent,
                path.string() + ": " + std::to_string(r.remaining()) + " trailing bytes after the declared layers");
  }
  return params;
}

std::uint64_t weights_checksum(const ModelParams& params) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::span<const float> values) {
    for (float f : values) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
      for (int i = 0; i < 4; ++i) {
        h ^= (bits >> (8 * i)) & 0xffu;
        h *= 1099511628211ull;
      }
    }
  };
  for (const auto& layer : params.layers) {
    mix(layer.weight.value.values());
    mix(layer.bias.value.values());
    if (layer.has_norm) {
      mix(layer.gamma.value.values());
      mix(layer.beta.value.values());
      mix(layer.stats.mean);
      mix(layer.stats.var);
    }
  }
  return h;
}

}  // namespace f2f
