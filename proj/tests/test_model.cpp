#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "f2f/error.hpp"
#include "f2f/model.hpp"
#include "f2f/synthetic.hpp"

using namespace f2f;
namespace fs = std::filesystem;

namespace {

ModelConfig small(bool norm = true) {
  ModelConfig c;
  c.depth = 4;
  c.width = 6;
  c.use_norm = norm;
  return c;
}

fs::path temp(const std::string& name) { return fs::temp_directory_path() / ("f2f_test_model_" + name); }

ErrorCode load_error(const fs::path& p) {
  try {
    load_weights(p);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("load_weights accepted a bad file");
  return ErrorCode::kInvalidArgument;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

}  // namespace

TEST_CASE("layer layout follows the configured depth, width and norm") {
  const auto p = init_params(small(), 1);
  REQUIRE(p.layers.size() == 4);
  CHECK(p.layers[0].weight.value.shape() == Tensor4::Shape{6, 1, 3, 3});
  CHECK_FALSE(p.layers[0].has_norm);
  CHECK(p.layers[1].has_norm);
  CHECK(p.layers[2].has_norm);
  CHECK(p.layers[3].weight.value.shape() == Tensor4::Shape{1, 6, 3, 3});
  CHECK_FALSE(p.layers[3].has_norm);
  const std::size_t expected = (6 * 9 + 6) + 2 * (6 * 6 * 9 + 6 + 12) + (6 * 9 + 1);
  CHECK(p.parameter_count() == expected);
  CHECK(init_params(small(false), 1).layers[1].has_norm == false);
}

TEST_CASE("output has the input's size for odd and even dimensions") {
  const auto p = init_params(small(), 2);
  for (auto [r, c] : {std::pair{17, 23}, {64, 64}, {96, 128}, {1, 1}}) {
    const Frame out = denoise(p, synthetic_texture(r, c, 3));
    CHECK(out.rows() == r);
    CHECK(out.cols() == c);
  }
}

TEST_CASE("a zero last layer makes the residual model the identity") {
  auto p = init_params(small(), 3);
  p.layers.back().weight.value.fill(0.0f);
  p.layers.back().bias.value.fill(0.0f);
  const Frame f = synthetic_texture(20, 30, 4);
  CHECK(denoise(p, f) == f);
}

TEST_CASE("initialization is seeded and He-scaled") {
  ModelConfig c = small();
  c.width = 64;
  const auto a = init_params(c, 9), b = init_params(c, 9), d = init_params(c, 10);
  CHECK(a == b);
  CHECK_FALSE(a == d);
  const auto& w = a.layers[1].weight.value;
  double ss = 0;
  for (float x : w.values()) ss += double(x) * x;
  const double var = ss / w.size(), expected = 2.0 / (64 * 9);
  CHECK(var == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("inference never moves running statistics") {
  auto p = init_params(small(), 5);
  const auto before = p;
  const Frame f = synthetic_texture(16, 16, 6);
  forward_residual(p, f, NormMode::kTrain);
  denoise(p, f);
  CHECK(p == before);
}

TEST_CASE("invalid configurations and inputs are rejected") {
  ModelConfig c = small();
  c.depth = 2;
  CHECK_THROWS_AS(init_params(c, 0), Error);
  c = small();
  c.kernel = 4;
  CHECK_THROWS_AS(init_params(c, 0), Error);
  auto p = init_params(small(), 0);
  Frame bad(4, 4, 0.5f);
  bad(1, 1) = std::nanf("");
  CHECK_THROWS_AS(denoise(p, bad), Error);
}

TEST_CASE("weights round-trip exactly, checksum included") {
  auto p = init_params(small(), 7);
  p.layers[1].stats.mean[2] = 0.25f;
  p.layers[2].stats.var[0] = 3.5f;
  const auto path = temp("rt.bin");
  save_weights(p, path);
  const auto q = load_weights(path);
  CHECK(q == p);
  CHECK(weights_checksum(q) == weights_checksum(p));
  p.layers[0].bias.value[0] += 1e-6f;
  CHECK(weights_checksum(q) != weights_checksum(p));
}

TEST_CASE("corrupted weights files map to specific errors") {
  const auto good = temp("good.bin");
  save_weights(init_params(small(), 8), good);
  const std::string bytes = read_bytes(good);

  CHECK(load_error(temp("does_not_exist.bin")) == ErrorCode::kIo);

  std::string magic = bytes;
  magic[0] = 'X';
  write_bytes(temp("magic.bin"), magic);
  CHECK(load_error(temp("magic.bin")) == ErrorCode::kBadMagic);

  std::string version = bytes;
  version[4] = 99;
  write_bytes(temp("version.bin"), version);
  CHECK(load_error(temp("version.bin")) == ErrorCode::kBadVersion);

  write_bytes(temp("trunc.bin"), bytes.substr(0, bytes.size() - 3));
  CHECK(load_error(temp("trunc.bin")) == ErrorCode::kTruncated);

  // Header says width 6; make the first layer claim 5 output channels.
  std::string shape = bytes;
  shape[22] = 5;
  write_bytes(temp("shape.bin"), shape);
  CHECK(load_error(temp("shape.bin")) == ErrorCode::kShapeInconsistent);

  write_bytes(temp("trailing.bin"), bytes + "x");
  CHECK(load_error(temp("trailing.bin")) == ErrorCode::kShapeInconsistent);
}
