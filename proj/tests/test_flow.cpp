#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "f2f/error.hpp"
#include "f2f/flow.hpp"
#include "f2f/synthetic.hpp"
#include "support/oracles.hpp"

using namespace f2f;
namespace fs = std::filesystem;

TEST_CASE("pyramid levels shrink by the scale until the minimum size") {
  CHECK(pyramid_level_size(64, 0.5) == 32);
  CHECK(pyramid_level_size(45, 0.5) == 23);
  CHECK(pyramid_level_size(1, 0.5) == 1);
  CHECK(max_pyramid_levels(64, 64, 0.5, 16) == 3);
  CHECK(max_pyramid_levels(15, 100, 0.5, 16) == 1);
  const auto pyr = build_pyramid(synthetic_texture(48, 80, 1), 0.5, 3);
  REQUIRE(pyr.size() == 3);
  CHECK(pyr[1].rows() == 24);
  CHECK(pyr[1].cols() == 40);
  CHECK(pyr[2].rows() == 12);
  CHECK(pyr[2].cols() == 20);
}

TEST_CASE("upsampling a constant flow scales its components by the size ratio") {
  const FlowField f(10, 20, 1.5f, -0.5f);
  const FlowField g = upsample_flow(f, 20, 30);
  CHECK(g.rows() == 20);
  CHECK(g.cols() == 30);
  for (std::size_t i = 0; i < g.u.size(); ++i) {
    CHECK(g.u[i] == doctest::Approx(1.5 * 1.5));
    CHECK(g.v[i] == doctest::Approx(-0.5 * 2.0));
  }
}

TEST_CASE(".flo files round-trip bit-exactly and reject bad data") {
  FlowField f(3, 5);
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    f.u[i] = 0.1f * i - 0.7f;
    f.v[i] = std::pow(-1.0f, float(i)) * 3.25f;
  }
  const auto path = fs::temp_directory_path() / "f2f_test_flow.flo";
  write_flo(f, path);
  CHECK(fs::file_size(path) == 12 + 15 * 8);
  const FlowField g = read_flo(path);
  CHECK(g.u == f.u);
  CHECK(g.v == f.v);

  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto code_of = [&](const std::string& content) {
    std::ofstream(path, std::ios::binary) << content;
    try {
      read_flo(path);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  CHECK(code_of("PIEH") == ErrorCode::kTruncated);
  CHECK(code_of("XXXX" + bytes.substr(4)) == ErrorCode::kBadMagic);
  CHECK(code_of(bytes.substr(0, bytes.size() - 1)) == ErrorCode::kTruncated);
}

TEST_CASE("identical frames give (near) zero flow") {
  const Frame f = synthetic_texture(64, 64, 3);
  const FlowField w = tvl1_flow(f, f);
  CHECK(testing::central_epe(w, 0.0, 0.0) < 0.02);
}

TEST_CASE("the solver lowers the TV-L1 energy below the zero flow's on every level") {
  const Frame ref = periodic_blurred_noise(64, 64, 2.0, 5);
  const Frame tgt = circular_shift(ref, -2, -1);
  FlowConfig cfg;
  cfg.prefilter_downscale = 1;
  FlowTrace trace;
  const FlowField w = tvl1_flow(tgt, ref, cfg, &trace);
  REQUIRE_FALSE(trace.levels.empty());
  for (const auto& level : trace.levels) {
    REQUIRE(level.energy.size() >= 1);
    CHECK(level.energy.back() <= level.energy.front() * 1.001);
  }
  // The solver works on frames jointly rescaled to [0, 255]; do the same here.
  Frame a = tgt, b = ref;
  float lo = 1e9f, hi = -1e9f;
  for (const Frame* f : {&a, &b})
    for (float x : f->pixels()) lo = std::min(lo, x), hi = std::max(hi, x);
  for (Frame* f : {&a, &b})
    for (float& x : f->pixels()) x = (x - lo) * 255.0f / (hi - lo);
  const double zero = tvl1_energy(a, b, FlowField(64, 64), cfg.lambda_data);
  CHECK(tvl1_energy(a, b, w, cfg.lambda_data) < 0.5 * zero);
}

TEST_CASE("integer translations are recovered, with and without noise") {
  const auto r = testing::registration_suite();
  CHECK(r.epe_clean < 0.3);
  CHECK(r.epe_noisy < 0.6);
}

TEST_CASE("flow configuration and frame size mismatches are rejected") {
  FlowConfig cfg;
  cfg.pyramid_scale = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.n_warps = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK_THROWS_AS(tvl1_flow(Frame(8, 8), Frame(8, 9)), Error);
}
