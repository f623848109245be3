#pragma once

#include <cstdint>

#include "f2f/image.hpp"

namespace f2f {

// Multi-scale smooth texture with sharp-edged shapes, values in about [0.1, 0.9].
Frame synthetic_texture(int rows, int cols, std::uint64_t seed);

// Periodic texture: Gaussian-blurred white noise with wrap-around boundary,
// rescaled to [0.1, 0.9].
Frame periodic_blurred_noise(int rows, int cols, double blur_sigma, std::uint64_t seed);

// Integer circular shift: out(r, c) = in(r - dy, c - dx) with wrap-around.
Frame circular_shift(const Frame& frame, int dx, int dy);

struct SceneConfig {
  int rows = 64;
  int cols = 64;
  int frames = 40;
  // Background (camera) motion in pixels per frame.
  double pan_x = 0.6;
  double pan_y = 0.3;
  // Foreground disk moving over the background; radius 0 disables it.
  double object_radius = 9.0;
  double object_vx = -0.9;
  double object_vy = 0.5;
};

// Clean video of a panning textured background with a moving textured disk.
FrameSequence synthetic_video(const SceneConfig& config, std::uint64_t seed);

}  // namespace f2f
