#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "f2f/image.hpp"

namespace f2f {

// Interleaved RGB in [0,1].
struct ColorImage {
  int rows = 0;
  int cols = 0;
  int channels = 3;
  std::vector<float> px;
};

// Binary PGM (P5), maxval 1..65535; 16-bit samples are big-endian.
Frame read_pgm(const std::filesystem::path& path);
void write_pgm(const Frame& frame, const std::filesystem::path& path, int maxval = 255);
void write_mask_pgm(const Mask& mask, const std::filesystem::path& path);

// Binary PPM (P6) or PGM (P5, loaded as one channel).
ColorImage read_pnm(const std::filesystem::path& path);
void write_ppm(const ColorImage& image, const std::filesystem::path& path);

// Expands a printf-style pattern with exactly one %d conversion (flags and
// width allowed, e.g. "frame_%03d.pgm"); "%%" is a literal percent.
std::string format_frame_path(const std::string& pattern, int index);

// Frames pattern(1), pattern(2), ... until the first missing index. With
// expected_count, every index up to it must exist.
FrameSequence load_sequence(const std::string& pattern, std::optional<int> expected_count = std::nullopt);
void save_sequence(const FrameSequence& frames, const std::string& pattern, int maxval = 255);
std::vector<ColorImage> load_color_sequence(const std::string& pattern);

// Channel mean, then 2x2 box downscale (odd trailing row/col dropped).
Frame prepare_frame(const ColorImage& image);
FrameSequence prepare_sequence(const std::vector<ColorImage>& images);

// Throws kEmptySequence / kInconsistentDims.
void check_sequence(const FrameSequence& frames);

}  // namespace f2f
