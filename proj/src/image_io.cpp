#include "f2f/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "f2f/error.hpp"

namespace f2f {
namespace {

struct PnmHeader {
  int channels = 1;
  int cols = 0;
  int rows = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

PnmHeader parse_header(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  auto malformed = [&](const std::string& why) {
    return Error(ErrorCode::kMalformedHeader, path.string() + ": " + why);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw malformed("expected binary PGM (P5) or PPM (P6)");
  }
  PnmHeader h;
  h.channels = bytes[1] == '6' ? 3 : 1;
  std::size_t pos = 2;
  auto next_int = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw malformed("expected a number in the header");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1'000'000) throw malformed("header value out of range");
      ++pos;
    }
    return static_cast<int>(v);
  };
  h.cols = next_int();
  h.rows = next_int();
  h.maxval = next_int();
  if (h.cols <= 0 || h.rows <= 0) throw malformed("non-positive dimensions");
  if (h.maxval < 1 || h.maxval > 65535) throw malformed("maxval must lie in [1, 65535]");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw malformed("missing whitespace after maxval");
  h.data_offset = pos + 1;
  return h;
}

std::vector<float> decode_samples(const std::vector<unsigned char>& bytes, const PnmHeader& h,
                                  const std::filesystem::path& path) {
  const std::size_t count = static_cast<std::size_t>(h.rows) * h.cols * h.channels;
  const std::size_t width = h.maxval > 255 ? 2 : 1;
  if (bytes.size() < h.data_offset + count * width) {
    throw Error(ErrorCode::kTruncated, path.string() + ": pixel data truncated");
  }
  std::vector<float> out(count);
  const unsigned char* p = bytes.data() + h.data_offset;
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned v = width == 2 ? (static_cast<unsigned>(p[2 * i]) << 8) | p[2 * i + 1] : p[i];
    out[i] = static_cast<float>(static_cast<double>(v) / h.maxval);
  }
  return out;
}

void write_pnm(const std::filesystem::path& path, char type, int rows, int cols, int maxval,
               const std::vector<float>& samples) {
  if (maxval < 1 || maxval > 65535) throw Error(ErrorCode::kInvalidArgument, "maxval must lie in [1, 65535]");
  std::string header = std::string("P") + type + "\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n" +
                       std::to_string(maxval) + "\n";
  std::vector<char> bytes(header.begin(), header.end());
  for (float s : samples) {
    const double clipped = std::clamp(static_cast<double>(s), 0.0, 1.0);
    const auto v = static_cast<unsigned>(std::round(clipped * maxval));
    if (maxval > 255) bytes.push_back(static_cast<char>((v >> 8) & 0xffu));
    bytes.push_back(static_cast<char>(v & 0xffu));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

}  // namespace

Frame read_pgm(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  const auto h = parse_header(bytes, path);
  if (h.channels != 1) throw Error(ErrorCode::kMalformedHeader, path.string() + ": expected a grayscale PGM");
  Frame f(h.rows, h.cols);
  f.pixels() = decode_samples(bytes, h, path);
  return f;
}

void write_pgm(const Frame& frame, const std::filesystem::path& path, int maxval) {
  write_pnm(path, '5', frame.rows(), frame.cols(), maxval, frame.pixels());
}

void write_mask_pgm(const Mask& mask, const std::filesystem::path& path) {
  std::vector<float> samples(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) samples[i] = mask[i] ? 1.0f : 0.0f;
  write_pnm(path, '5', mask.rows(), mask.cols(), 255, samples);
}

ColorImage read_pnm(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  const auto h = parse_header(bytes, path);
  return {h.rows, h.cols, h.channels, decode_samples(bytes, h, path)};
}

void write_ppm(const ColorImage& image, const std::filesystem::path& path) {
  if (image.channels != 3) throw Error(ErrorCode::kInvalidArgument, "write_ppm: expected 3 channels");
  write_pnm(path, '6', image.rows, image.cols, 255, image.px);
}

std::string format_frame_path(const std::string& pattern, int index) {
  std::string out;
  int conversions = 0;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] != '%') {
      out += pattern[i];
      continue;
    }
    if (i + 1 < pattern.size() && pattern[i + 1] == '%') {
      out += '%';
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < pattern.size() && (pattern[j] == '0' || pattern[j] == '-' || pattern[j] == '+' || pattern[j] == ' ')) ++j;
    while (j < pattern.size() && std::isdigit(static_cast<unsigned char>(pattern[j]))) ++j;
    if (j >= pattern.size() || pattern[j] != 'd' || j - i > 8) {
      throw Error(ErrorCode::kInvalidArgument, "frame pattern '" + pattern + "': only %d conversions are supported");
    }
    const std::string spec = pattern.substr(i, j - i + 1);
    char buf[64];
    std::snprintf(buf, sizeof buf, spec.c_str(), index);
    out += buf;
    ++conversions;
    i = j;
  }
  if (conversions != 1) {
    throw Error(ErrorCode::kInvalidArgument, "frame pattern '" + pattern + "' needs exactly one %d conversion");
  }
  return out;
}

void check_sequence(const FrameSequence& frames) {
  if (frames.empty()) throw Error(ErrorCode::kEmptySequence, "frame sequence is empty");
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (!frames[i].same_dims(frames[0])) {
      throw Error(ErrorCode::kInconsistentDims,
                  "frame " + std::to_string(i + 1) + " is " + std::to_string(frames[i].rows()) + "x" +
                      std::to_string(frames[i].cols()) + ", frame 1 is " + std::to_string(frames[0].rows()) + "x" +
                      std::to_string(frames[0].cols()));
    }
  }
}

FrameSequence load_sequence(const std::string& pattern, std::optional<int> expected_count) {
  FrameSequence frames;
  for (int t = 1;; ++t) {
    const std::string path = format_frame_path(pattern, t);
    if (!std::filesystem::exists(path)) {
      const bool expected = expected_count && t <= *expected_count;
      const bool gap = !frames.empty() && std::filesystem::exists(format_frame_path(pattern, t + 1));
      if (expected || gap) throw Error(ErrorCode::kMissingFrame, "missing frame " + std::to_string(t) + ": " + path);
      break;
    }
    frames.push_back(read_pgm(path));
    if (frames.size() > 1 && !frames.back().same_dims(frames.front())) {
      throw Error(ErrorCode::kInconsistentDims,
                  "frame " + std::to_string(t) + " (" + path + ") is " + std::to_string(frames.back().rows()) + "x" +
                      std::to_string(frames.back().cols()) + ", frame 1 is " + std::to_string(frames[0].rows()) +
                      "x" + std::to_string(frames[0].cols()));
    }
    if (expected_count && t == *expected_count) break;
  }
  if (frames.empty()) throw Error(ErrorCode::kEmptySequence, "no frames match pattern '" + pattern + "'");
  return frames;
}

void save_sequence(const FrameSequence& frames, const std::string& pattern, int maxval) {
  for (std::size_t i = 0; i < frames.size(); ++i) {
    write_pgm(frames[i], format_frame_path(pattern, static_cast<int>(i) + 1), maxval);
  }
}

std::vector<ColorImage> load_color_sequence(const std::string& pattern) {
  std::vector<ColorImage> images;
  for (int t = 1; std::filesystem::exists(format_frame_path(pattern, t)); ++t) {
    images.push_back(read_pnm(format_frame_path(pattern, t)));
  }
  if (images.empty()) throw Error(ErrorCode::kEmptySequence, "no frames match pattern '" + pattern + "'");
  return images;
}

Frame prepare_frame(const ColorImage& image) {
  if (image.channels != 3) {
    throw Error(ErrorCode::kInvalidArgument,
                "prepare: expected 3 channels, got " + std::to_string(image.channels));
  }
  Frame gray(image.rows, image.cols);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    gray[i] = static_cast<float>((static_cast<double>(image.px[3 * i]) + image.px[3 * i + 1] + image.px[3 * i + 2]) / 3.0);
  }
  Frame out(image.rows / 2, image.cols / 2);
  for (int r = 0; r < out.rows(); ++r) {
    for (int c = 0; c < out.cols(); ++c) {
      const double s = static_cast<double>(gray(2 * r, 2 * c)) + gray(2 * r, 2 * c + 1) + gray(2 * r + 1, 2 * c) +
                       gray(2 * r + 1, 2 * c + 1);
      out(r, c) = static_cast<float>(0.25 * s);
    }
  }
  return out;
}

FrameSequence prepare_sequence(const std::vector<ColorImage>& images) {
  FrameSequence out;
  out.reserve(images.size());
  for (const auto& im : images) out.push_back(prepare_frame(im));
  return out;
}

}  // namespace f2f
