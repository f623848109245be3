#include <bit>
#include <cstdint>
#include <fstream>
#include <vector>

#include "f2f/error.hpp"
#include "f2f/flow.hpp"

namespace f2f {
namespace {

constexpr float kFloMagic = 202021.25f;

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::vector<char>& in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(in[pos + i])) << (8 * i);
  return v;
}

}  // namespace

void write_flo(const FlowField& flow, const std::filesystem::path& path) {
  std::vector<char> bytes;
  bytes.reserve(12 + flow.u.size() * 8);
  put_u32(bytes, std::bit_cast<std::uint32_t>(kFloMagic));
  put_u32(bytes, static_cast<std::uint32_t>(flow.cols()));
  put_u32(bytes, static_cast<std::uint32_t>(flow.rows()));
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    put_u32(bytes, std::bit_cast<std::uint32_t>(flow.u[i]));
    put_u32(bytes, std::bit_cast<std::uint32_t>(flow.v[i]));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

FlowField read_flo(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12) throw Error(ErrorCode::kTruncated, path.string() + ": flow header truncated");
  if (std::bit_cast<float>(get_u32(bytes, 0)) != kFloMagic) {
    throw Error(ErrorCode::kBadMagic, path.string() + ": not a .flo file");
  }
  const auto width = static_cast<std::int32_t>(get_u32(bytes, 4));
  const auto height = static_cast<std::int32_t>(get_u32(bytes, 8));
  if (width < 0 || height < 0) throw Error(ErrorCode::kMalformedHeader, path.string() + ": negative flow dims");
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() < 12 + count * 8) throw Error(ErrorCode::kTruncated, path.string() + ": flow payload truncated");
  FlowField flow(height, width);
  for (std::size_t i = 0; i < count; ++i) {
    flow.u[i] = std::bit_cast<float>(get_u32(bytes, 12 + 8 * i));
    flow.v[i] = std::bit_cast<float>(get_u32(bytes, 16 + 8 * i));
  }
  return flow;
}

}  // namespace f2f
