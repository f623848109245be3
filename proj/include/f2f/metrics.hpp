#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "f2f/image.hpp"

namespace f2f {

inline constexpr double kPsnrCapDb = 99.0;

// Peak 1.0; capped at 99 dB when MSE < 1e-10.
double psnr(const Frame& candidate, const Frame& reference);
double mse(const Frame& a, const Frame& b);

struct MetricsRow {
  int t = 0;
  double psnr_db = 0.0;
  std::vector<std::pair<std::string, double>> aux;
  std::vector<std::pair<std::string, std::string>> labels;
};

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;
};

// Population mean / standard deviation; NaNs are skipped.
Summary summarize(std::span<const double> values);

// Header "frame_index,<psnr_column>,<aux...>,<labels...>", then one row per
// entry sorted by t; reals with 4 fractional digits. Lines starting with '#'
// are comments.
std::string format_csv(std::span<const MetricsRow> rows, const std::string& psnr_column = "psnr_db",
                       const std::vector<std::string>& comments = {});
void write_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path,
               const std::string& psnr_column = "psnr_db", const std::vector<std::string>& comments = {});
std::vector<MetricsRow> read_csv(const std::filesystem::path& path);

}  // namespace f2f
