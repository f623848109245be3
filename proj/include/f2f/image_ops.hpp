#pragma once

#include "f2f/image.hpp"

namespace f2f {

// Bilinear sample at (x = column, y = row) with border clamping.
float sample_bilinear(const Frame& image, double x, double y);

// Separable Gaussian blur with symmetric (mirror) boundary handling.
Frame gaussian_blur(const Frame& image, double sigma);

// d x d block averaging; trailing rows/cols that do not fill a block are dropped.
Frame box_downscale(const Frame& image, int factor);

// Pixel-centre aligned bilinear resize.
Frame resize_bilinear(const Frame& image, int rows, int cols);

// 3x3 median with replicated borders.
Frame median3x3(const Frame& image);

}  // namespace f2f
