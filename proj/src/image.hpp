#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace unidial {

// H×W×C pixel block, row-major with channel-minor layout, values in [0, 1].
struct ImageRaster {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<double> pixels;

  double& at(std::size_t y, std::size_t x, std::size_t c) {
    return pixels[(y * width + x) * channels + c];
  }
  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[(y * width + x) * channels + c];
  }
};

// Split into P×P tiles, raster-scan over the tile grid, each row the tile's
// pixels flattened row-major, channel-minor. Result: [N × P*P*C] with
// N = H*W/P^2.
Tensor patchify(const ImageRaster& img, std::size_t patch);

// Inverse reassembly; patchify -> unpatchify reproduces the raster bit-exactly.
ImageRaster unpatchify(const Tensor& patches, std::size_t height,
                       std::size_t width, std::size_t channels,
                       std::size_t patch);

// Portable float raster file: text header "UFR1 <H> <W> <C>\n" followed by
// H*W*C float64 little-endian values.
void save_raster(const ImageRaster& img, const std::string& path);
ImageRaster load_raster(const std::string& path);

}  // namespace unidial
