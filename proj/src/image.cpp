#include "image.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace unidial {

Tensor patchify(const ImageRaster& img, std::size_t patch) {
  if (patch == 0 || img.height % patch != 0 || img.width % patch != 0) {
    throw ShapeError("patchify: patch size " + std::to_string(patch) +
                     " does not divide image " + std::to_string(img.height) +
                     "x" + std::to_string(img.width));
  }
  const std::size_t gh = img.height / patch;
  const std::size_t gw = img.width / patch;
  const std::size_t n = gh * gw;
  const std::size_t row_len = patch * patch * img.channels;
  std::vector<double> out;
  out.reserve(n * row_len);
  for (std::size_t gy = 0; gy < gh; ++gy) {
    for (std::size_t gx = 0; gx < gw; ++gx) {
      for (std::size_t py = 0; py < patch; ++py) {
        for (std::size_t px = 0; px < patch; ++px) {
          for (std::size_t c = 0; c < img.channels; ++c) {
            out.push_back(img.at(gy * patch + py, gx * patch + px, c));
          }
        }
      }
    }
  }
  return Tensor::from_data({n, row_len}, std::move(out));
}

ImageRaster unpatchify(const Tensor& patches, std::size_t height,
                       std::size_t width, std::size_t channels,
                       std::size_t patch) {
  const std::size_t gh = height / patch;
  const std::size_t gw = width / patch;
  const std::size_t row_len = patch * patch * channels;
  if (patches.ndim() != 2 || patches.rows() != gh * gw ||
      patches.cols() != row_len) {
    throw ShapeError("unpatchify: tensor " + shape_str(patches.shape()) +
                     " does not match " + std::to_string(height) + "x" +
                     std::to_string(width) + "x" + std::to_string(channels) +
                     " with patch " + std::to_string(patch));
  }
  ImageRaster img;
  img.height = height;
  img.width = width;
  img.channels = channels;
  img.pixels.assign(height * width * channels, 0.0);
  const double* src = patches.data().data();
  std::size_t k = 0;
  for (std::size_t gy = 0; gy < gh; ++gy) {
    for (std::size_t gx = 0; gx < gw; ++gx) {
      for (std::size_t py = 0; py < patch; ++py) {
        for (std::size_t px = 0; px < patch; ++px) {
          for (std::size_t c = 0; c < channels; ++c) {
            img.at(gy * patch + py, gx * patch + px, c) = src[k++];
          }
        }
      }
    }
  }
  return img;
}

void save_raster(const ImageRaster& img, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("save_raster: cannot open " + path);
  f << "UFR1 " << img.height << " " << img.width << " " << img.channels
    << "\n";
  std::string blob;
  blob.reserve(img.pixels.size() * 8);
  for (double d : img.pixels) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i)
      blob.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
  f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!f) throw DataError("save_raster: write failed: " + path);
}

ImageRaster load_raster(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("load_raster: cannot open " + path);
  std::string header;
  std::getline(f, header);
  std::istringstream hs(header);
  std::string magic;
  ImageRaster img;
  hs >> magic >> img.height >> img.width >> img.channels;
  if (magic != "UFR1" || !hs || img.height == 0 || img.width == 0 ||
      img.channels == 0) {
    throw DataError("load_raster: bad header in " + path);
  }
  const std::size_t n = img.height * img.width * img.channels;
  std::string blob(n * 8, '\0');
  f.read(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (f.gcount() != static_cast<std::streamsize>(blob.size())) {
    throw DataError("load_raster: truncated pixel data in " + path);
  }
  img.pixels.resize(n);
  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    img.pixels[i] = std::bit_cast<double>(bits);
  }
  return img;
}

}  // namespace unidial
