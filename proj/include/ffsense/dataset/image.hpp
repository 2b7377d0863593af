#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace ffsense::dataset {

// Interleaved H x W x 3 RGB image with values in [0, 1].
struct Image {
  int height = 0;
  int width = 0;
  int channels = 3;
  std::vector<float> pixels;

  float at(int y, int x, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  float& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
};

// Decodes any format OpenCV reads (PNG, JPEG, PPM, ...). Throws IoError when the
// file is missing and DomainError when it cannot be decoded.
Image load_image(const std::filesystem::path& path);
void save_image(const Image& image, const std::filesystem::path& path);

// Throws ShapeError unless the image is H x W x 3 with finite values in [0, 1].
void validate_image(const Image& image);

// Bilinear resize to size x size, no mean subtraction. Returns planar CHW data.
std::vector<float> to_network_input(const Image& image, int size);

}  // namespace ffsense::dataset
