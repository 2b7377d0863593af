#include "ffsense/dataset/image.hpp"

#include <cmath>
#include <string>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "ffsense/error.hpp"

namespace ffsense::dataset {

Image load_image(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw IoError("image not found: '" + path.string() + "'");
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw DomainError("cannot decode image '" + path.string() + "'");
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  Image img;
  img.height = rgb.rows;
  img.width = rgb.cols;
  img.pixels.resize(static_cast<std::size_t>(img.height) * img.width * 3);
  for (int y = 0; y < img.height; ++y) {
    const auto* row = rgb.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.width * 3; ++x)
      img.pixels[static_cast<std::size_t>(y) * img.width * 3 + x] = static_cast<float>(row[x]) / 255.0f;
  }
  return img;
}

void save_image(const Image& image, const std::filesystem::path& path) {
  validate_image(image);
  cv::Mat rgb(image.height, image.width, CV_8UC3);
  for (int y = 0; y < image.height; ++y) {
    auto* row = rgb.ptr<std::uint8_t>(y);
    for (int x = 0; x < image.width * 3; ++x)
      row[x] = static_cast<std::uint8_t>(
          std::lround(image.pixels[static_cast<std::size_t>(y) * image.width * 3 + x] * 255.0f));
  }
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), bgr)) throw IoError("cannot write image '" + path.string() + "'");
}

void validate_image(const Image& image) {
  if (image.channels != 3)
    throw ShapeError("image must have 3 channels, got " + std::to_string(image.channels));
  if (image.height <= 0 || image.width <= 0)
    throw ShapeError("image must be non-empty, got " + std::to_string(image.height) + "x" + std::to_string(image.width));
  if (image.pixels.size() != static_cast<std::size_t>(image.height) * image.width * 3)
    throw ShapeError("image buffer holds " + std::to_string(image.pixels.size()) + " values, expected " +
                     std::to_string(static_cast<std::size_t>(image.height) * image.width * 3));
  for (float v : image.pixels)
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) throw ShapeError("image values must lie in [0, 1]");
}

std::vector<float> to_network_input(const Image& image, int size) {
  validate_image(image);
  cv::Mat src(image.height, image.width, CV_32FC3, const_cast<float*>(image.pixels.data()));
  cv::Mat resized;
  if (image.height == size && image.width == size)
    resized = src;
  else
    cv::resize(src, resized, cv::Size(size, size), 0, 0, cv::INTER_LINEAR);
  std::vector<float> chw(static_cast<std::size_t>(3) * size * size);
  const std::size_t plane = static_cast<std::size_t>(size) * size;
  for (int y = 0; y < size; ++y) {
    const auto* row = resized.ptr<float>(y);
    for (int x = 0; x < size; ++x)
      for (int c = 0; c < 3; ++c) chw[c * plane + static_cast<std::size_t>(y) * size + x] = row[x * 3 + c];
  }
  return chw;
}

}  // namespace ffsense::dataset
