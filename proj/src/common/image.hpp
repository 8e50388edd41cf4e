#pragma once

#include <filesystem>
#include <vector>

namespace hybridsynth {

// Single-channel image, row-major, values nominally in [-1, 1].
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int h, int w, float fill = 0.0f)
      : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}

  float& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool empty() const { return pixels.empty(); }
  bool square() const { return height == width; }
  double mean() const;

  friend bool operator==(const Image&, const Image&) = default;
};

namespace png {

// 8-bit grayscale PNG. Reading maps byte b to b / 127.5 - 1; writing inverts
// that with rounding and clamps to [0, 255]. Colour inputs are converted to
// luminance.
Image read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const Image& image);

// 8-bit RGB, interleaved, row-major.
void write_rgb(const std::filesystem::path& path, int height, int width,
               const std::vector<unsigned char>& rgb);

}  // namespace png
}  // namespace hybridsynth
