#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "ftb/geometry.hpp"

namespace ftb {

// Dense row-major single-channel raster.
template <typename T>
class Plane {
 public:
  Plane() = default;
  Plane(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }

  T& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  const T& at(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  T* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_; }
  const T* row(int y) const {
    return data_.data() + static_cast<std::size_t>(y) * width_;
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool in_bounds(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  template <typename U>
  bool same_size(const Plane<U>& o) const {
    return width_ == o.width() && height_ == o.height();
  }

  bool operator==(const Plane& o) const {
    return width_ == o.width_ && height_ == o.height_ && data_ == o.data_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using ImageU8 = Plane<std::uint8_t>;
using ImageF = Plane<float>;
using ImageD = Plane<double>;
using Mask = Plane<std::uint8_t>;  // 0 / 1

ImageF to_float(const ImageU8& img);  // scales to [0, 1]

// Binary PGM (P5), maxval 255.
void write_pgm(const ImageU8& img, const std::filesystem::path& path);
ImageU8 read_pgm(const std::filesystem::path& path);

int mask_area(const Mask& m);
std::optional<Vec2> mask_centroid(const Mask& m);
int mask_overlap(const Mask& a, const Mask& b);
Mask shift_mask(const Mask& m, int dx, int dy);
double mask_iou(const Mask& a, const Mask& b);

}  // namespace ftb
