#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace framecache {

// Channel-major grid: all of channel 0, then channel 1, ...; rows are
// contiguous within a channel.
template <typename T>
class Planar {
 public:
  using value_type = T;

  Planar() = default;
  Planar(int channels, int height, int width, T fill = T{})
      : channels_(channels), height_(height), width_(width) {
    if (channels < 0 || height < 0 || width < 0) {
      throw std::invalid_argument("negative tensor dimension");
    }
    data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
  }
  Planar(int channels, int height, int width, std::vector<T> data)
      : channels_(channels), height_(height), width_(width),
        data_(std::move(data)) {
    if (channels < 0 || height < 0 || width < 0) {
      throw std::invalid_argument("negative tensor dimension");
    }
    if (data_.size() != static_cast<std::size_t>(channels) * height * width) {
      throw std::invalid_argument(
          "tensor data length " + std::to_string(data_.size()) +
          " does not match " + std::to_string(channels) + "x" +
          std::to_string(height) + "x" + std::to_string(width));
    }
  }

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(height_) * width_;
  }
  std::size_t size() const { return data_.size(); }

  T& at(int c, int y, int x) { return data_[index(c, y, x)]; }
  const T& at(int c, int y, int x) const { return data_[index(c, y, x)]; }

  std::span<T> plane(int c) {
    return {data_.data() + c * plane_size(), plane_size()};
  }
  std::span<const T> plane(int c) const {
    return {data_.data() + c * plane_size(), plane_size()};
  }
  // Row `y` of channel `c`.
  T* row(int c, int y) { return data_.data() + index(c, y, 0); }
  const T* row(int c, int y) const { return data_.data() + index(c, y, 0); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  bool same_shape(const Planar& o) const {
    return channels_ == o.channels_ && height_ == o.height_ &&
           width_ == o.width_;
  }

  friend bool operator==(const Planar&, const Planar&) = default;

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

// 8-bit imagery (1 channel grayscale or 3 channel RGB).
using Frame = Planar<std::uint8_t>;
// Floating-point layer data.
using FeatureMap = Planar<float>;

// (C, H, W) of a blob.
struct Shape {
  int c = 0;
  int h = 0;
  int w = 0;
  std::int64_t count() const { return static_cast<std::int64_t>(c) * h * w; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

template <typename T>
Shape shape_of(const Planar<T>& t) {
  return {t.channels(), t.height(), t.width()};
}

}  // namespace framecache
