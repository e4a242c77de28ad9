#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "framecache/tensor.hpp"

namespace framecache {

// Binary PGM (P5) or PPM (P6) with maxval 255. PPM pixels are de-interleaved
// into planar RGB.
Frame load_frame_pnm(std::span<const std::uint8_t> bytes);
// P5 for 1 channel, P6 for 3 channels.
std::vector<std::uint8_t> encode_pnm(const Frame& frame);

Frame read_frame_file(const std::filesystem::path& path);
void write_frame_file(const std::filesystem::path& path, const Frame& frame);

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_binary_file(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes);

// (sample - mean[c]) * scale per element. `mean` holds one value per channel
// or a single value applied to every channel.
FeatureMap preprocess(const Frame& frame, std::span<const float> mean,
                      float scale);

}  // namespace framecache
