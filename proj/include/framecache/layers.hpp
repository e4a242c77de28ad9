#pragma once

#include <cstdint>
#include <vector>

#include "framecache/model.hpp"
#include "framecache/rect.hpp"
#include "framecache/tensor.hpp"
#include "framecache/weights.hpp"

namespace framecache {

// All kernels use a fixed accumulation order, so the same inputs always give
// bit-identical outputs.

// Zero padding, square kernel; loop nest output channel -> row -> col ->
// input channel -> kernel row -> kernel col, bias added after the sum.
FeatureMap conv_forward(const FeatureMap& input, const LayerSpec& spec,
                        const LayerWeights& weights);

// Per-pixel flags shared by every channel of a feature map.
class ReuseBitmap {
 public:
  ReuseBitmap(int width, int height)
      : width_(width), height_(height),
        bits_(static_cast<std::size_t>(width) * height, 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool test(int x, int y) const {
    return bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  void set(int x, int y) { bits_[static_cast<std::size_t>(y) * width_ + x] = 1; }
  std::int64_t popcount() const;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> bits_;
};

ReuseBitmap build_reuse_bitmap(const std::vector<RegionMapping>& mappings,
                               int out_w, int out_h);

struct CachedConvResult {
  FeatureMap output;
  std::int64_t computed_macs = 0;
  std::int64_t copied_elements = 0;  // output elements filled from cache
};

// Three-step convolution: copy cached_out[src] into output[dst] for every
// mapping, mark the copied pixels, then convolve only the unmarked ones.
// `mappings` must already be in this layer's output coordinates.
CachedConvResult conv_forward_cached(const FeatureMap& input,
                                     const LayerSpec& spec,
                                     const LayerWeights& weights,
                                     const FeatureMap& cached_out,
                                     const std::vector<RegionMapping>& mappings);

// MACs for a full evaluation of a conv layer over `input`.
std::int64_t conv_total_macs(const Shape& input, const LayerSpec& spec);

// Max (padding ignored) or average (over in-bounds elements) pooling.
FeatureMap pool_forward(const FeatureMap& input, const LayerSpec& spec);
FeatureMap relu_forward(const FeatureMap& input);
// Softmax across channels at every spatial position.
FeatureMap softmax_forward(const FeatureMap& input);
// Dense layer over the flattened (channel-major) input.
FeatureMap fc_forward(const FeatureMap& input, const LayerSpec& spec,
                      const LayerWeights& weights);
// Cross-channel LRN, window 2r+1.
FeatureMap lrn_forward(const FeatureMap& input, const LayerSpec& spec);
FeatureMap concat_forward(const std::vector<const FeatureMap*>& inputs);
// relu, scale and bias.
FeatureMap elementwise_forward(const FeatureMap& input, const LayerSpec& spec);

}  // namespace framecache
