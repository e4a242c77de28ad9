#pragma once

#include <string_view>
#include <vector>

#include "framecache/rect.hpp"

namespace framecache {

// How a layer moves reusable regions from its input to its output.
enum class LayerType {
  kConvolution,
  kPooling,
  kLRN,
  kConcat,
  kFullyConnected,
  kSoftmax,
  kElementwise,
};

std::string_view to_string(LayerType t);

struct LayerGeom {
  LayerType type = LayerType::kElementwise;
  int kernel = 1;   // conv/pool
  int stride = 1;   // conv/pool
  int padding = 0;  // conv/pool
  int radius = 0;   // LRN
  int inputs = 1;   // concat

  void validate() const;
};

// Region of the layer output whose every value can be reused, unclipped.
// Concat is rejected here; use concat_transform.
Rect transform_region(const Rect& rect, const LayerGeom& geom);
// Same, clipped to the output dimensions.
Rect transform_region(const Rect& rect, const LayerGeom& geom, int out_w,
                      int out_h);

// Overlap of all concatenated inputs' reusable rectangles.
Rect concat_transform(const std::vector<Rect>& rects, const LayerGeom& geom);

// Applies transform_region to both sides of every mapping, dropping those
// that vanish. Results keep dst.w == src.w, dst.h == src.h and pairwise
// disjoint dst rectangles.
std::vector<RegionMapping> propagate_mappings(
    const std::vector<RegionMapping>& mappings, const LayerGeom& geom,
    int out_w, int out_h);

// Concat over branches: mappings from different inputs are intersected on
// their dst overlap. Pairs that disagree on the src offset are dropped.
std::vector<RegionMapping> concat_mappings(
    const std::vector<std::vector<RegionMapping>>& inputs, int out_w,
    int out_h);

// Truncates dst rectangles (and their src) so no two overlap; earlier
// mappings keep priority.
std::vector<RegionMapping> trim_overlaps(std::vector<RegionMapping> mappings);

}  // namespace framecache
