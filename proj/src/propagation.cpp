#include "framecache/propagation.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

namespace framecache {

std::string_view to_string(LayerType t) {
  switch (t) {
    case LayerType::kConvolution: return "Convolution";
    case LayerType::kPooling: return "Pooling";
    case LayerType::kLRN: return "LRN";
    case LayerType::kConcat: return "Concat";
    case LayerType::kFullyConnected: return "FullyConnected";
    case LayerType::kSoftmax: return "Softmax";
    case LayerType::kElementwise: return "Elementwise";
  }
  return "?";
}

void LayerGeom::validate() const {
  if (type == LayerType::kConvolution || type == LayerType::kPooling) {
    if (kernel < 1 || stride < 1 || padding < 0) {
      throw std::invalid_argument(
          "invalid kernel/stride/padding for " + std::string(to_string(type)));
    }
  }
  if (type == LayerType::kLRN && radius < 0) {
    throw std::invalid_argument("LRN radius must be >= 0");
  }
  if (type == LayerType::kConcat && inputs < 1) {
    throw std::invalid_argument("concat needs at least one input");
  }
}

namespace {

int floor_div(int a, int b) {
  int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

int ceil_div(int a, int b) { return -floor_div(-a, b); }

}  // namespace

Rect transform_region(const Rect& rect, const LayerGeom& geom) {
  geom.validate();
  if (rect.empty()) return Rect{};
  switch (geom.type) {
    case LayerType::kConvolution:
    case LayerType::kPooling: {
      const int k = geom.kernel, s = geom.stride, p = geom.padding;
      if (rect.w < k || rect.h < k) return Rect{};
      return normalized(Rect{ceil_div(rect.x + p, s), ceil_div(rect.y + p, s),
                             floor_div(rect.w - k, s) + 1,
                             floor_div(rect.h - k, s) + 1});
    }
    case LayerType::kLRN: {
      const int r = geom.radius;
      if (rect.w <= 2 * r || rect.h <= 2 * r) return Rect{};
      return Rect{rect.x + r, rect.y + r, rect.w - 2 * r, rect.h - 2 * r};
    }
    case LayerType::kFullyConnected:
    case LayerType::kSoftmax:
      return Rect{};
    case LayerType::kElementwise:
      return rect;
    case LayerType::kConcat:
      break;
  }
  throw std::invalid_argument("transform_region: unsupported layer type " +
                              std::string(to_string(geom.type)));
}

Rect transform_region(const Rect& rect, const LayerGeom& geom, int out_w,
                      int out_h) {
  return rect_clip(transform_region(rect, geom), out_w, out_h);
}

Rect concat_transform(const std::vector<Rect>& rects, const LayerGeom& geom) {
  if (rects.empty()) return Rect{};
  if (geom.type == LayerType::kConcat &&
      static_cast<int>(rects.size()) != geom.inputs) {
    throw std::invalid_argument("concat_transform: expected " +
                                std::to_string(geom.inputs) + " rects, got " +
                                std::to_string(rects.size()));
  }
  Rect acc = rects.front();
  for (std::size_t i = 1; i < rects.size(); ++i) {
    acc = rect_intersect(acc, rects[i]);
  }
  return normalized(acc);
}

namespace {

// Largest piece of `r` lying outside `other` among the four side cuts.
Rect largest_remainder(const Rect& r, const Rect& other) {
  const std::array<Rect, 4> cuts = {{
      {r.x, r.y, other.x - r.x, r.h},                    // left
      {other.right(), r.y, r.right() - other.right(), r.h},  // right
      {r.x, r.y, r.w, other.y - r.y},                    // top
      {r.x, other.bottom(), r.w, r.bottom() - other.bottom()},  // bottom
  }};
  Rect best{};
  for (const Rect& c : cuts) {
    const Rect piece = rect_intersect(c, r);
    if (piece.area() > best.area()) best = piece;
  }
  return best;
}

}  // namespace

std::vector<RegionMapping> trim_overlaps(std::vector<RegionMapping> mappings) {
  std::vector<RegionMapping> kept;
  kept.reserve(mappings.size());
  for (RegionMapping m : mappings) {
    for (const RegionMapping& k : kept) {
      if (m.dst.empty()) break;
      if (!rect_overlaps(m.dst, k.dst)) continue;
      const Offset off = m.offset();
      m.dst = largest_remainder(m.dst, k.dst);
      m.src = rect_translate(m.dst, off.dx, off.dy);
    }
    if (!m.dst.empty()) kept.push_back(m);
  }
  return kept;
}

std::vector<RegionMapping> propagate_mappings(
    const std::vector<RegionMapping>& mappings, const LayerGeom& geom,
    int out_w, int out_h) {
  std::vector<RegionMapping> out;
  out.reserve(mappings.size());
  for (const RegionMapping& m : mappings) {
    Rect dst = transform_region(m.dst, geom, out_w, out_h);
    Rect src = transform_region(m.src, geom, out_w, out_h);
    if (dst.empty() || src.empty()) continue;
    const int w = std::min(dst.w, src.w);
    const int h = std::min(dst.h, src.h);
    dst.w = src.w = w;
    dst.h = src.h = h;
    out.push_back({dst, src});
  }
  return trim_overlaps(std::move(out));
}

std::vector<RegionMapping> concat_mappings(
    const std::vector<std::vector<RegionMapping>>& inputs, int out_w,
    int out_h) {
  if (inputs.empty()) return {};
  std::vector<RegionMapping> acc;
  for (const RegionMapping& m : inputs.front()) {
    const Rect dst = rect_clip(m.dst, out_w, out_h);
    if (!dst.empty()) {
      acc.push_back({dst, rect_translate(dst, m.offset().dx, m.offset().dy)});
    }
  }
  for (std::size_t i = 1; i < inputs.size(); ++i) {
    std::vector<RegionMapping> next;
    for (const RegionMapping& a : acc) {
      for (const RegionMapping& b : inputs[i]) {
        if (a.offset() != b.offset()) continue;
        const Rect overlap = rect_intersect(a.dst, b.dst);
        if (overlap.empty()) continue;
        next.push_back(
            {overlap, rect_translate(overlap, a.offset().dx, a.offset().dy)});
      }
    }
    acc = std::move(next);
  }
  // The src side must also stay inside the feature map.
  std::vector<RegionMapping> clipped;
  for (const RegionMapping& m : acc) {
    const Offset off = m.offset();
    const Rect src = rect_clip(m.src, out_w, out_h);
    const Rect dst = rect_translate(src, -off.dx, -off.dy);
    if (!src.empty()) clipped.push_back({dst, src});
  }
  return trim_overlaps(std::move(clipped));
}

}  // namespace framecache
