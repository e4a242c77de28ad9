#pragma once

#include <cstdint>
#include <ostream>

namespace framecache {

// Integer rectangle, x = column and y = row of the left-top corner.
// Empty rectangles are kept in the canonical form (0, 0, 0, 0).
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool empty() const { return w <= 0 || h <= 0; }
  std::int64_t area() const {
    return empty() ? 0 : static_cast<std::int64_t>(w) * h;
  }
  int right() const { return x + w; }
  int bottom() const { return y + h; }

  friend bool operator==(const Rect&, const Rect&) = default;
};

std::ostream& operator<<(std::ostream& os, const Rect& r);

Rect normalized(Rect r);
Rect rect_intersect(const Rect& a, const Rect& b);
Rect rect_clip(const Rect& r, int bounds_w, int bounds_h);
Rect rect_translate(const Rect& r, int dx, int dy);
// True when `inner` lies entirely inside `outer`; empty rects are contained
// everywhere.
bool rect_contains(const Rect& outer, const Rect& inner);
bool rect_overlaps(const Rect& a, const Rect& b);

// Integer pixel displacement.
struct Offset {
  int dx = 0;
  int dy = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

// Reusable region link: `dst` in the current frame (or feature map) reuses
// the values found at `src` in the previous one. Both sides have equal size.
struct RegionMapping {
  Rect dst;
  Rect src;

  Offset offset() const { return {src.x - dst.x, src.y - dst.y}; }
  friend bool operator==(const RegionMapping&, const RegionMapping&) = default;
};

std::ostream& operator<<(std::ostream& os, const RegionMapping& m);

}  // namespace framecache
