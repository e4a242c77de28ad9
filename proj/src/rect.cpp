#include "framecache/rect.hpp"

#include <algorithm>

namespace framecache {

std::ostream& operator<<(std::ostream& os, const Rect& r) {
  return os << '(' << r.x << ',' << r.y << ',' << r.w << ',' << r.h << ')';
}

std::ostream& operator<<(std::ostream& os, const RegionMapping& m) {
  return os << m.dst << "->" << m.src;
}

Rect normalized(Rect r) {
  if (r.empty()) return Rect{};
  return r;
}

Rect rect_intersect(const Rect& a, const Rect& b) {
  if (a.empty() || b.empty()) return Rect{};
  const int x0 = std::max(a.x, b.x);
  const int y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.right(), b.right());
  const int y1 = std::min(a.bottom(), b.bottom());
  return normalized(Rect{x0, y0, x1 - x0, y1 - y0});
}

Rect rect_clip(const Rect& r, int bounds_w, int bounds_h) {
  return rect_intersect(r, Rect{0, 0, bounds_w, bounds_h});
}

Rect rect_translate(const Rect& r, int dx, int dy) {
  if (r.empty()) return Rect{};
  return Rect{r.x + dx, r.y + dy, r.w, r.h};
}

bool rect_contains(const Rect& outer, const Rect& inner) {
  if (inner.empty()) return true;
  return inner.x >= outer.x && inner.y >= outer.y &&
         inner.right() <= outer.right() && inner.bottom() <= outer.bottom();
}

bool rect_overlaps(const Rect& a, const Rect& b) {
  return !rect_intersect(a, b).empty();
}

}  // namespace framecache
