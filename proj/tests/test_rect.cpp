#include <doctest.h>

#include <random>

#include "framecache/rect.hpp"
#include "oracles.hpp"

using namespace framecache;

TEST_CASE("rect_intersect examples") {
  CHECK(rect_intersect({0, 0, 10, 10}, {5, 5, 10, 10}) == Rect{5, 5, 5, 5});
  CHECK(rect_intersect({0, 0, 10, 10}, {0, 0, 10, 10}) == Rect{0, 0, 10, 10});
  const Rect touching = rect_intersect({0, 0, 4, 4}, {4, 0, 4, 4});
  CHECK(touching.empty());
  CHECK(touching == Rect{});
}

TEST_CASE("rect_clip examples") {
  CHECK(rect_clip({-2, -2, 5, 5}, 10, 10) == Rect{0, 0, 3, 3});
  CHECK(rect_clip({8, 8, 5, 5}, 10, 10) == Rect{8, 8, 2, 2});
  CHECK(rect_clip({0, 0, 3, 3}, 10, 10) == Rect{0, 0, 3, 3});
  CHECK(rect_clip({12, 0, 3, 3}, 10, 10) == Rect{});
  CHECK(rect_clip({0, 0, 3, 3}, 0, 0) == Rect{});
}

TEST_CASE("empty rects are normalized") {
  CHECK(normalized({3, 4, 0, 7}) == Rect{});
  CHECK(rect_translate(Rect{}, 5, 5) == Rect{});
  CHECK(Rect{1, 1, 0, 5}.area() == 0);
}

namespace {

Rect random_rect(std::mt19937& rng) {
  std::uniform_int_distribution<int> pos(-6, 12), size(0, 9);
  return {pos(rng), pos(rng), size(rng), size(rng)};
}

}  // namespace

TEST_CASE("rect_intersect matches pixel-set intersection and is a semilattice") {
  std::mt19937 rng(1234);
  for (int i = 0; i < 2000; ++i) {
    const Rect a = random_rect(rng), b = random_rect(rng), c = random_rect(rng);
    const Rect ab = rect_intersect(a, b);

    std::set<std::pair<int, int>> expect;
    const auto pa = oracle::pixels(a), pb = oracle::pixels(b);
    for (const auto& px : pa) {
      if (pb.count(px)) expect.insert(px);
    }
    REQUIRE(oracle::pixels(ab) == expect);

    CHECK(ab == rect_intersect(b, a));
    CHECK(rect_intersect(ab, c) == rect_intersect(a, rect_intersect(b, c)));
    CHECK(rect_intersect(a, a) == normalized(a));
  }
}

TEST_CASE("rect_clip result lies inside both the rect and the bounds") {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> bound(0, 10);
  for (int i = 0; i < 2000; ++i) {
    const Rect r = random_rect(rng);
    const int w = bound(rng), h = bound(rng);
    const Rect c = rect_clip(r, w, h);
    CHECK(rect_contains(r, c));
    CHECK(rect_contains({0, 0, w, h}, c));
    if (!c.empty()) {
      CHECK(c.x >= 0);
      CHECK(c.right() <= w);
      CHECK(c.y >= 0);
      CHECK(c.bottom() <= h);
    }
  }
}
