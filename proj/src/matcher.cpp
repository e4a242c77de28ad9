#include "framecache/matcher.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace framecache {

std::string_view to_string(SearchStrategy s) {
  switch (s) {
    case SearchStrategy::kDiamond: return "DS";
    case SearchStrategy::kThreeStep: return "TSS";
    case SearchStrategy::kExhaustive: return "ES";
  }
  return "?";
}

SearchStrategy parse_strategy(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "ds" || lower == "diamond") return SearchStrategy::kDiamond;
  if (lower == "tss" || lower == "three-step" || lower == "threestep") {
    return SearchStrategy::kThreeStep;
  }
  if (lower == "es" || lower == "exhaustive") {
    return SearchStrategy::kExhaustive;
  }
  throw std::invalid_argument("unknown search strategy '" + std::string(name) +
                              "'");
}

void MatcherConfig::validate() const {
  if (block_size < 1) throw std::invalid_argument("block_size must be >= 1");
  if (skip_k < 1) throw std::invalid_argument("skip_k must be >= 1");
  if (search_range < 0) {
    throw std::invalid_argument("search_range must be >= 0");
  }
  if (!(threshold > 0)) throw std::invalid_argument("threshold must be > 0");
}

void PsnrMemo::put(int block_index, Offset off, double value) {
  values_[{block_index, off.dx, off.dy}] = value;
}

const double* PsnrMemo::find(int block_index, Offset off) const {
  auto it = values_.find({block_index, off.dx, off.dy});
  return it == values_.end() ? nullptr : &it->second;
}

std::vector<Rect> partition_grid(int frame_w, int frame_h, int block_size) {
  if (block_size < 1) throw std::invalid_argument("block_size must be >= 1");
  if (frame_w < block_size || frame_h < block_size) {
    throw std::invalid_argument("frame too small");
  }
  const int cols = frame_w / block_size;
  const int rows = frame_h / block_size;
  std::vector<Rect> grid;
  grid.reserve(static_cast<std::size_t>(cols) * rows);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      grid.push_back({c * block_size, r * block_size, block_size, block_size});
    }
  }
  return grid;
}

std::int64_t block_sse(const Frame& a, const Rect& ra, const Frame& b,
                       const Rect& rb) {
  if (ra.w != rb.w || ra.h != rb.h || a.channels() != b.channels()) {
    throw std::invalid_argument("psnr: block dimension mismatch");
  }
  if (!rect_contains({0, 0, a.width(), a.height()}, ra) ||
      !rect_contains({0, 0, b.width(), b.height()}, rb)) {
    throw std::out_of_range("psnr: block outside frame");
  }
  std::int64_t sse = 0;
  for (int c = 0; c < a.channels(); ++c) {
    for (int y = 0; y < ra.h; ++y) {
      const std::uint8_t* pa = a.row(c, ra.y + y) + ra.x;
      const std::uint8_t* pb = b.row(c, rb.y + y) + rb.x;
      std::int32_t row_sse = 0;
      for (int x = 0; x < ra.w; ++x) {
        const std::int32_t d = static_cast<std::int32_t>(pa[x]) - pb[x];
        row_sse += d * d;
      }
      sse += row_sse;
    }
  }
  return sse;
}

double psnr_from_sse(std::int64_t sse, std::int64_t samples) {
  if (sse == 0 || samples == 0) return kPsnrMax;
  const double mse = static_cast<double>(sse) / static_cast<double>(samples);
  return std::min(kPsnrMax, 10.0 * std::log10(255.0 * 255.0 / mse));
}

double psnr(const Frame& a, const Rect& ra, const Frame& b, const Rect& rb) {
  const std::int64_t sse = block_sse(a, ra, b, rb);
  return psnr_from_sse(sse, ra.area() * a.channels());
}

namespace {

// Evaluates candidate offsets for one block and tracks the best one.
// Ordering: lower SSE, then smaller |dx|+|dy|, then smaller dy, then dx.
class CandidateSearch {
 public:
  CandidateSearch(const Frame& cur, const Frame& ref, const Rect& block,
                  int range)
      : cur_(cur), ref_(ref), block_(block), range_(range),
        ref_bounds_{0, 0, ref.width(), ref.height()} {}

  // Returns false when the candidate is outside the window or the frame.
  bool evaluate(Offset off) {
    if (std::abs(off.dx) > range_ || std::abs(off.dy) > range_) return false;
    const Rect cand = rect_translate(block_, off.dx, off.dy);
    if (!rect_contains(ref_bounds_, cand)) return false;
    std::int64_t sse = 0;
    if (auto it = std::find_if(seen_.begin(), seen_.end(),
                               [&](const Seen& s) { return s.off == off; });
        it != seen_.end()) {
      sse = it->sse;
    } else {
      sse = block_sse(cur_, block_, ref_, cand);
      seen_.push_back({off, sse});
    }
    if (!has_best_ || better(off, sse, best_, best_sse_)) {
      best_ = off;
      best_sse_ = sse;
      has_best_ = true;
    }
    return true;
  }

  Offset best() const { return best_; }
  std::int64_t best_sse() const { return best_sse_; }
  std::int64_t evaluations() const {
    return static_cast<std::int64_t>(seen_.size());
  }

  void export_to(PsnrMemo& memo, int block_index, std::int64_t samples) const {
    for (const Seen& s : seen_) {
      memo.put(block_index, s.off, psnr_from_sse(s.sse, samples));
    }
  }

 private:
  struct Seen {
    Offset off;
    std::int64_t sse;
  };

  static bool better(Offset a, std::int64_t sse_a, Offset b,
                     std::int64_t sse_b) {
    if (sse_a != sse_b) return sse_a < sse_b;
    const int la = std::abs(a.dx) + std::abs(a.dy);
    const int lb = std::abs(b.dx) + std::abs(b.dy);
    if (la != lb) return la < lb;
    if (a.dy != b.dy) return a.dy < b.dy;
    return a.dx < b.dx;
  }

  const Frame& cur_;
  const Frame& ref_;
  Rect block_;
  int range_;
  Rect ref_bounds_;
  std::vector<Seen> seen_;
  Offset best_;
  std::int64_t best_sse_ = 0;
  bool has_best_ = false;
};

constexpr std::array<Offset, 9> kLargeDiamond = {{
    {0, 0}, {0, -2}, {-1, -1}, {1, -1}, {-2, 0},
    {2, 0}, {-1, 1}, {1, 1}, {0, 2},
}};
constexpr std::array<Offset, 5> kSmallDiamond = {{
    {0, 0}, {0, -1}, {-1, 0}, {1, 0}, {0, 1},
}};

void diamond_search(CandidateSearch& search) {
  Offset center{0, 0};
  search.evaluate(center);
  // Each move strictly improves the (sse, tie-key) order, so this ends.
  for (;;) {
    for (const Offset& d : kLargeDiamond) {
      search.evaluate({center.dx + d.dx, center.dy + d.dy});
    }
    if (search.best() == center) break;
    center = search.best();
  }
  for (const Offset& d : kSmallDiamond) {
    search.evaluate({center.dx + d.dx, center.dy + d.dy});
  }
}

int three_step_rounds(int range) {
  if (range <= 0) return 0;
  int rounds = 0;
  while ((1 << rounds) < range) ++rounds;
  return std::max(rounds, 1);
}

void three_step_search(CandidateSearch& search, int range) {
  Offset center{0, 0};
  search.evaluate(center);
  const int rounds = three_step_rounds(range);
  for (int step = rounds > 0 ? 1 << (rounds - 1) : 0; step >= 1; step /= 2) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        search.evaluate({center.dx + dx * step, center.dy + dy * step});
      }
    }
    center = search.best();
  }
}

void exhaustive_search(CandidateSearch& search, int range) {
  for (int dy = -range; dy <= range; ++dy) {
    for (int dx = -range; dx <= range; ++dx) search.evaluate({dx, dy});
  }
}

}  // namespace

BlockMatch block_search(const Frame& cur, const Frame& ref, const Rect& block,
                        const MatcherConfig& cfg, std::int64_t* psnr_evals,
                        PsnrMemo* memo, int block_index) {
  if (!cur.same_shape(ref)) {
    throw std::invalid_argument("block_search: frame dimension mismatch");
  }
  if (block.empty() ||
      !rect_contains({0, 0, cur.width(), cur.height()}, block)) {
    throw std::out_of_range("block_search: block outside frame");
  }
  CandidateSearch search(cur, ref, block, cfg.search_range);
  switch (cfg.strategy) {
    case SearchStrategy::kDiamond: diamond_search(search); break;
    case SearchStrategy::kThreeStep:
      three_step_search(search, cfg.search_range);
      break;
    case SearchStrategy::kExhaustive:
      exhaustive_search(search, cfg.search_range);
      break;
  }
  const std::int64_t samples = block.area() * cur.channels();
  if (psnr_evals) *psnr_evals += search.evaluations();
  if (memo) search.export_to(*memo, block_index, samples);
  return {block, search.best(), psnr_from_sse(search.best_sse(), samples)};
}

namespace {

int round_mean(std::int64_t sum, std::int64_t count) {
  // Half away from zero.
  const std::int64_t mag = (2 * std::llabs(sum) + count) / (2 * count);
  return static_cast<int>(sum < 0 ? -mag : mag);
}

}  // namespace

Offset estimate_global_motion(const std::vector<BlockMatch>& matches,
                              double threshold) {
  std::int64_t sx = 0, sy = 0, k = 0;
  for (const BlockMatch& m : matches) {
    if (m.psnr > threshold) {
      sx += m.offset.dx;
      sy += m.offset.dy;
      ++k;
    }
  }
  if (k == 0) return {0, 0};
  return {round_mean(sx, k), round_mean(sy, k)};
}

std::vector<Rect> verify_blocks(const Frame& cur, const Frame& ref,
                                const std::vector<Rect>& grid, Offset motion,
                                const MatcherConfig& cfg, const PsnrMemo* memo,
                                MatchStats* stats) {
  const Rect ref_bounds{0, 0, ref.width(), ref.height()};
  std::vector<Rect> verified;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Rect& block = grid[i];
    const Rect shifted = rect_translate(block, motion.dx, motion.dy);
    if (!rect_contains(ref_bounds, shifted)) continue;
    double value = 0.0;
    const double* hit =
        memo ? memo->find(static_cast<int>(i), motion) : nullptr;
    if (hit) {
      value = *hit;
      if (stats) ++stats->memo_hits;
    } else {
      value = psnr(cur, block, ref, shifted);
      if (stats) ++stats->verify_psnr_evals;
    }
    if (value > cfg.threshold) verified.push_back(block);
  }
  return verified;
}

std::vector<RegionMapping> merge_blocks(const std::vector<Rect>& verified,
                                        Offset motion) {
  std::vector<Rect> blocks = verified;
  std::sort(blocks.begin(), blocks.end(), [](const Rect& a, const Rect& b) {
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  });

  // Pass 1: horizontal strips.
  std::vector<Rect> strips;
  for (const Rect& b : blocks) {
    if (!strips.empty()) {
      Rect& last = strips.back();
      if (last.y == b.y && last.h == b.h && last.right() == b.x) {
        last.w += b.w;
        continue;
      }
    }
    strips.push_back(b);
  }

  // Pass 2: stack strips with identical x-extent onto the rectangle that
  // ends right above them.
  std::vector<Rect> merged;
  for (const Rect& s : strips) {
    auto it = std::find_if(merged.begin(), merged.end(), [&](const Rect& m) {
      return m.x == s.x && m.w == s.w && m.bottom() == s.y;
    });
    if (it != merged.end()) {
      it->h += s.h;
    } else {
      merged.push_back(s);
    }
  }

  std::vector<RegionMapping> out;
  out.reserve(merged.size());
  for (const Rect& m : merged) {
    out.push_back({m, rect_translate(m, motion.dx, motion.dy)});
  }
  return out;
}

MatchResult match_frames(const Frame& cur, const Frame& ref,
                         const MatcherConfig& cfg) {
  cfg.validate();
  if (!cur.same_shape(ref)) {
    throw std::invalid_argument("match_frames: frame dimension mismatch");
  }
  MatchResult result;
  const std::vector<Rect> grid =
      partition_grid(cur.width(), cur.height(), cfg.block_size);
  result.grid_cols = cur.width() / cfg.block_size;
  result.grid_rows = cur.height() / cfg.block_size;

  // Step 2 on the k-skip subsample.
  PsnrMemo memo;
  for (int r = 0; r < result.grid_rows; r += cfg.skip_k) {
    for (int c = 0; c < result.grid_cols; c += cfg.skip_k) {
      const int index = r * result.grid_cols + c;
      result.searched.push_back(block_search(
          cur, ref, grid[index], cfg, &result.stats.search_psnr_evals,
          cfg.reuse_psnr ? &memo : nullptr, index));
      ++result.stats.searches;
    }
  }

  // Step 3.
  result.global_motion = estimate_global_motion(result.searched, cfg.threshold);

  // Step 4.
  result.verified =
      verify_blocks(cur, ref, grid, result.global_motion, cfg,
                    cfg.reuse_psnr ? &memo : nullptr, &result.stats);
  result.matched_block_count = static_cast<int>(result.verified.size());

  // Step 5.
  result.mappings = merge_blocks(result.verified, result.global_motion);
  std::int64_t covered = 0;
  for (const RegionMapping& m : result.mappings) covered += m.dst.area();
  result.match_ratio = static_cast<double>(covered) /
                       (static_cast<double>(cur.width()) * cur.height());
  return result;
}

}  // namespace framecache
