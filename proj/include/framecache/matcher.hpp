#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "framecache/rect.hpp"
#include "framecache/tensor.hpp"

namespace framecache {

enum class SearchStrategy { kDiamond, kThreeStep, kExhaustive };

std::string_view to_string(SearchStrategy s);
// Accepts "ds"/"diamond", "tss"/"three-step", "es"/"exhaustive".
SearchStrategy parse_strategy(std::string_view name);

// PSNR reported for identical blocks.
inline constexpr double kPsnrMax = 100.0;

struct MatcherConfig {
  int block_size = 10;
  // Minimum PSNR (dB) for a block pair to count as matched. Comparison is
  // strict, so +inf disables reuse entirely.
  double threshold = 20.0;
  // Step-2 grid stride; 1 searches every block.
  int skip_k = 2;
  int search_range = 16;
  SearchStrategy strategy = SearchStrategy::kDiamond;
  // Reuse Step-2 PSNR values during verification.
  bool reuse_psnr = true;

  void validate() const;
};

struct BlockMatch {
  Rect block;
  Offset offset;
  double psnr = 0.0;
};

// Work counters for one match_frames call.
struct MatchStats {
  std::int64_t searches = 0;           // Step-2 block_search invocations
  std::int64_t search_psnr_evals = 0;  // PSNRs evaluated during Step 2
  std::int64_t verify_psnr_evals = 0;  // PSNRs evaluated during Step 4
  std::int64_t memo_hits = 0;          // Step-4 PSNRs served from Step 2
};

struct MatchResult {
  std::vector<RegionMapping> mappings;
  Offset global_motion;
  double match_ratio = 0.0;
  int matched_block_count = 0;
  int grid_cols = 0;
  int grid_rows = 0;
  std::vector<BlockMatch> searched;  // Step-2 results, row-major
  std::vector<Rect> verified;        // Step-4 output
  MatchStats stats;
};

// Step-2 PSNR memo keyed by (grid block index, offset).
class PsnrMemo {
 public:
  void put(int block_index, Offset off, double psnr);
  const double* find(int block_index, Offset off) const;
  std::size_t size() const { return values_.size(); }

 private:
  std::map<std::tuple<int, int, int>, double> values_;
};

// Row-major tiling of the top-left region divisible by block_size.
std::vector<Rect> partition_grid(int frame_w, int frame_h, int block_size);

// Sum of squared differences over all channels between two equal-size blocks.
std::int64_t block_sse(const Frame& a, const Rect& ra, const Frame& b,
                       const Rect& rb);
double psnr_from_sse(std::int64_t sse, std::int64_t samples);
// 10*log10(255^2 / MSE) with MSE pooled over every channel; kPsnrMax when
// the blocks are identical.
double psnr(const Frame& a, const Rect& ra, const Frame& b, const Rect& rb);

// Finds the offset of `block` (inside `cur`) into `ref` that maximizes PSNR
// using the configured strategy. `psnr_evals`, when given, is incremented by
// the number of distinct candidates evaluated; `memo` receives every
// evaluated (offset, psnr) pair under `block_index`.
BlockMatch block_search(const Frame& cur, const Frame& ref, const Rect& block,
                        const MatcherConfig& cfg,
                        std::int64_t* psnr_evals = nullptr,
                        PsnrMemo* memo = nullptr, int block_index = -1);

// Mean offset over matches with psnr > threshold, rounded half away from
// zero per axis. (0, 0) when nothing passes.
Offset estimate_global_motion(const std::vector<BlockMatch>& matches,
                              double threshold);

// Step 4: blocks whose counterpart at +motion lies inside `ref` and has
// psnr > threshold. `memo` may be null.
std::vector<Rect> verify_blocks(const Frame& cur, const Frame& ref,
                                const std::vector<Rect>& grid, Offset motion,
                                const MatcherConfig& cfg, const PsnrMemo* memo,
                                MatchStats* stats = nullptr);

// Greedy merge: horizontal strips per row, then vertical stacking of strips
// with identical x-extent.
std::vector<RegionMapping> merge_blocks(const std::vector<Rect>& verified,
                                        Offset motion);

MatchResult match_frames(const Frame& cur, const Frame& ref,
                         const MatcherConfig& cfg);

}  // namespace framecache
