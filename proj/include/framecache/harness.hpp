#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "framecache/engine.hpp"
#include "framecache/matcher.hpp"
#include "framecache/model.hpp"
#include "framecache/weights.hpp"

namespace framecache {

// CSV headers; field order is part of the file format.
inline constexpr std::string_view kRunCsvHeader =
    "frame,match_ratio,computed_macs,total_macs,copied_pixels,wall_time_ms,"
    "flushed,output";
inline constexpr std::string_view kSweepCsvHeader =
    "parameter,value,match_ratio,computed_macs_fraction,mse,wall_time_ms";
inline constexpr std::string_view kBenchCsvHeader =
    "strategy,optimized,pairs,mean_latency_ms,stddev_latency_ms,"
    "mean_match_ratio,mean_searches,mean_search_psnr";

// PNM files of a directory in lexicographic order.
std::vector<std::filesystem::path> list_frame_files(
    const std::filesystem::path& dir);
std::vector<Frame> load_frames(const std::filesystem::path& dir);

// Indices of the k largest values, ties by lower index.
std::vector<int> top_k(const FeatureMap& output, int k);
// "index:value" pairs joined by ';' for the top 5 (all values when the
// output has 5 or fewer elements, in index order).
std::string format_output(const FeatureMap& output);

struct FrameRecord {
  int index = 0;  // 1-based
  FrameMetrics metrics;
  FeatureMap output;
};

std::vector<FrameRecord> run_sequence(const ModelGraph& graph,
                                      const WeightStore& weights,
                                      const std::vector<Frame>& frames,
                                      const SessionOptions& options);
void write_run_csv(std::ostream& os, const std::vector<FrameRecord>& records);
nlohmann::ordered_json run_summary(const std::vector<FrameRecord>& records);

struct CompareRecord {
  int index = 0;
  double mse = 0.0;
  double max_abs_diff = 0.0;
  bool top1_agree = true;
  // The uncached top-1 class is among the cached top-3.
  bool top3_agree = true;
  double match_ratio = 0.0;
  bool flushed = false;
  std::int64_t computed_macs = 0;
  std::int64_t total_macs = 0;
  double wall_time_ms = 0.0;  // cached session
  double oracle_wall_time_ms = 0.0;
};

struct CompareReport {
  std::vector<CompareRecord> frames;
  double mean_mse = 0.0;
  double max_abs_diff = 0.0;
  double top1_agreement = 0.0;
  double top3_agreement = 0.0;
  double mean_match_ratio = 0.0;
  double computed_macs_fraction = 0.0;
  double mean_wall_time_ms = 0.0;
  double mean_oracle_wall_time_ms = 0.0;
};

// Runs the cached session and a cache-free session in lockstep.
CompareReport compare_sequence(const ModelGraph& graph,
                               const WeightStore& weights,
                               const std::vector<Frame>& frames,
                               const SessionOptions& options);
nlohmann::ordered_json to_json(const CompareReport& report);

enum class SweepParameter { kThreshold, kBlockSize, kExpire };
SweepParameter parse_sweep_parameter(std::string_view name);
std::string_view to_string(SweepParameter p);

struct SweepRow {
  double value = 0.0;
  double match_ratio = 0.0;
  double computed_macs_fraction = 0.0;
  double mse = 0.0;
  double wall_time_ms = 0.0;
};

std::vector<SweepRow> sweep(const ModelGraph& graph, const WeightStore& weights,
                            const std::vector<Frame>& frames,
                            const SessionOptions& base, SweepParameter parameter,
                            const std::vector<double>& values);
void write_sweep_csv(std::ostream& os, SweepParameter parameter,
                     const std::vector<SweepRow>& rows);

struct BenchRow {
  SearchStrategy strategy = SearchStrategy::kDiamond;
  bool optimized = false;
  int pairs = 0;
  double mean_latency_ms = 0.0;
  double stddev_latency_ms = 0.0;
  double mean_match_ratio = 0.0;
  double mean_searches = 0.0;
  double mean_search_psnr = 0.0;
};

// Every strategy, with and without k-skip + PSNR reuse, over consecutive
// frame pairs. `base` supplies block size, threshold, range and the k used
// when optimized (at least 2).
std::vector<BenchRow> bench_matcher(const std::vector<Frame>& frames,
                                    const MatcherConfig& base);
void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows);

}  // namespace framecache
