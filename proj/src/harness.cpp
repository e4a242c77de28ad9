#include "framecache/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "framecache/image_io.hpp"

namespace framecache {

namespace fs = std::filesystem;

std::vector<fs::path> list_frame_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("frames path is not a directory: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  return files;
}

std::vector<Frame> load_frames(const fs::path& dir) {
  std::vector<Frame> frames;
  for (const fs::path& p : list_frame_files(dir)) frames.push_back(read_frame_file(p));
  if (frames.empty()) throw std::runtime_error("no PNM frames in " + dir.string());
  return frames;
}

std::vector<int> top_k(const FeatureMap& output, int k) {
  const auto values = output.data();
  std::vector<int> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)),
                                       idx.size());
  std::partial_sort(idx.begin(), idx.begin() + n, idx.end(), [&](int a, int b) {
    return values[a] != values[b] ? values[a] > values[b] : a < b;
  });
  idx.resize(n);
  return idx;
}

std::string format_output(const FeatureMap& output) {
  std::vector<int> idx;
  if (output.size() <= 5) {
    idx.resize(output.size());
    std::iota(idx.begin(), idx.end(), 0);
  } else {
    idx = top_k(output, 5);
  }
  std::ostringstream os;
  os << std::setprecision(9);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    os << (i ? ";" : "") << idx[i] << ':' << output.data()[idx[i]];
  }
  return os.str();
}

std::vector<FrameRecord> run_sequence(const ModelGraph& graph,
                                      const WeightStore& weights,
                                      const std::vector<Frame>& frames,
                                      const SessionOptions& options) {
  Session session(graph, weights, options);
  std::vector<FrameRecord> records;
  records.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    FrameResult r = session.run_frame(frames[i]);
    records.push_back({static_cast<int>(i + 1), std::move(r.metrics),
                       std::move(r.output)});
  }
  return records;
}

void write_run_csv(std::ostream& os, const std::vector<FrameRecord>& records) {
  os << kRunCsvHeader << '\n';
  for (const FrameRecord& r : records) {
    const FrameMetrics& m = r.metrics;
    os << r.index << ',' << std::setprecision(6) << m.match_ratio << ','
       << m.computed_macs << ',' << m.total_macs << ',' << m.copied_pixels
       << ',' << std::fixed << std::setprecision(3) << m.wall_time_ms
       << std::defaultfloat << ',' << (m.flushed ? 1 : 0) << ','
       << format_output(r.output) << '\n';
  }
}

nlohmann::ordered_json run_summary(const std::vector<FrameRecord>& records) {
  double ratio = 0.0, wall = 0.0;
  std::int64_t computed = 0, total = 0, copied = 0;
  int flushed = 0;
  for (const FrameRecord& r : records) {
    ratio += r.metrics.match_ratio;
    wall += r.metrics.wall_time_ms;
    computed += r.metrics.computed_macs;
    total += r.metrics.total_macs;
    copied += r.metrics.copied_pixels;
    flushed += r.metrics.flushed ? 1 : 0;
  }
  const double n = records.empty() ? 1.0 : static_cast<double>(records.size());
  return {
      {"frames", records.size()},
      {"flushed_frames", flushed},
      {"mean_match_ratio", ratio / n},
      {"mean_wall_time_ms", wall / n},
      {"total_computed_macs", computed},
      {"total_macs", total},
      {"computed_macs_fraction",
       total > 0 ? static_cast<double>(computed) / static_cast<double>(total) : 1.0},
      {"total_copied_pixels", copied},
  };
}

CompareReport compare_sequence(const ModelGraph& graph,
                               const WeightStore& weights,
                               const std::vector<Frame>& frames,
                               const SessionOptions& options) {
  SessionOptions plain = options;
  plain.cache_enabled = false;
  Session cached(graph, weights, options);
  Session oracle(graph, weights, plain);

  CompareReport report;
  std::int64_t computed = 0, total = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const FrameResult a = cached.run_frame(frames[i]);
    const FrameResult b = oracle.run_frame(frames[i]);
    CompareRecord rec;
    rec.index = static_cast<int>(i + 1);
    const auto va = a.output.data();
    const auto vb = b.output.data();
    double sq = 0.0;
    for (std::size_t j = 0; j < va.size(); ++j) {
      const double d = static_cast<double>(va[j]) - vb[j];
      sq += d * d;
      rec.max_abs_diff = std::max(rec.max_abs_diff, std::abs(d));
    }
    rec.mse = va.empty() ? 0.0 : sq / static_cast<double>(va.size());
    const int oracle_top = top_k(b.output, 1).at(0);
    const auto cached_top3 = top_k(a.output, 3);
    rec.top1_agree = cached_top3.at(0) == oracle_top;
    rec.top3_agree = std::find(cached_top3.begin(), cached_top3.end(),
                               oracle_top) != cached_top3.end();
    rec.match_ratio = a.metrics.match_ratio;
    rec.flushed = a.metrics.flushed;
    rec.computed_macs = a.metrics.computed_macs;
    rec.total_macs = a.metrics.total_macs;
    rec.wall_time_ms = a.metrics.wall_time_ms;
    rec.oracle_wall_time_ms = b.metrics.wall_time_ms;

    report.mean_mse += rec.mse;
    report.max_abs_diff = std::max(report.max_abs_diff, rec.max_abs_diff);
    report.top1_agreement += rec.top1_agree ? 1.0 : 0.0;
    report.top3_agreement += rec.top3_agree ? 1.0 : 0.0;
    report.mean_match_ratio += rec.match_ratio;
    report.mean_wall_time_ms += rec.wall_time_ms;
    report.mean_oracle_wall_time_ms += rec.oracle_wall_time_ms;
    computed += rec.computed_macs;
    total += rec.total_macs;
    report.frames.push_back(rec);
  }
  const double n = frames.empty() ? 1.0 : static_cast<double>(frames.size());
  report.mean_mse /= n;
  report.top1_agreement /= n;
  report.top3_agreement /= n;
  report.mean_match_ratio /= n;
  report.mean_wall_time_ms /= n;
  report.mean_oracle_wall_time_ms /= n;
  report.computed_macs_fraction =
      total > 0 ? static_cast<double>(computed) / static_cast<double>(total) : 1.0;
  return report;
}

nlohmann::ordered_json to_json(const CompareReport& report) {
  nlohmann::ordered_json frames = nlohmann::ordered_json::array();
  for (const CompareRecord& r : report.frames) {
    frames.push_back({
        {"frame", r.index},
        {"mse", r.mse},
        {"max_abs_diff", r.max_abs_diff},
        {"top1_agree", r.top1_agree},
        {"top3_agree", r.top3_agree},
        {"match_ratio", r.match_ratio},
        {"flushed", r.flushed},
        {"computed_macs", r.computed_macs},
        {"total_macs", r.total_macs},
        {"wall_time_ms", r.wall_time_ms},
        {"oracle_wall_time_ms", r.oracle_wall_time_ms},
    });
  }
  return {
      {"summary",
       {
           {"frames", report.frames.size()},
           {"mean_mse", report.mean_mse},
           {"max_abs_diff", report.max_abs_diff},
           {"top1_agreement", report.top1_agreement},
           {"top3_agreement", report.top3_agreement},
           {"mean_match_ratio", report.mean_match_ratio},
           {"computed_macs_fraction", report.computed_macs_fraction},
           {"mean_wall_time_ms", report.mean_wall_time_ms},
           {"mean_oracle_wall_time_ms", report.mean_oracle_wall_time_ms},
       }},
      {"frames", frames},
  };
}

SweepParameter parse_sweep_parameter(std::string_view name) {
  if (name == "threshold" || name == "threshold_T") return SweepParameter::kThreshold;
  if (name == "block-size" || name == "block_size") return SweepParameter::kBlockSize;
  if (name == "expire" || name == "expire_N") return SweepParameter::kExpire;
  throw std::invalid_argument("unknown sweep parameter '" + std::string(name) +
                              "' (threshold, block-size, expire)");
}

std::string_view to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::kThreshold: return "threshold";
    case SweepParameter::kBlockSize: return "block-size";
    case SweepParameter::kExpire: return "expire";
  }
  return "?";
}

std::vector<SweepRow> sweep(const ModelGraph& graph, const WeightStore& weights,
                            const std::vector<Frame>& frames,
                            const SessionOptions& base, SweepParameter parameter,
                            const std::vector<double>& values) {
  if (values.size() < 2) throw std::invalid_argument("sweep needs at least 2 values");
  std::vector<SweepRow> rows;
  for (double v : values) {
    SessionOptions opts = base;
    switch (parameter) {
      case SweepParameter::kThreshold: opts.matcher.threshold = v; break;
      case SweepParameter::kBlockSize:
        opts.matcher.block_size = static_cast<int>(v);
        break;
      case SweepParameter::kExpire: opts.expire_n = static_cast<int>(v); break;
    }
    const CompareReport r = compare_sequence(graph, weights, frames, opts);
    SweepRow row;
    row.value = v;
    row.match_ratio = r.mean_match_ratio;
    row.mse = r.mean_mse;
    row.wall_time_ms = r.mean_wall_time_ms;
    for (const CompareRecord& f : r.frames) {
      row.computed_macs_fraction +=
          f.total_macs > 0 ? static_cast<double>(f.computed_macs) / f.total_macs : 1.0;
    }
    row.computed_macs_fraction /= static_cast<double>(std::max<std::size_t>(r.frames.size(), 1));
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, SweepParameter parameter,
                     const std::vector<SweepRow>& rows) {
  os << kSweepCsvHeader << '\n';
  os << std::setprecision(9);
  for (const SweepRow& r : rows) {
    os << to_string(parameter) << ',' << r.value << ',' << r.match_ratio << ','
       << r.computed_macs_fraction << ',' << r.mse << ',' << r.wall_time_ms
       << '\n';
  }
}

std::vector<BenchRow> bench_matcher(const std::vector<Frame>& frames,
                                    const MatcherConfig& base) {
  if (frames.size() < 2) throw std::invalid_argument("bench-matcher needs >= 2 frames");
  std::vector<BenchRow> rows;
  for (SearchStrategy strategy : {SearchStrategy::kExhaustive,
                                  SearchStrategy::kThreeStep,
                                  SearchStrategy::kDiamond}) {
    for (bool optimized : {false, true}) {
      MatcherConfig cfg = base;
      cfg.strategy = strategy;
      cfg.skip_k = optimized ? std::max(2, base.skip_k) : 1;
      cfg.reuse_psnr = optimized;
      std::vector<double> latencies;
      BenchRow row{strategy, optimized};
      double psnr_sum = 0.0;
      std::int64_t psnr_n = 0;
      for (std::size_t i = 1; i < frames.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        const MatchResult r = match_frames(frames[i], frames[i - 1], cfg);
        latencies.push_back(std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - start)
                                .count());
        row.mean_match_ratio += r.match_ratio;
        row.mean_searches += static_cast<double>(r.stats.searches);
        for (const BlockMatch& m : r.searched) psnr_sum += m.psnr;
        psnr_n += static_cast<std::int64_t>(r.searched.size());
      }
      const double n = static_cast<double>(latencies.size());
      row.pairs = static_cast<int>(latencies.size());
      row.mean_latency_ms =
          std::accumulate(latencies.begin(), latencies.end(), 0.0) / n;
      double var = 0.0;
      for (double l : latencies) var += (l - row.mean_latency_ms) * (l - row.mean_latency_ms);
      row.stddev_latency_ms = latencies.size() > 1 ? std::sqrt(var / (n - 1)) : 0.0;
      row.mean_match_ratio /= n;
      row.mean_searches /= n;
      row.mean_search_psnr = psnr_n > 0 ? psnr_sum / static_cast<double>(psnr_n) : 0.0;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << kBenchCsvHeader << '\n';
  os << std::setprecision(9);
  for (const BenchRow& r : rows) {
    os << to_string(r.strategy) << ',' << (r.optimized ? 1 : 0) << ',' << r.pairs
       << ',' << r.mean_latency_ms << ',' << r.stddev_latency_ms << ','
       << r.mean_match_ratio << ',' << r.mean_searches << ','
       << r.mean_search_psnr << '\n';
  }
}

}  // namespace framecache
