#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "framecache/harness.hpp"
#include "framecache/image_io.hpp"
#include "framecache/synth.hpp"

using namespace framecache;
namespace fs = std::filesystem;

namespace {

std::string first_line(const std::string& text) {
  return text.substr(0, text.find('\n'));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string golden(const char* name) {
  return first_line(slurp(fs::path(FRAMECACHE_GOLDEN_DIR) / name));
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

std::vector<Frame> noisy_sequence(int frames, double noise, std::uint64_t seed = 3) {
  SynthConfig sc;
  sc.width = sc.height = 48;
  sc.frames = frames;
  sc.noise = noise;
  sc.shift_x = 2;
  sc.seed = seed;
  return synth_sequence(sc);
}

struct Fixture {
  ModelGraph graph = demo_model(3, 48, 48, 10);
  WeightStore weights = random_weights(graph, 5);
};

}  // namespace

TEST_CASE("CSV headers match the golden files") {
  CHECK(std::string(kRunCsvHeader) == golden("run_header.csv"));
  CHECK(std::string(kSweepCsvHeader) == golden("sweep_header.csv"));
  CHECK(std::string(kBenchCsvHeader) == golden("bench_header.csv"));

  Fixture fx;
  std::ostringstream os;
  write_run_csv(os, run_sequence(fx.graph, fx.weights, noisy_sequence(3, 0.01), {}));
  const auto rows = lines(os.str());
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == kRunCsvHeader);
  CHECK(rows[1].rfind("1,0,", 0) == 0);
}

TEST_CASE("format_output and top_k") {
  const FeatureMap small(3, 1, 1, std::vector<float>{0.5f, 0.25f, 0.25f});
  CHECK(format_output(small) == "0:0.5;1:0.25;2:0.25");
  const FeatureMap big(7, 1, 1, std::vector<float>{1, 7, 3, 7, 5, 0, 2});
  CHECK(top_k(big, 3) == std::vector<int>{1, 3, 4});
  CHECK(format_output(big) == "1:7;3:7;4:5;2:3;6:2");
}

TEST_CASE("run with cache off computes everything") {
  Fixture fx;
  SessionOptions opts;
  opts.cache_enabled = false;
  for (const FrameRecord& r : run_sequence(fx.graph, fx.weights, noisy_sequence(5, 0.01), opts)) {
    CHECK(r.metrics.copied_pixels == 0);
    CHECK(r.metrics.computed_macs == r.metrics.total_macs);
  }
}

TEST_CASE("identical frames: match ratio equals grid coverage") {
  Fixture fx;
  const std::vector<Frame> frames(6, textured_frame(3, 48, 48, 8));
  const auto records = run_sequence(fx.graph, fx.weights, frames, {});
  for (std::size_t i = 1; i < records.size(); ++i) {
    CHECK(records[i].metrics.match_ratio == doctest::Approx(40.0 * 40.0 / (48.0 * 48.0)));
  }
}

TEST_CASE("expire 10 over 30 frames flushes frames 1, 11, 21") {
  Fixture fx;
  const auto records = run_sequence(fx.graph, fx.weights, noisy_sequence(30, 0.01), {});
  std::vector<int> flushed;
  for (const FrameRecord& r : records) {
    if (r.metrics.flushed) flushed.push_back(r.index);
  }
  CHECK(flushed == std::vector<int>{1, 11, 21});
  const auto summary = run_summary(records);
  CHECK(summary["flushed_frames"] == 3);
  CHECK(summary["frames"] == 30);
}

TEST_CASE("compare: identical frames and infinite threshold give zero MSE") {
  Fixture fx;
  const std::vector<Frame> same(8, textured_frame(3, 48, 48, 9));
  const CompareReport a = compare_sequence(fx.graph, fx.weights, same, {});
  for (const CompareRecord& r : a.frames) CHECK(r.mse == 0.0);
  CHECK(a.top1_agreement == 1.0);
  CHECK(a.mean_match_ratio > 0.0);

  SessionOptions inf;
  inf.matcher.threshold = std::numeric_limits<double>::infinity();
  const CompareReport b = compare_sequence(fx.graph, fx.weights, noisy_sequence(8, 0.05), inf);
  for (const CompareRecord& r : b.frames) {
    CHECK(r.mse == 0.0);
    CHECK(r.max_abs_diff == 0.0);
  }

  const CompareReport c = compare_sequence(fx.graph, fx.weights, noisy_sequence(12, 0.05), {});
  CHECK(std::isfinite(c.mean_mse));
  const auto j = to_json(c);
  CHECK(j["frames"].size() == 12);
  CHECK(j["summary"].contains("top3_agreement"));
  MESSAGE("noisy sequence mean MSE " << c.mean_mse << ", max |diff| " << c.max_abs_diff);
}

TEST_CASE("sweep threshold is monotone; expire 1 has zero MSE") {
  Fixture fx;
  const auto frames = noisy_sequence(12, 0.08);
  const auto t = sweep(fx.graph, fx.weights, frames, {}, SweepParameter::kThreshold,
                       {10, 20, 30});
  REQUIRE(t.size() == 3);
  CHECK(t[0].match_ratio >= t[1].match_ratio);
  CHECK(t[1].match_ratio >= t[2].match_ratio);

  const auto e = sweep(fx.graph, fx.weights, frames, {}, SweepParameter::kExpire, {1, 10});
  CHECK(e[0].mse == 0.0);
  CHECK(e[0].computed_macs_fraction == 1.0);

  std::ostringstream os;
  write_sweep_csv(os, SweepParameter::kExpire, e);
  const auto rows = lines(os.str());
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].rfind("expire,1,", 0) == 0);

  CHECK_THROWS(sweep(fx.graph, fx.weights, frames, {}, SweepParameter::kExpire, {1}));
  CHECK(parse_sweep_parameter("block-size") == SweepParameter::kBlockSize);
  CHECK_THROWS(parse_sweep_parameter("lr"));
}

TEST_CASE("larger blocks save more computation and lose more accuracy") {
  Fixture fx;
  const auto frames = noisy_sequence(12, 0.1);
  const auto rows = sweep(fx.graph, fx.weights, frames, {}, SweepParameter::kBlockSize,
                          {1, 10});
  MESSAGE("block 1: macs " << rows[0].computed_macs_fraction << " mse " << rows[0].mse
                           << " | block 10: macs " << rows[1].computed_macs_fraction
                           << " mse " << rows[1].mse);
  CHECK(rows[0].computed_macs_fraction > rows[1].computed_macs_fraction);
  CHECK(rows[0].mse < rows[1].mse);
}

TEST_CASE("bench_matcher") {
  SynthConfig sc;
  sc.width = sc.height = 96;
  sc.frames = 6;
  sc.noise = 0.02;
  const auto frames = synth_sequence(sc);
  const auto rows = bench_matcher(frames, MatcherConfig{});
  REQUIRE(rows.size() == 6);
  const BenchRow* es = nullptr;
  const BenchRow* ds = nullptr;
  for (const BenchRow& r : rows) {
    CHECK(r.pairs == 5);
    // 9 x 9 grid: all 81 blocks, or 5 x 5 with 2-skip.
    CHECK(r.mean_searches == (r.optimized ? 25.0 : 81.0));
    if (!r.optimized && r.strategy == SearchStrategy::kExhaustive) es = &r;
    if (!r.optimized && r.strategy == SearchStrategy::kDiamond) ds = &r;
  }
  REQUIRE(es);
  REQUIRE(ds);
  CHECK(es->mean_search_psnr >= ds->mean_search_psnr);
  CHECK(ds->mean_latency_ms < es->mean_latency_ms);

  std::ostringstream os;
  write_bench_csv(os, rows);
  CHECK(lines(os.str()).size() == 7);
  CHECK_THROWS(bench_matcher({frames[0]}, MatcherConfig{}));
}

TEST_CASE("list_frame_files sorts lexicographically and skips other files") {
  const fs::path dir = fs::temp_directory_path() / "framecache_list_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const Frame f(1, 10, 10, 7);
  for (const char* name : {"b.pgm", "a10.pgm", "a2.pgm"}) write_frame_file(dir / name, f);
  std::ofstream(dir / "notes.txt") << "x";
  const auto files = list_frame_files(dir);
  REQUIRE(files.size() == 3);
  CHECK(files[0].filename() == "a10.pgm");
  CHECK(files[1].filename() == "a2.pgm");
  CHECK(files[2].filename() == "b.pgm");
  CHECK(load_frames(dir).size() == 3);
  fs::remove_all(dir);
  CHECK_THROWS(load_frames(dir));
}

TEST_CASE("CLI end to end") {
  const fs::path dir = fs::temp_directory_path() / "framecache_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = FRAMECACHE_CLI;
  auto sh = [&](const std::string& args) {
    return std::system((cli + " " + args + " 2>" + (dir / "stderr.txt").string()).c_str());
  };
  const std::string d = dir.string();
  REQUIRE(sh("synth --out " + d + "/seq --frames 12 --width 48 --height 48 --model-out " + d +
             "/m.txt --weights-out " + d + "/w.bin") == 0);
  const std::string common =
      " --model " + d + "/m.txt --weights " + d + "/w.bin --frames " + d + "/seq";

  REQUIRE(sh("run" + common + " --out " + d + "/run.csv") == 0);
  const auto run_rows = lines(slurp(dir / "run.csv"));
  REQUIRE(run_rows.size() == 13);
  CHECK(run_rows[0] == golden("run_header.csv"));
  const auto summary = nlohmann::json::parse(slurp(dir / "run.json"));
  CHECK(summary["frames"] == 12);
  CHECK(summary["flushed_frames"] == 2);

  REQUIRE(sh("run" + common + " --no-cache --out " + d + "/nocache.csv") == 0);
  REQUIRE(sh("compare" + common + " --threshold inf --out " + d + "/cmp.json") == 0);
  const auto cmp = nlohmann::json::parse(slurp(dir / "cmp.json"));
  CHECK(cmp["summary"]["mean_mse"] == 0.0);

  REQUIRE(sh("sweep" + common + " --param threshold --values 10,20,30 --out " + d +
             "/sweep.csv") == 0);
  const auto sweep_rows = lines(slurp(dir / "sweep.csv"));
  REQUIRE(sweep_rows.size() == 4);
  CHECK(sweep_rows[0] == golden("sweep_header.csv"));

  REQUIRE(sh("bench-matcher --frames " + d + "/seq --out " + d + "/bench.csv") == 0);
  const auto bench_rows = lines(slurp(dir / "bench.csv"));
  REQUIRE(bench_rows.size() == 7);
  CHECK(bench_rows[0] == golden("bench_header.csv"));

  // Failures exit nonzero with a message naming the file.
  std::ofstream(dir / "bad.txt") << "input 3 48 48\nc1 warp in=data out=x\n";
  CHECK(sh("run --model " + d + "/bad.txt --weights " + d + "/w.bin --frames " + d + "/seq") != 0);
  CHECK(slurp(dir / "stderr.txt").find("unknown layer type") != std::string::npos);
  CHECK(sh("run --model " + d + "/m.txt --weights " + d + "/m.txt --frames " + d + "/seq") != 0);
  CHECK(slurp(dir / "stderr.txt").find("length mismatch") != std::string::npos);
  CHECK(sh("run" + common + " --strategy hex") != 0);
  fs::remove_all(dir);
}
