// framecache: cached vs. uncached CNN inference over frame sequences.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "framecache/harness.hpp"
#include "framecache/image_io.hpp"
#include "framecache/synth.hpp"

namespace fs = std::filesystem;
using namespace framecache;

namespace {

struct CommonFlags {
  std::string model;
  std::string weights;
  std::string frames;
  int block_size = 10;
  std::string threshold = "20";
  int skip_k = 2;
  int search_range = 16;
  std::string strategy = "ds";
  bool no_psnr_reuse = false;
  int expire = 10;
  bool no_cache = false;
  std::string out;
  std::vector<float> mean{0.0f};
  float scale = 1.0f;
};

void add_matcher_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--block-size", f.block_size, "Grid block side in pixels")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--threshold", f.threshold,
                  "PSNR threshold in dB ('inf' disables reuse)");
  cmd->add_option("--skip-k", f.skip_k, "Step-2 grid stride")->check(CLI::PositiveNumber);
  cmd->add_option("--search-range", f.search_range, "Max offset per axis")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--strategy", f.strategy, "ds, tss or es");
  cmd->add_flag("--no-psnr-reuse", f.no_psnr_reuse,
                "Recompute verification PSNRs instead of reusing search results");
}

void add_model_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--model", f.model, "Model description file")->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--weights", f.weights, "Little-endian float32 weights")
      ->required()->check(CLI::ExistingFile);
  cmd->add_option("--frames", f.frames, "Directory of PGM/PPM frames")->required()
      ->check(CLI::ExistingDirectory);
  add_matcher_flags(cmd, f);
  cmd->add_option("--expire", f.expire, "Frames between full recomputations")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--no-cache", f.no_cache, "Disable cross-frame reuse");
  cmd->add_option("--mean", f.mean, "Per-channel mean (one or C values)")
      ->delimiter(',');
  cmd->add_option("--scale", f.scale, "Input scale applied after mean");
}

MatcherConfig matcher_config(const CommonFlags& f) {
  MatcherConfig cfg;
  cfg.block_size = f.block_size;
  cfg.threshold = std::stod(f.threshold);
  cfg.skip_k = f.skip_k;
  cfg.search_range = f.search_range;
  cfg.strategy = parse_strategy(f.strategy);
  cfg.reuse_psnr = !f.no_psnr_reuse;
  cfg.validate();
  return cfg;
}

SessionOptions session_options(const CommonFlags& f) {
  SessionOptions opts;
  opts.matcher = matcher_config(f);
  opts.expire_n = f.expire;
  opts.cache_enabled = !f.no_cache;
  opts.mean = f.mean;
  opts.scale = f.scale;
  return opts;
}

struct Loaded {
  ModelGraph graph;
  WeightStore weights;
  std::vector<Frame> frames;
};

Loaded load_inputs(const CommonFlags& f) {
  Loaded in;
  const auto text = read_binary_file(f.model);
  try {
    in.graph = parse_model(std::string(text.begin(), text.end()));
  } catch (const std::exception& e) {
    throw std::runtime_error(f.model + ": " + e.what());
  }
  try {
    in.weights = load_weights(read_binary_file(f.weights), in.graph);
  } catch (const std::exception& e) {
    throw std::runtime_error(f.weights + ": " + e.what());
  }
  in.frames = load_frames(f.frames);
  return in;
}

// Writes to `path`, or stdout when empty.
template <typename Fn>
void emit(const std::string& path, Fn&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write(os);
}

std::string summary_path(const std::string& out) {
  if (out.empty()) return {};
  fs::path p(out);
  p.replace_extension(".json");
  if (p == fs::path(out)) p += ".summary.json";
  return p.string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"framecache: reuse convolution results across video frames"};
  app.require_subcommand(1);

  CommonFlags run_f, cmp_f, sweep_f, bench_f;
  std::string summary_out;

  auto* run = app.add_subcommand("run", "Run inference over a frame directory");
  add_model_flags(run, run_f);
  run->add_option("--out", run_f.out, "Per-frame CSV (stdout if omitted)");
  run->add_option("--summary", summary_out,
                  "JSON summary (default: --out with .json extension)");

  auto* compare = app.add_subcommand("compare", "Compare cached output with uncached");
  add_model_flags(compare, cmp_f);
  compare->add_option("--out", cmp_f.out, "JSON report (stdout if omitted)");

  std::string sweep_param;
  std::vector<double> sweep_values;
  auto* sweep_cmd = app.add_subcommand("sweep", "Compare over a parameter sweep");
  add_model_flags(sweep_cmd, sweep_f);
  sweep_cmd->add_option("--param", sweep_param, "threshold, block-size or expire")
      ->required();
  sweep_cmd->add_option("--values", sweep_values, "Comma-separated values")
      ->required()->delimiter(',');
  sweep_cmd->add_option("--out", sweep_f.out, "CSV (stdout if omitted)");

  auto* bench = app.add_subcommand("bench-matcher", "Time the block matchers");
  bench->add_option("--frames", bench_f.frames, "Directory of PGM/PPM frames")
      ->required()->check(CLI::ExistingDirectory);
  add_matcher_flags(bench, bench_f);
  bench->add_option("--out", bench_f.out, "CSV (stdout if omitted)");

  SynthConfig synth_cfg;
  std::string synth_dir, model_out, weights_out;
  int classes = 10;
  std::uint64_t weight_seed = 7;
  auto* synth = app.add_subcommand("synth", "Write a synthetic frame sequence");
  synth->add_option("--out", synth_dir, "Output directory")->required();
  synth->add_option("--width", synth_cfg.width);
  synth->add_option("--height", synth_cfg.height);
  synth->add_option("--channels", synth_cfg.channels)->check(CLI::IsMember({1, 3}));
  synth->add_option("--frames", synth_cfg.frames)->check(CLI::PositiveNumber);
  synth->add_option("--shift-x", synth_cfg.shift_x, "Scene motion per frame");
  synth->add_option("--shift-y", synth_cfg.shift_y);
  synth->add_option("--noise", synth_cfg.noise, "Noise amplitude, fraction of 255");
  synth->add_option("--square", synth_cfg.square, "Moving square size (0 = none)");
  synth->add_option("--seed", synth_cfg.seed);
  synth->add_option("--model-out", model_out, "Also write a demo model here");
  synth->add_option("--weights-out", weights_out, "Also write random demo weights");
  synth->add_option("--classes", classes, "Demo model output size");
  synth->add_option("--weight-seed", weight_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const Loaded in = load_inputs(run_f);
      const auto records =
          run_sequence(in.graph, in.weights, in.frames, session_options(run_f));
      emit(run_f.out, [&](std::ostream& os) { write_run_csv(os, records); });
      const std::string sp = summary_out.empty() ? summary_path(run_f.out) : summary_out;
      const std::string summary = run_summary(records).dump(2);
      if (sp.empty()) {
        std::cerr << summary << '\n';
      } else {
        emit(sp, [&](std::ostream& os) { os << summary << '\n'; });
      }
    } else if (*compare) {
      const Loaded in = load_inputs(cmp_f);
      const auto report =
          compare_sequence(in.graph, in.weights, in.frames, session_options(cmp_f));
      emit(cmp_f.out, [&](std::ostream& os) { os << to_json(report).dump(2) << '\n'; });
    } else if (*sweep_cmd) {
      const SweepParameter param = parse_sweep_parameter(sweep_param);
      const Loaded in = load_inputs(sweep_f);
      const auto rows = sweep(in.graph, in.weights, in.frames,
                              session_options(sweep_f), param, sweep_values);
      emit(sweep_f.out, [&](std::ostream& os) { write_sweep_csv(os, param, rows); });
    } else if (*bench) {
      const auto frames = load_frames(bench_f.frames);
      const auto rows = bench_matcher(frames, matcher_config(bench_f));
      emit(bench_f.out, [&](std::ostream& os) { write_bench_csv(os, rows); });
    } else if (*synth) {
      const auto frames = synth_sequence(synth_cfg);
      fs::create_directories(synth_dir);
      const char* ext = synth_cfg.channels == 1 ? "pgm" : "ppm";
      for (std::size_t i = 0; i < frames.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%05zu.%s", i + 1, ext);
        write_frame_file(fs::path(synth_dir) / name, frames[i]);
      }
      if (!model_out.empty() || !weights_out.empty()) {
        const ModelGraph graph = demo_model(synth_cfg.channels, synth_cfg.height,
                                            synth_cfg.width, classes);
        if (!model_out.empty()) {
          emit(model_out, [&](std::ostream& os) { os << serialize_model(graph); });
        }
        if (!weights_out.empty()) {
          write_binary_file(weights_out,
                            serialize_weights(random_weights(graph, weight_seed), graph));
        }
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
