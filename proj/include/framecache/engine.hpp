#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "framecache/matcher.hpp"
#include "framecache/model.hpp"
#include "framecache/tensor.hpp"
#include "framecache/weights.hpp"

namespace framecache {

struct SessionOptions {
  MatcherConfig matcher;
  // Frames between forced full computations.
  int expire_n = 10;
  bool cache_enabled = true;
  std::vector<float> mean{0.0f};
  float scale = 1.0f;
};

// State carried from one frame to the next.
struct CacheStore {
  std::optional<Frame> prev_frame;
  std::map<std::string, FeatureMap> conv_outputs;
  int frames_since_flush = 0;
  int expire_n = 10;

  bool flush_due() const {
    return !prev_frame || frames_since_flush >= expire_n;
  }
  void clear() {
    prev_frame.reset();
    conv_outputs.clear();
    frames_since_flush = 0;
  }
};

struct ConvLayerMetrics {
  std::string name;
  std::int64_t computed_macs = 0;
  std::int64_t total_macs = 0;
  std::int64_t copied_elements = 0;
  int in_channels = 0;
  int kernel = 0;
};

struct FrameMetrics {
  double match_ratio = 0.0;
  std::int64_t computed_macs = 0;
  std::int64_t total_macs = 0;
  std::int64_t copied_pixels = 0;  // output elements copied, all conv layers
  double wall_time_ms = 0.0;
  bool flushed = false;
  Offset global_motion;
  MatchStats match_stats;
  std::vector<ConvLayerMetrics> layers;
};

struct FrameResult {
  FeatureMap output;
  FrameMetrics metrics;
};

// Reference forward pass with no cache code path at all.
FeatureMap forward_plain(const ModelGraph& graph, const WeightStore& weights,
                         const FeatureMap& input);

// Inference over a frame sequence with cross-frame reuse of conv outputs.
// A session owns its cache; use one session per sequence.
class Session {
 public:
  Session(ModelGraph graph, WeightStore weights, SessionOptions options = {});

  FrameResult run_frame(const Frame& frame);

  const CacheStore& cache() const { return cache_; }
  const ModelGraph& graph() const { return graph_; }
  const SessionOptions& options() const { return options_; }
  void reset() { cache_.clear(); }

 private:
  FeatureMap to_input(const Frame& frame) const;
  FeatureMap run_cached(const FeatureMap& input,
                        const std::vector<RegionMapping>& input_mappings,
                        bool flush, FrameMetrics& metrics);

  ModelGraph graph_;
  WeightStore weights_;
  SessionOptions options_;
  CacheStore cache_;
};

}  // namespace framecache
