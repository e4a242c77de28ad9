#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "framecache/model.hpp"
#include "framecache/tensor.hpp"
#include "framecache/weights.hpp"

namespace framecache {

// Seeded generator whose output does not depend on the standard library's
// distribution implementations.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next() % span);
  }

 private:
  std::mt19937_64 engine_;
};

// Smooth multi-scale texture, `channels` x `height` x `width`.
Frame textured_frame(int channels, int height, int width, std::uint64_t seed);

// Crop of `canvas` with left-top at (x, y).
Frame crop(const Frame& canvas, int x, int y, int width, int height);

struct SynthConfig {
  int width = 96;
  int height = 96;
  int channels = 3;
  int frames = 30;
  // Global translation of the scene per frame, pixels.
  int shift_x = 2;
  int shift_y = 0;
  // Per-pixel noise amplitude as a fraction of 255.
  double noise = 0.01;
  // Size of a square moving independently of the background; 0 disables.
  int square = 0;
  std::uint64_t seed = 1;
};

// Frame t shows the scene translated by t * shift: content at (x, y) in
// frame t appears at (x - shift_x, y - shift_y) in frame t+1.
std::vector<Frame> synth_sequence(const SynthConfig& cfg);

// Per-sample uniform noise in [-amplitude, amplitude], saturated to 0..255.
Frame add_noise(const Frame& frame, int amplitude, SplitRng& rng);

// Small conv-relu-pool-conv-relu-pool-fc-softmax classifier for the given
// input size.
ModelGraph demo_model(int channels, int height, int width, int classes = 10);

// Uniform weights in [-scale, scale] with scale = 1/sqrt(fan_in).
WeightStore random_weights(const ModelGraph& graph, std::uint64_t seed);

}  // namespace framecache
