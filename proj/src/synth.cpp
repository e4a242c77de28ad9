#include "framecache/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace framecache {

namespace {

// Bilinear upsample of a random lattice with the given cell size.
std::vector<double> value_noise(int height, int width, int cell, SplitRng& rng) {
  const int gw = width / cell + 2, gh = height / cell + 2;
  std::vector<double> lattice(static_cast<std::size_t>(gw) * gh);
  for (double& v : lattice) v = rng.uniform(-1.0, 1.0);
  std::vector<double> out(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    const double fy = static_cast<double>(y) / cell;
    const int y0 = static_cast<int>(fy);
    const double ty = fy - y0;
    const double sy = ty * ty * (3 - 2 * ty);
    for (int x = 0; x < width; ++x) {
      const double fx = static_cast<double>(x) / cell;
      const int x0 = static_cast<int>(fx);
      const double tx = fx - x0;
      const double sx = tx * tx * (3 - 2 * tx);
      auto at = [&](int gx, int gy) { return lattice[gy * gw + gx]; };
      const double top = at(x0, y0) * (1 - sx) + at(x0 + 1, y0) * sx;
      const double bot = at(x0, y0 + 1) * (1 - sx) + at(x0 + 1, y0 + 1) * sx;
      out[static_cast<std::size_t>(y) * width + x] = top * (1 - sy) + bot * sy;
    }
  }
  return out;
}

std::uint8_t saturate(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

Frame textured_frame(int channels, int height, int width, std::uint64_t seed) {
  SplitRng rng(seed);
  Frame frame(channels, height, width);
  for (int c = 0; c < channels; ++c) {
    const auto coarse = value_noise(height, width, 16, rng);
    const auto mid = value_noise(height, width, 8, rng);
    const auto fine = value_noise(height, width, 4, rng);
    auto plane = frame.plane(c);
    for (std::size_t i = 0; i < plane.size(); ++i) {
      plane[i] = saturate(128.0 + 70.0 * coarse[i] + 35.0 * mid[i] +
                          15.0 * fine[i]);
    }
  }
  return frame;
}

Frame crop(const Frame& canvas, int x, int y, int width, int height) {
  if (x < 0 || y < 0 || x + width > canvas.width() ||
      y + height > canvas.height()) {
    throw std::out_of_range("crop outside canvas");
  }
  Frame out(canvas.channels(), height, width);
  for (int c = 0; c < canvas.channels(); ++c) {
    for (int r = 0; r < height; ++r) {
      const std::uint8_t* from = canvas.row(c, y + r) + x;
      std::copy(from, from + width, out.row(c, r));
    }
  }
  return out;
}

Frame add_noise(const Frame& frame, int amplitude, SplitRng& rng) {
  Frame out = frame;
  if (amplitude <= 0) return out;
  for (std::uint8_t& v : out.data()) {
    v = saturate(static_cast<double>(v) + rng.uniform_int(-amplitude, amplitude));
  }
  return out;
}

std::vector<Frame> synth_sequence(const SynthConfig& cfg) {
  if (cfg.width < 1 || cfg.height < 1 || cfg.frames < 1 ||
      (cfg.channels != 1 && cfg.channels != 3)) {
    throw std::invalid_argument("synth: invalid dimensions");
  }
  const int travel_x = std::abs(cfg.shift_x) * (cfg.frames - 1);
  const int travel_y = std::abs(cfg.shift_y) * (cfg.frames - 1);
  const Frame canvas = textured_frame(cfg.channels, cfg.height + travel_y,
                                      cfg.width + travel_x, cfg.seed);
  const int start_x = cfg.shift_x < 0 ? travel_x : 0;
  const int start_y = cfg.shift_y < 0 ? travel_y : 0;
  const int amplitude = static_cast<int>(std::lround(cfg.noise * 255.0));
  SplitRng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<Frame> frames;
  frames.reserve(cfg.frames);
  for (int t = 0; t < cfg.frames; ++t) {
    Frame f = crop(canvas, start_x + t * cfg.shift_x, start_y + t * cfg.shift_y,
                   cfg.width, cfg.height);
    if (cfg.square > 0) {
      // Bounces diagonally against the scene motion.
      const int range_x = std::max(1, cfg.width - cfg.square);
      const int range_y = std::max(1, cfg.height - cfg.square);
      auto bounce = [](int pos, int range) {
        const int period = 2 * range;
        const int m = ((pos % period) + period) % period;
        return m < range ? m : period - m;
      };
      const int sx = bounce(3 * t, range_x), sy = bounce(2 * t, range_y);
      for (int c = 0; c < cfg.channels; ++c) {
        const std::uint8_t color = static_cast<std::uint8_t>(40 + 80 * c);
        for (int y = sy; y < std::min(cfg.height, sy + cfg.square); ++y) {
          for (int x = sx; x < std::min(cfg.width, sx + cfg.square); ++x) {
            f.at(c, y, x) = color;
          }
        }
      }
    }
    frames.push_back(add_noise(f, amplitude, rng));
  }
  return frames;
}

ModelGraph demo_model(int channels, int height, int width, int classes) {
  const std::string text =
      "# demo classifier\n"
      "input " + std::to_string(channels) + " " + std::to_string(height) + " " +
      std::to_string(width) + "\n"
      "conv1 conv k=5 s=1 p=2 out_ch=8 in=data out=conv1\n"
      "relu1 relu in=conv1 out=relu1\n"
      "pool1 pool k=2 s=2 p=0 mode=max in=relu1 out=pool1\n"
      "conv2 conv k=3 s=1 p=1 out_ch=16 in=pool1 out=conv2\n"
      "relu2 relu in=conv2 out=relu2\n"
      "pool2 pool k=2 s=2 p=0 mode=max in=relu2 out=pool2\n"
      "fc1 fc out=" + std::to_string(classes) + " in=pool2 out=fc1\n"
      "prob softmax in=fc1 out=prob\n";
  return parse_model(text);
}

WeightStore random_weights(const ModelGraph& graph, std::uint64_t seed) {
  SplitRng rng(seed);
  WeightStore store;
  for (const LayerSpec* l : graph.declaration_order()) {
    if (!l->has_params()) continue;
    auto [nw, nb] = graph.param_counts(*l);
    const double fan_in = static_cast<double>(nw / std::max<std::int64_t>(nb, 1));
    const double scale = 1.0 / std::sqrt(std::max(1.0, fan_in));
    LayerWeights& lw = store[l->name];
    lw.weights.resize(static_cast<std::size_t>(nw));
    lw.bias.resize(static_cast<std::size_t>(nb));
    for (float& w : lw.weights) w = static_cast<float>(rng.uniform(-scale, scale));
    for (float& b : lw.bias) b = static_cast<float>(rng.uniform(-0.1, 0.1));
  }
  return store;
}

}  // namespace framecache
