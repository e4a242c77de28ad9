#include "framecache/engine.hpp"

#include <chrono>
#include <stdexcept>

#include "framecache/image_io.hpp"
#include "framecache/layers.hpp"
#include "framecache/propagation.hpp"

namespace framecache {

namespace {

FeatureMap forward_layer(const LayerSpec& layer, const WeightStore& weights,
                         const std::vector<const FeatureMap*>& in) {
  switch (layer.kind) {
    case LayerKind::kConv: return conv_forward(*in[0], layer, weights.at(layer.name));
    case LayerKind::kPool: return pool_forward(*in[0], layer);
    case LayerKind::kFC: return fc_forward(*in[0], layer, weights.at(layer.name));
    case LayerKind::kLRN: return lrn_forward(*in[0], layer);
    case LayerKind::kSoftmax: return softmax_forward(*in[0]);
    case LayerKind::kConcat: return concat_forward(in);
    case LayerKind::kReLU:
    case LayerKind::kScale:
    case LayerKind::kBias: return elementwise_forward(*in[0], layer);
  }
  throw std::logic_error("unhandled layer kind");
}

std::vector<const FeatureMap*> gather_inputs(
    const LayerSpec& layer, const std::map<std::string, FeatureMap>& blobs) {
  std::vector<const FeatureMap*> in;
  for (const std::string& name : layer.inputs) {
    auto it = blobs.find(name);
    if (it == blobs.end()) {
      throw std::logic_error("blob '" + name + "' not computed before layer '" +
                             layer.name + "'");
    }
    in.push_back(&it->second);
  }
  return in;
}

void check_input(const ModelGraph& graph, const FeatureMap& input) {
  if (shape_of(input) != graph.input_shape) {
    throw std::invalid_argument(
        "input is " + std::to_string(input.channels()) + "x" +
        std::to_string(input.height()) + "x" + std::to_string(input.width()) +
        ", model expects " + std::to_string(graph.input_shape.c) + "x" +
        std::to_string(graph.input_shape.h) + "x" +
        std::to_string(graph.input_shape.w));
  }
}

}  // namespace

FeatureMap forward_plain(const ModelGraph& graph, const WeightStore& weights,
                         const FeatureMap& input) {
  check_input(graph, input);
  std::map<std::string, FeatureMap> blobs;
  blobs.emplace(graph.input_blob, input);
  for (const LayerSpec& layer : graph.layers) {
    FeatureMap out = forward_layer(layer, weights, gather_inputs(layer, blobs));
    blobs.insert_or_assign(layer.output, std::move(out));
  }
  return blobs.at(graph.output_blob());
}

Session::Session(ModelGraph graph, WeightStore weights, SessionOptions options)
    : graph_(std::move(graph)), weights_(std::move(weights)),
      options_(std::move(options)) {
  options_.matcher.validate();
  if (options_.expire_n < 1) throw std::invalid_argument("expire_n must be >= 1");
  for (const LayerSpec& l : graph_.layers) {
    if (l.has_params()) {
      auto [nw, nb] = graph_.param_counts(l);
      const LayerWeights& lw = weights_.at(l.name);
      if (static_cast<std::int64_t>(lw.weights.size()) != nw ||
          static_cast<std::int64_t>(lw.bias.size()) != nb) {
        throw std::invalid_argument("weights for layer '" + l.name +
                                    "' do not match the model");
      }
    }
  }
  cache_.expire_n = options_.expire_n;
}

FeatureMap Session::to_input(const Frame& frame) const {
  const Shape& in = graph_.input_shape;
  if (frame.channels() != in.c || frame.height() != in.h ||
      frame.width() != in.w) {
    throw std::invalid_argument(
        "frame is " + std::to_string(frame.channels()) + "x" +
        std::to_string(frame.height()) + "x" + std::to_string(frame.width()) +
        ", model expects " + std::to_string(in.c) + "x" + std::to_string(in.h) +
        "x" + std::to_string(in.w));
  }
  return preprocess(frame, options_.mean, options_.scale);
}

FrameResult Session::run_frame(const Frame& frame) {
  const auto start = std::chrono::steady_clock::now();
  FrameResult result;
  FrameMetrics& m = result.metrics;
  const FeatureMap input = to_input(frame);

  if (!options_.cache_enabled) {
    result.output = forward_plain(graph_, weights_, input);
    for (const LayerSpec& l : graph_.layers) {
      if (l.kind != LayerKind::kConv) continue;
      const Shape& in = graph_.blob_shape(l.inputs[0]);
      const std::int64_t macs = conv_total_macs(in, l);
      m.layers.push_back({l.name, macs, macs, 0, in.c, l.geom.kernel});
      m.computed_macs += macs;
      m.total_macs += macs;
    }
  } else {
    const bool flush = cache_.flush_due();
    std::vector<RegionMapping> mappings;
    if (!flush) {
      MatchResult match = match_frames(frame, *cache_.prev_frame, options_.matcher);
      m.match_ratio = match.match_ratio;
      m.global_motion = match.global_motion;
      m.match_stats = match.stats;
      mappings = std::move(match.mappings);
    }
    result.output = run_cached(input, mappings, flush, m);
    m.flushed = flush;
    cache_.frames_since_flush = flush ? 1 : cache_.frames_since_flush + 1;
    cache_.prev_frame = frame;
  }

  m.wall_time_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return result;
}

FeatureMap Session::run_cached(const FeatureMap& input,
                               const std::vector<RegionMapping>& input_mappings,
                               bool flush, FrameMetrics& metrics) {
  std::map<std::string, FeatureMap> blobs;
  std::map<std::string, std::vector<RegionMapping>> regions;
  blobs.emplace(graph_.input_blob, input);
  regions.emplace(graph_.input_blob, input_mappings);
  static const FeatureMap kNoCache;

  for (const LayerSpec& layer : graph_.layers) {
    const Shape& out_shape = graph_.blob_shape(layer.output);
    std::vector<RegionMapping> out_regions;
    if (!flush) {
      if (layer.kind == LayerKind::kConcat) {
        std::vector<std::vector<RegionMapping>> per_input;
        for (const std::string& in : layer.inputs) per_input.push_back(regions.at(in));
        out_regions = concat_mappings(per_input, out_shape.w, out_shape.h);
      } else {
        out_regions = propagate_mappings(regions.at(layer.inputs[0]), layer.geom,
                                         out_shape.w, out_shape.h);
      }
    }

    const auto in = gather_inputs(layer, blobs);
    if (layer.kind == LayerKind::kConv) {
      auto cached = cache_.conv_outputs.find(layer.name);
      if (cached == cache_.conv_outputs.end()) out_regions.clear();
      CachedConvResult r = conv_forward_cached(
          *in[0], layer, weights_.at(layer.name),
          cached == cache_.conv_outputs.end() ? kNoCache : cached->second,
          out_regions);
      const std::int64_t total = conv_total_macs(shape_of(*in[0]), layer);
      metrics.layers.push_back({layer.name, r.computed_macs, total,
                                r.copied_elements, in[0]->channels(),
                                layer.geom.kernel});
      metrics.computed_macs += r.computed_macs;
      metrics.total_macs += total;
      metrics.copied_pixels += r.copied_elements;
      cache_.conv_outputs.insert_or_assign(layer.name, r.output);
      blobs.insert_or_assign(layer.output, std::move(r.output));
    } else {
      blobs.insert_or_assign(layer.output, forward_layer(layer, weights_, in));
    }
    regions.insert_or_assign(layer.output, std::move(out_regions));
  }
  return blobs.at(graph_.output_blob());
}

}  // namespace framecache
