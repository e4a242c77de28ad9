#include "framecache/weights.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

namespace framecache {

const LayerWeights& WeightStore::at(const std::string& layer) const {
  auto it = layers_.find(layer);
  if (it == layers_.end()) {
    throw std::runtime_error("no weights for layer '" + layer + "'");
  }
  return it->second;
}

namespace {

float read_le_float(const std::uint8_t* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                             (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

void write_le_float(std::vector<std::uint8_t>& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  out.push_back(static_cast<std::uint8_t>(bits));
  out.push_back(static_cast<std::uint8_t>(bits >> 8));
  out.push_back(static_cast<std::uint8_t>(bits >> 16));
  out.push_back(static_cast<std::uint8_t>(bits >> 24));
}

}  // namespace

WeightStore load_weights(std::span<const std::uint8_t> blob,
                         const ModelGraph& graph) {
  const std::int64_t expected = graph.parameter_count() * 4;
  if (static_cast<std::int64_t>(blob.size()) != expected) {
    throw std::runtime_error(
        "weight blob length mismatch: expected " + std::to_string(expected) +
        " bytes, got " + std::to_string(blob.size()));
  }
  WeightStore store;
  const std::uint8_t* p = blob.data();
  for (const LayerSpec* l : graph.declaration_order()) {
    if (!l->has_params()) continue;
    auto [nw, nb] = graph.param_counts(*l);
    LayerWeights& lw = store[l->name];
    lw.weights.resize(static_cast<std::size_t>(nw));
    lw.bias.resize(static_cast<std::size_t>(nb));
    for (float& w : lw.weights) {
      w = read_le_float(p);
      p += 4;
    }
    for (float& b : lw.bias) {
      b = read_le_float(p);
      p += 4;
    }
  }
  return store;
}

std::vector<std::uint8_t> serialize_weights(const WeightStore& weights,
                                            const ModelGraph& graph) {
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(graph.parameter_count() * 4));
  for (const LayerSpec* l : graph.declaration_order()) {
    if (!l->has_params()) continue;
    auto [nw, nb] = graph.param_counts(*l);
    const LayerWeights& lw = weights.at(l->name);
    if (static_cast<std::int64_t>(lw.weights.size()) != nw ||
        static_cast<std::int64_t>(lw.bias.size()) != nb) {
      throw std::runtime_error("weights for layer '" + l->name +
                               "' do not match the model");
    }
    for (float w : lw.weights) write_le_float(out, w);
    for (float b : lw.bias) write_le_float(out, b);
  }
  return out;
}

}  // namespace framecache
