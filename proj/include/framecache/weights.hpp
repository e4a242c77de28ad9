#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "framecache/model.hpp"

namespace framecache {

// conv: weights [out_ch][in_ch][k][k]; fc: weights [out][in].
struct LayerWeights {
  std::vector<float> weights;
  std::vector<float> bias;
};

class WeightStore {
 public:
  const LayerWeights& at(const std::string& layer) const;
  LayerWeights& operator[](const std::string& layer) { return layers_[layer]; }
  bool contains(const std::string& layer) const {
    return layers_.count(layer) != 0;
  }
  std::size_t size() const { return layers_.size(); }

 private:
  std::map<std::string, LayerWeights> layers_;
};

// Little-endian float32 stream, one segment per parameterized layer in
// declaration order: weights then biases.
WeightStore load_weights(std::span<const std::uint8_t> blob,
                         const ModelGraph& graph);
std::vector<std::uint8_t> serialize_weights(const WeightStore& weights,
                                            const ModelGraph& graph);

}  // namespace framecache
