#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "framecache/propagation.hpp"
#include "framecache/tensor.hpp"

namespace framecache {

enum class LayerKind { kConv, kPool, kReLU, kLRN, kFC, kSoftmax, kConcat,
                       kScale, kBias };
enum class PoolMode { kMax, kAvg };

std::string_view to_string(LayerKind k);

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kReLU;
  LayerGeom geom;
  std::vector<std::string> inputs;
  std::string output;
  int decl_index = 0;  // position in the model text

  int out_channels = 0;  // conv
  int out_features = 0;  // fc
  PoolMode pool_mode = PoolMode::kMax;
  float lrn_alpha = 1e-4f;
  float lrn_beta = 0.75f;
  float lrn_bias = 1.0f;
  float scale = 1.0f;       // scale
  float bias_value = 0.0f;  // bias

  bool has_params() const {
    return kind == LayerKind::kConv || kind == LayerKind::kFC;
  }
};

struct ModelGraph {
  std::string input_blob = "data";
  Shape input_shape;
  // Topologically ordered.
  std::vector<LayerSpec> layers;
  std::map<std::string, Shape> blobs;

  const Shape& blob_shape(const std::string& name) const;
  const std::string& output_blob() const;
  // Layers in model-text order (the weight file order).
  std::vector<const LayerSpec*> declaration_order() const;
  // (weights, biases) element counts of a parameterized layer.
  std::pair<std::int64_t, std::int64_t> param_counts(
      const LayerSpec& layer) const;
  std::int64_t parameter_count() const;
};

class ModelError : public std::runtime_error {
 public:
  ModelError(int line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " +
                                          what
                                    : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Line-oriented model text:
//   input <C> <H> <W>
//   <name> <type> key=value... in=<blob>[,<blob>...] out=<blob>
ModelGraph parse_model(std::string_view text);
std::string serialize_model(const ModelGraph& graph);

// Output shape of `layer` for the given input shapes; throws ModelError on
// inconsistent dimensions.
Shape infer_output_shape(const LayerSpec& layer,
                         const std::vector<Shape>& inputs);

}  // namespace framecache
