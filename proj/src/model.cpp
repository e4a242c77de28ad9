#include "framecache/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

namespace framecache {

std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kPool: return "pool";
    case LayerKind::kReLU: return "relu";
    case LayerKind::kLRN: return "lrn";
    case LayerKind::kFC: return "fc";
    case LayerKind::kSoftmax: return "softmax";
    case LayerKind::kConcat: return "concat";
    case LayerKind::kScale: return "scale";
    case LayerKind::kBias: return "bias";
  }
  return "?";
}

const Shape& ModelGraph::blob_shape(const std::string& name) const {
  auto it = blobs.find(name);
  if (it == blobs.end()) throw ModelError(0, "unknown blob '" + name + "'");
  return it->second;
}

const std::string& ModelGraph::output_blob() const {
  if (layers.empty()) return input_blob;
  return layers.back().output;
}

std::vector<const LayerSpec*> ModelGraph::declaration_order() const {
  std::vector<const LayerSpec*> order;
  for (const LayerSpec& l : layers) order.push_back(&l);
  std::sort(order.begin(), order.end(),
            [](const LayerSpec* a, const LayerSpec* b) {
              return a->decl_index < b->decl_index;
            });
  return order;
}

std::pair<std::int64_t, std::int64_t> ModelGraph::param_counts(
    const LayerSpec& layer) const {
  const Shape& in = blob_shape(layer.inputs.at(0));
  if (layer.kind == LayerKind::kConv) {
    const std::int64_t k = layer.geom.kernel;
    return {static_cast<std::int64_t>(layer.out_channels) * in.c * k * k,
            layer.out_channels};
  }
  if (layer.kind == LayerKind::kFC) {
    return {static_cast<std::int64_t>(layer.out_features) * in.count(),
            layer.out_features};
  }
  return {0, 0};
}

std::int64_t ModelGraph::parameter_count() const {
  std::int64_t total = 0;
  for (const LayerSpec& l : layers) {
    auto [w, b] = param_counts(l);
    total += w + b;
  }
  return total;
}

namespace {

LayerKind parse_kind(std::string_view s, int line) {
  static const std::map<std::string_view, LayerKind> kinds = {
      {"conv", LayerKind::kConv},     {"pool", LayerKind::kPool},
      {"relu", LayerKind::kReLU},     {"lrn", LayerKind::kLRN},
      {"fc", LayerKind::kFC},         {"softmax", LayerKind::kSoftmax},
      {"concat", LayerKind::kConcat}, {"scale", LayerKind::kScale},
      {"bias", LayerKind::kBias},
  };
  auto it = kinds.find(s);
  if (it == kinds.end()) {
    throw ModelError(line, "unknown layer type '" + std::string(s) + "'");
  }
  return it->second;
}

LayerType geom_type(LayerKind k) {
  switch (k) {
    case LayerKind::kConv: return LayerType::kConvolution;
    case LayerKind::kPool: return LayerType::kPooling;
    case LayerKind::kLRN: return LayerType::kLRN;
    case LayerKind::kFC: return LayerType::kFullyConnected;
    case LayerKind::kSoftmax: return LayerType::kSoftmax;
    case LayerKind::kConcat: return LayerType::kConcat;
    case LayerKind::kReLU:
    case LayerKind::kScale:
    case LayerKind::kBias: return LayerType::kElementwise;
  }
  return LayerType::kElementwise;
}

int parse_int(std::string_view v, std::string_view key, int line) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ModelError(line, "expected integer for '" + std::string(key) +
                               "', got '" + std::string(v) + "'");
  }
  return out;
}

float parse_float(std::string_view v, std::string_view key, int line) {
  float out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ModelError(line, "expected number for '" + std::string(key) +
                               "', got '" + std::string(v) + "'");
  }
  return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = s.find(sep, start);
    out.push_back(s.substr(start, end == std::string_view::npos
                                      ? std::string_view::npos
                                      : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    std::size_t j = i;
    while (j < line.size() &&
           !std::isspace(static_cast<unsigned char>(line[j])))
      ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

void apply_key(LayerSpec& l, std::string_view key, std::string_view value,
               int line) {
  auto bad = [&] {
    throw ModelError(line, "unknown key '" + std::string(key) + "' for " +
                               std::string(to_string(l.kind)) + " layer");
  };
  switch (l.kind) {
    case LayerKind::kConv:
    case LayerKind::kPool:
      if (key == "k") l.geom.kernel = parse_int(value, key, line);
      else if (key == "s") l.geom.stride = parse_int(value, key, line);
      else if (key == "p") l.geom.padding = parse_int(value, key, line);
      else if (key == "out_ch" && l.kind == LayerKind::kConv)
        l.out_channels = parse_int(value, key, line);
      else if (key == "mode" && l.kind == LayerKind::kPool) {
        if (value == "max") l.pool_mode = PoolMode::kMax;
        else if (value == "avg") l.pool_mode = PoolMode::kAvg;
        else throw ModelError(line, "pool mode must be max or avg");
      } else bad();
      break;
    case LayerKind::kLRN:
      if (key == "r") l.geom.radius = parse_int(value, key, line);
      else if (key == "alpha") l.lrn_alpha = parse_float(value, key, line);
      else if (key == "beta") l.lrn_beta = parse_float(value, key, line);
      else if (key == "bias") l.lrn_bias = parse_float(value, key, line);
      else bad();
      break;
    case LayerKind::kFC:
      if (key == "out") l.out_features = parse_int(value, key, line);
      else bad();
      break;
    case LayerKind::kScale:
      if (key == "factor") l.scale = parse_float(value, key, line);
      else bad();
      break;
    case LayerKind::kBias:
      if (key == "value") l.bias_value = parse_float(value, key, line);
      else bad();
      break;
    case LayerKind::kReLU:
    case LayerKind::kSoftmax:
    case LayerKind::kConcat:
      bad();
  }
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isdigit(static_cast<unsigned char>(c));
  });
}

struct ParsedLayer {
  LayerSpec spec;
  int line = 0;
};

}  // namespace

Shape infer_output_shape(const LayerSpec& layer,
                         const std::vector<Shape>& inputs) {
  auto mismatch = [&](const std::string& why) {
    return ModelError(0, "dimension mismatch in layer '" + layer.name +
                             "': " + why);
  };
  if (inputs.empty()) throw mismatch("no inputs");
  const Shape& in = inputs.front();
  switch (layer.kind) {
    case LayerKind::kConv:
    case LayerKind::kPool: {
      const int k = layer.geom.kernel, s = layer.geom.stride,
                p = layer.geom.padding;
      const int span_h = in.h + 2 * p - k;
      const int span_w = in.w + 2 * p - k;
      if (span_h < 0 || span_w < 0) {
        throw mismatch("kernel " + std::to_string(k) +
                       " larger than padded input " + std::to_string(in.h) +
                       "x" + std::to_string(in.w));
      }
      const int c = layer.kind == LayerKind::kConv ? layer.out_channels : in.c;
      return {c, span_h / s + 1, span_w / s + 1};
    }
    case LayerKind::kFC:
      return {layer.out_features, 1, 1};
    case LayerKind::kConcat: {
      Shape out{0, in.h, in.w};
      for (const Shape& s : inputs) {
        if (s.h != in.h || s.w != in.w) {
          throw mismatch("concat inputs differ in spatial size");
        }
        out.c += s.c;
      }
      return out;
    }
    case LayerKind::kLRN:
    case LayerKind::kSoftmax:
    case LayerKind::kReLU:
    case LayerKind::kScale:
    case LayerKind::kBias:
      return in;
  }
  return in;
}

ModelGraph parse_model(std::string_view text) {
  ModelGraph graph;
  bool have_input = false;
  std::vector<ParsedLayer> parsed;

  int line_no = 0;
  for (std::string_view raw : split(text, '\n')) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) {
      raw = raw.substr(0, hash);
    }
    const auto tokens = tokenize(raw);
    if (tokens.empty()) continue;

    if (tokens[0] == "input") {
      if (have_input) throw ModelError(line_no, "duplicate input line");
      if (tokens.size() != 4 && tokens.size() != 5) {
        throw ModelError(line_no, "expected 'input [name] <C> <H> <W>'");
      }
      std::size_t i = 1;
      if (tokens.size() == 5) graph.input_blob = std::string(tokens[i++]);
      graph.input_shape.c = parse_int(tokens[i], "C", line_no);
      graph.input_shape.h = parse_int(tokens[i + 1], "H", line_no);
      graph.input_shape.w = parse_int(tokens[i + 2], "W", line_no);
      if (graph.input_shape.c < 1 || graph.input_shape.h < 1 ||
          graph.input_shape.w < 1) {
        throw ModelError(line_no, "input dimensions must be positive");
      }
      have_input = true;
      continue;
    }

    if (tokens.size() < 2) {
      throw ModelError(line_no, "expected '<name> <type> ... in=... out=...'");
    }
    ParsedLayer pl;
    pl.line = line_no;
    LayerSpec& l = pl.spec;
    l.name = std::string(tokens[0]);
    l.kind = parse_kind(tokens[1], line_no);
    l.geom.type = geom_type(l.kind);
    l.decl_index = static_cast<int>(parsed.size());
    for (std::size_t t = 2; t < tokens.size(); ++t) {
      const auto eq = tokens[t].find('=');
      if (eq == std::string_view::npos || eq == 0) {
        throw ModelError(line_no, "expected key=value, got '" +
                                      std::string(tokens[t]) + "'");
      }
      const auto key = tokens[t].substr(0, eq);
      const auto value = tokens[t].substr(eq + 1);
      if (key == "in") {
        for (auto b : split(value, ',')) {
          if (b.empty()) throw ModelError(line_no, "empty input blob name");
          l.inputs.emplace_back(b);
        }
      } else if (key == "out") {
        // fc takes out=<count> as well as out=<blob>; blob names are never
        // all digits.
        if (l.kind == LayerKind::kFC && all_digits(value)) {
          l.out_features = parse_int(value, key, line_no);
          continue;
        }
        if (all_digits(value)) {
          throw ModelError(line_no, "blob name must not be numeric");
        }
        l.output = std::string(value);
      } else {
        apply_key(l, key, value, line_no);
      }
    }
    if (l.inputs.empty()) throw ModelError(line_no, "missing in=");
    if (l.output.empty()) throw ModelError(line_no, "missing out=");
    if (l.kind != LayerKind::kConcat && l.inputs.size() != 1) {
      throw ModelError(line_no, "only concat accepts multiple inputs");
    }
    if (l.kind == LayerKind::kConcat) {
      l.geom.inputs = static_cast<int>(l.inputs.size());
    }
    if (l.kind == LayerKind::kConv && l.out_channels < 1) {
      throw ModelError(line_no, "conv needs out_ch >= 1");
    }
    if (l.kind == LayerKind::kFC && l.out_features < 1) {
      throw ModelError(line_no, "fc needs out >= 1");
    }
    try {
      l.geom.validate();
    } catch (const std::invalid_argument& e) {
      throw ModelError(line_no, e.what());
    }
    parsed.push_back(std::move(pl));
  }

  if (!have_input) throw ModelError(0, "missing 'input <C> <H> <W>' line");
  if (parsed.empty()) throw ModelError(0, "no layers");

  // Producers.
  std::map<std::string, std::size_t> producer;
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    const LayerSpec& l = parsed[i].spec;
    if (l.output == graph.input_blob ||
        !producer.emplace(l.output, i).second) {
      throw ModelError(parsed[i].line,
                       "duplicate producer for blob '" + l.output + "'");
    }
  }
  for (const ParsedLayer& pl : parsed) {
    for (const std::string& in : pl.spec.inputs) {
      if (in != graph.input_blob && !producer.count(in)) {
        throw ModelError(pl.line, "unknown blob '" + in + "'");
      }
    }
  }

  // Kahn's algorithm, lowest declaration index first.
  std::vector<int> pending(parsed.size(), 0);
  std::vector<std::vector<std::size_t>> consumers(parsed.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    for (const std::string& in : parsed[i].spec.inputs) {
      if (in == graph.input_blob) continue;
      ++pending[i];
      consumers[producer.at(in)].push_back(i);
    }
  }
  std::set<std::size_t> ready;
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    if (pending[i] == 0) ready.insert(i);
  }
  graph.blobs[graph.input_blob] = graph.input_shape;
  while (!ready.empty()) {
    const std::size_t i = *ready.begin();
    ready.erase(ready.begin());
    LayerSpec& l = parsed[i].spec;
    std::vector<Shape> in_shapes;
    for (const std::string& in : l.inputs) in_shapes.push_back(graph.blobs.at(in));
    try {
      graph.blobs[l.output] = infer_output_shape(l, in_shapes);
    } catch (const ModelError& e) {
      throw ModelError(parsed[i].line, e.what());
    }
    graph.layers.push_back(l);
    for (std::size_t c : consumers[i]) {
      if (--pending[c] == 0) ready.insert(c);
    }
  }
  if (graph.layers.size() != parsed.size()) {
    for (std::size_t i = 0; i < parsed.size(); ++i) {
      if (pending[i] > 0) {
        throw ModelError(parsed[i].line, "cycle detected at layer '" +
                                             parsed[i].spec.name + "'");
      }
    }
  }
  return graph;
}

namespace {

std::string format_float(float v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

std::string serialize_model(const ModelGraph& graph) {
  std::ostringstream os;
  os << "input ";
  if (graph.input_blob != "data") os << graph.input_blob << ' ';
  os << graph.input_shape.c << ' ' << graph.input_shape.h << ' '
     << graph.input_shape.w << '\n';
  for (const LayerSpec* l : graph.declaration_order()) {
    os << l->name << ' ' << to_string(l->kind);
    switch (l->kind) {
      case LayerKind::kConv:
        os << " k=" << l->geom.kernel << " s=" << l->geom.stride
           << " p=" << l->geom.padding << " out_ch=" << l->out_channels;
        break;
      case LayerKind::kPool:
        os << " k=" << l->geom.kernel << " s=" << l->geom.stride
           << " p=" << l->geom.padding
           << " mode=" << (l->pool_mode == PoolMode::kMax ? "max" : "avg");
        break;
      case LayerKind::kLRN:
        os << " r=" << l->geom.radius << " alpha=" << format_float(l->lrn_alpha)
           << " beta=" << format_float(l->lrn_beta)
           << " bias=" << format_float(l->lrn_bias);
        break;
      case LayerKind::kFC:
        os << " out=" << l->out_features;
        break;
      case LayerKind::kScale:
        os << " factor=" << format_float(l->scale);
        break;
      case LayerKind::kBias:
        os << " value=" << format_float(l->bias_value);
        break;
      case LayerKind::kReLU:
      case LayerKind::kSoftmax:
      case LayerKind::kConcat:
        break;
    }
    os << " in=";
    for (std::size_t i = 0; i < l->inputs.size(); ++i) {
      os << (i ? "," : "") << l->inputs[i];
    }
    os << " out=" << l->output << '\n';
  }
  return os.str();
}

}  // namespace framecache
