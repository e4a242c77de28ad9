#include "framecache/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace framecache {

namespace {

struct ConvParams {
  int in_c, in_h, in_w;
  int out_c, out_h, out_w;
  int k, s, p;
};

ConvParams conv_params(const FeatureMap& input, const LayerSpec& spec,
                       const LayerWeights& weights) {
  if (spec.kind != LayerKind::kConv) {
    throw std::invalid_argument("layer '" + spec.name + "' is not a conv");
  }
  const Shape out = infer_output_shape(spec, {shape_of(input)});
  ConvParams cp{input.channels(), input.height(), input.width(),
                out.c,            out.h,          out.w,
                spec.geom.kernel, spec.geom.stride, spec.geom.padding};
  const std::size_t expect_w =
      static_cast<std::size_t>(cp.out_c) * cp.in_c * cp.k * cp.k;
  if (weights.weights.size() != expect_w ||
      weights.bias.size() != static_cast<std::size_t>(cp.out_c)) {
    throw std::invalid_argument("conv '" + spec.name +
                                "': weight shape does not match input");
  }
  return cp;
}

// One output element; shared by the plain and cached paths.
inline float conv_pixel(const FeatureMap& input, const float* kernel_oc,
                        float bias, const ConvParams& cp, int oy, int ox) {
  const int iy0 = oy * cp.s - cp.p;
  const int ix0 = ox * cp.s - cp.p;
  const int ky_begin = std::max(0, -iy0);
  const int ky_end = std::min(cp.k, cp.in_h - iy0);
  const int kx_begin = std::max(0, -ix0);
  const int kx_end = std::min(cp.k, cp.in_w - ix0);
  float acc = 0.0f;
  for (int ic = 0; ic < cp.in_c; ++ic) {
    const float* kern = kernel_oc + static_cast<std::size_t>(ic) * cp.k * cp.k;
    for (int ky = ky_begin; ky < ky_end; ++ky) {
      const float* in_row = input.row(ic, iy0 + ky) + ix0;
      const float* k_row = kern + ky * cp.k;
      for (int kx = kx_begin; kx < kx_end; ++kx) {
        acc += in_row[kx] * k_row[kx];
      }
    }
  }
  return acc + bias;
}

}  // namespace

FeatureMap conv_forward(const FeatureMap& input, const LayerSpec& spec,
                        const LayerWeights& weights) {
  const ConvParams cp = conv_params(input, spec, weights);
  FeatureMap out(cp.out_c, cp.out_h, cp.out_w);
  const std::size_t kernel_size = static_cast<std::size_t>(cp.in_c) * cp.k * cp.k;
  for (int oc = 0; oc < cp.out_c; ++oc) {
    const float* kernel_oc = weights.weights.data() + oc * kernel_size;
    for (int oy = 0; oy < cp.out_h; ++oy) {
      float* out_row = out.row(oc, oy);
      for (int ox = 0; ox < cp.out_w; ++ox) {
        out_row[ox] = conv_pixel(input, kernel_oc, weights.bias[oc], cp, oy, ox);
      }
    }
  }
  return out;
}

std::int64_t ReuseBitmap::popcount() const {
  return std::count(bits_.begin(), bits_.end(), std::uint8_t{1});
}

ReuseBitmap build_reuse_bitmap(const std::vector<RegionMapping>& mappings,
                               int out_w, int out_h) {
  ReuseBitmap bitmap(out_w, out_h);
  for (const RegionMapping& m : mappings) {
    const Rect d = rect_clip(m.dst, out_w, out_h);
    for (int y = d.y; y < d.bottom(); ++y) {
      for (int x = d.x; x < d.right(); ++x) bitmap.set(x, y);
    }
  }
  return bitmap;
}

std::int64_t conv_total_macs(const Shape& input, const LayerSpec& spec) {
  const Shape out = infer_output_shape(spec, {input});
  return static_cast<std::int64_t>(out.h) * out.w * out.c * input.c *
         spec.geom.kernel * spec.geom.kernel;
}

CachedConvResult conv_forward_cached(
    const FeatureMap& input, const LayerSpec& spec, const LayerWeights& weights,
    const FeatureMap& cached_out, const std::vector<RegionMapping>& mappings) {
  const ConvParams cp = conv_params(input, spec, weights);
  CachedConvResult result;
  result.output = FeatureMap(cp.out_c, cp.out_h, cp.out_w);
  FeatureMap& out = result.output;
  const Rect bounds{0, 0, cp.out_w, cp.out_h};

  if (!mappings.empty() && (cached_out.channels() != cp.out_c ||
                            cached_out.height() != cp.out_h ||
                            cached_out.width() != cp.out_w)) {
    throw std::logic_error("conv '" + spec.name +
                           "': cached output has the wrong shape");
  }

  // Step 1: copy reusable regions.
  for (const RegionMapping& m : mappings) {
    if (m.dst.w != m.src.w || m.dst.h != m.src.h ||
        !rect_contains(bounds, m.dst) || !rect_contains(bounds, m.src)) {
      throw std::logic_error("conv '" + spec.name +
                             "': mapping out of bounds");
    }
    for (int oc = 0; oc < cp.out_c; ++oc) {
      for (int y = 0; y < m.dst.h; ++y) {
        const float* from = cached_out.row(oc, m.src.y + y) + m.src.x;
        std::copy(from, from + m.dst.w, out.row(oc, m.dst.y + y) + m.dst.x);
      }
    }
  }

  // Step 2: reuse bitmap.
  const ReuseBitmap bitmap = build_reuse_bitmap(mappings, cp.out_w, cp.out_h);
  const std::int64_t marked = bitmap.popcount();
  const std::int64_t per_pixel =
      static_cast<std::int64_t>(cp.out_c) * cp.in_c * cp.k * cp.k;
  result.copied_elements = marked * cp.out_c;
  result.computed_macs =
      (static_cast<std::int64_t>(cp.out_h) * cp.out_w - marked) * per_pixel;

  // Step 3: convolve the rest.
  const std::size_t kernel_size = static_cast<std::size_t>(cp.in_c) * cp.k * cp.k;
  for (int oc = 0; oc < cp.out_c; ++oc) {
    const float* kernel_oc = weights.weights.data() + oc * kernel_size;
    for (int oy = 0; oy < cp.out_h; ++oy) {
      float* out_row = out.row(oc, oy);
      for (int ox = 0; ox < cp.out_w; ++ox) {
        if (bitmap.test(ox, oy)) continue;
        out_row[ox] = conv_pixel(input, kernel_oc, weights.bias[oc], cp, oy, ox);
      }
    }
  }
  return result;
}

FeatureMap pool_forward(const FeatureMap& input, const LayerSpec& spec) {
  if (spec.kind != LayerKind::kPool) {
    throw std::invalid_argument("layer '" + spec.name + "' is not a pool");
  }
  const Shape os = infer_output_shape(spec, {shape_of(input)});
  const int k = spec.geom.kernel, s = spec.geom.stride, p = spec.geom.padding;
  FeatureMap out(os.c, os.h, os.w);
  for (int c = 0; c < os.c; ++c) {
    for (int oy = 0; oy < os.h; ++oy) {
      for (int ox = 0; ox < os.w; ++ox) {
        const int y0 = oy * s - p, x0 = ox * s - p;
        const int y_begin = std::max(0, y0), y_end = std::min(input.height(), y0 + k);
        const int x_begin = std::max(0, x0), x_end = std::min(input.width(), x0 + k);
        float v = 0.0f;
        if (spec.pool_mode == PoolMode::kMax) {
          v = -std::numeric_limits<float>::infinity();
          for (int y = y_begin; y < y_end; ++y) {
            for (int x = x_begin; x < x_end; ++x) v = std::max(v, input.at(c, y, x));
          }
          if (y_begin >= y_end || x_begin >= x_end) v = 0.0f;
        } else {
          float sum = 0.0f;
          int n = 0;
          for (int y = y_begin; y < y_end; ++y) {
            for (int x = x_begin; x < x_end; ++x) {
              sum += input.at(c, y, x);
              ++n;
            }
          }
          v = n > 0 ? sum / static_cast<float>(n) : 0.0f;
        }
        out.at(c, oy, ox) = v;
      }
    }
  }
  return out;
}

FeatureMap relu_forward(const FeatureMap& input) {
  FeatureMap out = input;
  for (float& v : out.data()) v = v > 0.0f ? v : 0.0f;
  return out;
}

FeatureMap softmax_forward(const FeatureMap& input) {
  FeatureMap out(input.channels(), input.height(), input.width());
  const std::size_t plane = input.plane_size();
  const auto& in = input.storage();
  auto& o = out.storage();
  for (std::size_t i = 0; i < plane; ++i) {
    float mx = -std::numeric_limits<float>::infinity();
    for (int c = 0; c < input.channels(); ++c) mx = std::max(mx, in[c * plane + i]);
    float sum = 0.0f;
    for (int c = 0; c < input.channels(); ++c) {
      const float e = std::exp(in[c * plane + i] - mx);
      o[c * plane + i] = e;
      sum += e;
    }
    for (int c = 0; c < input.channels(); ++c) o[c * plane + i] /= sum;
  }
  return out;
}

FeatureMap fc_forward(const FeatureMap& input, const LayerSpec& spec,
                      const LayerWeights& weights) {
  const std::size_t n_in = input.size();
  const std::size_t n_out = static_cast<std::size_t>(spec.out_features);
  if (weights.weights.size() != n_in * n_out || weights.bias.size() != n_out) {
    throw std::invalid_argument("fc '" + spec.name +
                                "': weight shape does not match input");
  }
  FeatureMap out(spec.out_features, 1, 1);
  const auto& x = input.storage();
  for (std::size_t o = 0; o < n_out; ++o) {
    const float* w = weights.weights.data() + o * n_in;
    float acc = 0.0f;
    for (std::size_t i = 0; i < n_in; ++i) acc += w[i] * x[i];
    out.storage()[o] = acc + weights.bias[o];
  }
  return out;
}

FeatureMap lrn_forward(const FeatureMap& input, const LayerSpec& spec) {
  const int r = spec.geom.radius;
  const float size = static_cast<float>(2 * r + 1);
  const int channels = input.channels();
  const std::size_t plane = input.plane_size();
  FeatureMap out(channels, input.height(), input.width());
  const auto& in = input.storage();
  for (int c = 0; c < channels; ++c) {
    const int lo = std::max(0, c - r), hi = std::min(channels - 1, c + r);
    for (std::size_t i = 0; i < plane; ++i) {
      float sq = 0.0f;
      for (int n = lo; n <= hi; ++n) {
        const float v = in[n * plane + i];
        sq += v * v;
      }
      const float denom =
          std::pow(spec.lrn_bias + spec.lrn_alpha / size * sq, spec.lrn_beta);
      out.storage()[c * plane + i] = in[c * plane + i] / denom;
    }
  }
  return out;
}

FeatureMap concat_forward(const std::vector<const FeatureMap*>& inputs) {
  if (inputs.empty()) throw std::invalid_argument("concat: no inputs");
  const int h = inputs.front()->height(), w = inputs.front()->width();
  int channels = 0;
  for (const FeatureMap* f : inputs) {
    if (f->height() != h || f->width() != w) {
      throw std::invalid_argument("concat: spatial size mismatch");
    }
    channels += f->channels();
  }
  std::vector<float> data;
  data.reserve(static_cast<std::size_t>(channels) * h * w);
  for (const FeatureMap* f : inputs) {
    data.insert(data.end(), f->storage().begin(), f->storage().end());
  }
  return FeatureMap(channels, h, w, std::move(data));
}

FeatureMap elementwise_forward(const FeatureMap& input, const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::kReLU: return relu_forward(input);
    case LayerKind::kScale: {
      FeatureMap out = input;
      for (float& v : out.data()) v *= spec.scale;
      return out;
    }
    case LayerKind::kBias: {
      FeatureMap out = input;
      for (float& v : out.data()) v += spec.bias_value;
      return out;
    }
    default:
      throw std::invalid_argument("layer '" + spec.name +
                                  "' is not elementwise");
  }
}

}  // namespace framecache
