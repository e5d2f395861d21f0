#include "core/kernels.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace hmnas {

void fill_tensor(Tensor& t, uint64_t seed) {
  Rng rng(mix_seed(seed, 0x7e57));
  for (float& v : t.data) v = static_cast<float>(rng.uniform01() * 2.0 - 1.0);
}

namespace {

float apply_activation(Activation a, float x) {
  switch (a) {
    case Activation::relu: return x > 0.f ? x : 0.f;
    case Activation::relu6: return x < 0.f ? 0.f : (x > 6.f ? 6.f : x);
    case Activation::leakyrelu: return x > 0.f ? x : 0.01f * x;
    case Activation::elu: return x > 0.f ? x : std::expm1(x);
    case Activation::selu: {
      const float scale = 1.0507009873554805f;
      const float alpha = 1.6732632423543772f;
      return x > 0.f ? scale * x : scale * alpha * std::expm1(x);
    }
    case Activation::sigmoid: return 1.f / (1.f + std::exp(-x));
  }
  return x;
}

// conv(k, stride 1, 'same') + bias + activation, accumulating each output
// row in an L1-resident buffer.
Tensor conv_same(const Tensor& in, const std::vector<float>& weights,
                 const std::vector<float>& bias, int out_c, int k, Activation act) {
  const int h = in.h, w = in.w, ic = in.c;
  const int pad = k / 2;
  Tensor out(out_c, h, w);
  std::vector<float> acc(static_cast<size_t>(w));
  const float* __restrict src = in.data.data();
  for (int o = 0; o < out_c; ++o) {
    for (int y = 0; y < h; ++y) {
      std::fill(acc.begin(), acc.end(), bias[static_cast<size_t>(o)]);
      for (int c = 0; c < ic; ++c) {
        const float* wbase = weights.data() + (static_cast<size_t>(o) * ic + c) * k * k;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = y + ky - pad;
          if (iy < 0 || iy >= h) continue;
          const float* __restrict irow = src + (static_cast<size_t>(c) * h + iy) * w;
          for (int kx = 0; kx < k; ++kx) {
            const float wv = wbase[ky * k + kx];
            const int d = kx - pad;
            const int x0 = d < 0 ? -d : 0;
            const int x1 = d > 0 ? w - d : w;
            float* __restrict a = acc.data();
            for (int x = x0; x < x1; ++x) a[x] += wv * irow[x + d];
          }
        }
      }
      float* orow = out.data.data() + (static_cast<size_t>(o) * h + y) * w;
      for (int x = 0; x < w; ++x) orow[x] = apply_activation(act, acc[static_cast<size_t>(x)]);
    }
  }
  return out;
}

// stride-s max pool over s x s windows, ceil semantics at the borders.
Tensor max_pool_stride(const Tensor& in, int stride) {
  if (stride == 1) return in;
  const int oh = (in.h + stride - 1) / stride;
  const int ow = (in.w + stride - 1) / stride;
  Tensor out(in.c, oh, ow);
  for (int c = 0; c < in.c; ++c) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        float best = -3.4e38f;
        for (int dy = 0; dy < stride; ++dy) {
          int iy = y * stride + dy;
          if (iy >= in.h) break;
          for (int dx = 0; dx < stride; ++dx) {
            int ix = x * stride + dx;
            if (ix >= in.w) break;
            best = std::max(best, in.data[(static_cast<size_t>(c) * in.h + iy) * in.w + ix]);
          }
        }
        out.data[(static_cast<size_t>(c) * oh + y) * ow + x] = best;
      }
    }
  }
  return out;
}

// Adaptive average pool to n x n. Window [floor(i*H/n), ceil((i+1)*H/n));
// when n > H a cell falls back to the nearest input row/column, so
// upsampling targets are well-defined.
Tensor adaptive_avg_pool(const Tensor& in, int n) {
  Tensor out(in.c, n, n);
  for (int c = 0; c < in.c; ++c) {
    for (int y = 0; y < n; ++y) {
      int y0 = static_cast<int>(static_cast<int64_t>(y) * in.h / n);
      int y1 = static_cast<int>((static_cast<int64_t>(y + 1) * in.h + n - 1) / n);
      if (y1 <= y0) y1 = std::min(y0 + 1, in.h);
      if (y0 >= in.h) { y0 = in.h - 1; y1 = in.h; }
      for (int x = 0; x < n; ++x) {
        int x0 = static_cast<int>(static_cast<int64_t>(x) * in.w / n);
        int x1 = static_cast<int>((static_cast<int64_t>(x + 1) * in.w + n - 1) / n);
        if (x1 <= x0) x1 = std::min(x0 + 1, in.w);
        if (x0 >= in.w) { x0 = in.w - 1; x1 = in.w; }
        float sum = 0.f;
        for (int iy = y0; iy < y1; ++iy)
          for (int ix = x0; ix < x1; ++ix)
            sum += in.data[(static_cast<size_t>(c) * in.h + iy) * in.w + ix];
        out.data[(static_cast<size_t>(c) * n + y) * n + x] =
            sum / static_cast<float>((y1 - y0) * (x1 - x0));
      }
    }
  }
  return out;
}

Tensor dense(const Tensor& in, const std::vector<float>& weights, const std::vector<float>& bias,
             int out_n) {
  Tensor out(out_n, 1, 1);
  const size_t features = in.size();
  for (int o = 0; o < out_n; ++o) {
    const float* __restrict wrow = weights.data() + static_cast<size_t>(o) * features;
    float sum = bias[static_cast<size_t>(o)];
    const float* __restrict src = in.data.data();
    for (size_t i = 0; i < features; ++i) sum += wrow[i] * src[i];
    out.data[static_cast<size_t>(o)] = sum;
  }
  return out;
}

std::vector<float> random_vector(size_t n, uint64_t seed) {
  std::vector<float> v(n);
  Rng rng(mix_seed(seed, 0x3a9));
  for (float& x : v) x = static_cast<float>(rng.uniform01() * 0.2 - 0.1);
  return v;
}

}  // namespace

Tensor run_layer(const LayerConfig& config, const Tensor& input, uint64_t weight_seed) {
  switch (config.kind) {
    case OpKind::conv: {
      if (input.c != config.in_c || input.h != config.in_h || input.w != config.in_w)
        throw Error(ErrorCode::invalid_argument, "input shape does not match conv config");
      auto weights = random_vector(
          static_cast<size_t>(config.out_c) * config.in_c * config.kernel * config.kernel,
          weight_seed);
      auto bias = random_vector(static_cast<size_t>(config.out_c), weight_seed ^ 1);
      Tensor t = conv_same(input, weights, bias, config.out_c, config.kernel,
                           config.activation.value_or(Activation::relu));
      return max_pool_stride(t, config.stride);
    }
    case OpKind::pool: {
      if (input.c != config.in_c || input.h != config.in_h || input.w != config.in_w)
        throw Error(ErrorCode::invalid_argument, "input shape does not match pool config");
      return adaptive_avg_pool(input, config.kernel);
    }
    case OpKind::linear: {
      if (static_cast<int>(input.size()) != config.in_c)
        throw Error(ErrorCode::invalid_argument, "input size does not match linear config");
      auto weights =
          random_vector(static_cast<size_t>(config.out_c) * config.in_c, weight_seed);
      auto bias = random_vector(static_cast<size_t>(config.out_c), weight_seed ^ 1);
      return dense(input, weights, bias, config.out_c);
    }
  }
  throw Error(ErrorCode::internal, "unreachable op kind");
}

namespace {

Tensor make_input(const LayerConfig& config) {
  Tensor in;
  if (config.kind == OpKind::linear) {
    in = Tensor(config.in_c, 1, 1);
  } else {
    in = Tensor(config.in_c, config.in_h, config.in_w);
  }
  fill_tensor(in, fnv1a(layer_key(config).data(), layer_key(config).size()));
  return in;
}

// Fold the output into a sink so the work cannot be optimized away.
volatile float g_sink = 0.f;

void consume(const Tensor& t) {
  float s = 0.f;
  for (size_t i = 0; i < t.size(); i += 7) s += t.data[i];
  g_sink = g_sink + s;
}

}  // namespace

double time_layer_once(const LayerConfig& config) {
  Tensor in = make_input(config);
  auto t0 = std::chrono::steady_clock::now();
  Tensor out = run_layer(config, in, 0x5eed);
  auto t1 = std::chrono::steady_clock::now();
  consume(out);
  return std::chrono::duration<double, std::micro>(t1 - t0).count();
}

double time_network_once(const std::vector<LayerConfig>& configs) {
  if (configs.empty()) throw Error(ErrorCode::invalid_argument, "empty network");
  Tensor t = make_input(configs.front());
  auto t0 = std::chrono::steady_clock::now();
  for (const LayerConfig& c : configs) t = run_layer(c, t, 0x5eed);
  auto t1 = std::chrono::steady_clock::now();
  consume(t);
  return std::chrono::duration<double, std::micro>(t1 - t0).count();
}

}  // namespace hmnas
