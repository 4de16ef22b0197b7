// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0

#include "vflmope/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "vflmope/error.hpp"
#include "vflmope/rng.hpp"

namespace vfl {

namespace {

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(want) + ", got " +
                     std::to_string(got));
  }
}

void check_cache(const Mlp2& m, const MlpCache& cache) {
  if (cache.input.size() != m.in_dim() || cache.pre.size() != m.hidden_dim() ||
      cache.post.size() != m.hidden_dim()) {
    throw ContractError("mlp_backward: cache does not match network shape");
  }
}

}  // namespace

std::size_t Mlp2::parameter_count() const {
  return w1.data.size() + b1.size() + w2.data.size() + b2.size();
}

Mlp2 Mlp2::zeros_like() const {
  Mlp2 z;
  z.w1 = Matrix(w1.rows, w1.cols);
  z.b1.assign(b1.size(), 0.0);
  z.w2 = Matrix(w2.rows, w2.cols);
  z.b2.assign(b2.size(), 0.0);
  return z;
}

std::array<std::span<double>, 4> Mlp2::tensors() {
  return {std::span<double>(w1.data), std::span<double>(b1), std::span<double>(w2.data),
          std::span<double>(b2)};
}

std::array<std::span<const double>, 4> Mlp2::tensors() const {
  return {std::span<const double>(w1.data), std::span<const double>(b1),
          std::span<const double>(w2.data), std::span<const double>(b2)};
}

void Mlp2::validate() const {
  if (w1.data.size() != w1.rows * w1.cols || w2.data.size() != w2.rows * w2.cols) {
    throw ShapeError("Mlp2: matrix storage does not match its dimensions");
  }
  require_dim(b1.size(), w1.rows, "Mlp2 b1 length");
  require_dim(w2.cols, w1.rows, "Mlp2 w2 columns");
  require_dim(b2.size(), w2.rows, "Mlp2 b2 length");
  for (auto t : tensors()) {
    if (!all_finite(t)) throw NumericError("Mlp2: non-finite parameter");
  }
}

void mlp_forward_into(const Mlp2& m, std::span<const double> x, MlpCache& cache,
                      std::vector<double>& logits) {
  require_dim(x.size(), m.in_dim(), "mlp_forward input");
  const std::size_t in = m.in_dim();
  const std::size_t hidden = m.hidden_dim();
  const std::size_t out = m.out_dim();

  cache.input.assign(x.begin(), x.end());
  cache.pre.resize(hidden);
  cache.post.resize(hidden);
  for (std::size_t h = 0; h < hidden; ++h) {
    const double* w = m.w1.data.data() + h * in;
    double acc = m.b1[h];
    for (std::size_t i = 0; i < in; ++i) acc += w[i] * x[i];
    cache.pre[h] = acc;
    cache.post[h] = acc > 0.0 ? acc : 0.0;
  }
  logits.resize(out);
  for (std::size_t o = 0; o < out; ++o) {
    const double* w = m.w2.data.data() + o * hidden;
    double acc = m.b2[o];
    for (std::size_t h = 0; h < hidden; ++h) acc += w[h] * cache.post[h];
    logits[o] = acc;
  }
}

MlpForward mlp_forward(const Mlp2& m, std::span<const double> x) {
  if (!all_finite(x)) throw NumericError("mlp_forward: non-finite input");
  MlpForward f;
  mlp_forward_into(m, x, f.cache, f.logits);
  return f;
}

void mlp_accumulate_backward(const Mlp2& m, const MlpCache& cache,
                             std::span<const double> dlogits, Mlp2& grads) {
  check_cache(m, cache);
  require_dim(dlogits.size(), m.out_dim(), "mlp_backward dlogits");
  const std::size_t in = m.in_dim();
  const std::size_t hidden = m.hidden_dim();
  const std::size_t out = m.out_dim();

  thread_local std::vector<double> dpre;
  dpre.assign(hidden, 0.0);
  for (std::size_t o = 0; o < out; ++o) {
    const double d = dlogits[o];
    if (d == 0.0) continue;
    grads.b2[o] += d;
    double* gw = grads.w2.data.data() + o * hidden;
    const double* w = m.w2.data.data() + o * hidden;
    for (std::size_t h = 0; h < hidden; ++h) {
      gw[h] += d * cache.post[h];
      dpre[h] += d * w[h];
    }
  }
  for (std::size_t h = 0; h < hidden; ++h) {
    if (cache.pre[h] <= 0.0 || dpre[h] == 0.0) continue;
    const double d = dpre[h];
    grads.b1[h] += d;
    double* gw = grads.w1.data.data() + h * in;
    for (std::size_t i = 0; i < in; ++i) gw[i] += d * cache.input[i];
  }
}

MlpBackward mlp_backward(const Mlp2& m, const MlpCache& cache, std::span<const double> dlogits) {
  check_cache(m, cache);
  require_dim(dlogits.size(), m.out_dim(), "mlp_backward dlogits");
  MlpBackward b{m.zeros_like(), std::vector<double>(m.in_dim(), 0.0)};
  mlp_accumulate_backward(m, cache, dlogits, b.grads);

  const std::size_t in = m.in_dim();
  const std::size_t hidden = m.hidden_dim();
  for (std::size_t h = 0; h < hidden; ++h) {
    if (cache.pre[h] <= 0.0) continue;
    double dpre = 0.0;
    for (std::size_t o = 0; o < m.out_dim(); ++o) dpre += dlogits[o] * m.w2(o, h);
    for (std::size_t i = 0; i < in; ++i) b.dx[i] += dpre * m.w1(h, i);
  }
  return b;
}

Mlp2 init_mlp(std::size_t in, std::size_t hidden, std::size_t out, std::uint64_t seed) {
  if (in == 0 || hidden == 0 || out == 0) {
    throw ShapeError("init_mlp: dimensions must be positive");
  }
  Rng rng(seed);
  Mlp2 m;
  m.w1 = Matrix(hidden, in);
  m.b1.assign(hidden, 0.0);
  m.w2 = Matrix(out, hidden);
  m.b2.assign(out, 0.0);
  const double s1 = std::sqrt(6.0 / static_cast<double>(in + hidden));
  for (double& w : m.w1.data) w = rng.uniform(-s1, s1);
  const double s2 = std::sqrt(6.0 / static_cast<double>(hidden + out));
  for (double& w : m.w2.data) w = rng.uniform(-s2, s2);
  return m;
}

AdamState AdamState::for_params(const Mlp2& params, AdamConfig config) {
  return AdamState{config, params.zeros_like(), params.zeros_like(), 0};
}

void adam_step(Mlp2& params, const Mlp2& grads, AdamState& state) {
  const auto p = params.tensors();
  const auto g = grads.tensors();
  const auto m = state.first_moment.tensors();
  const auto v = state.second_moment.tensors();
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (g[t].size() != p[t].size() || m[t].size() != p[t].size() || v[t].size() != p[t].size()) {
      throw ShapeError("adam_step: gradient or moment shape does not match parameters");
    }
    if (!all_finite(g[t])) throw NonFiniteGradientError("adam_step: non-finite gradient");
  }

  const AdamConfig& c = state.config;
  const auto step = static_cast<double>(state.step + 1);
  const double correction1 = 1.0 - std::pow(c.beta1, step);
  const double correction2 = 1.0 - std::pow(c.beta2, step);
  for (std::size_t t = 0; t < p.size(); ++t) {
    for (std::size_t i = 0; i < p[t].size(); ++i) {
      const double gi = g[t][i];
      m[t][i] = c.beta1 * m[t][i] + (1.0 - c.beta1) * gi;
      v[t][i] = c.beta2 * v[t][i] + (1.0 - c.beta2) * gi * gi;
      const double mhat = m[t][i] / correction1;
      const double vhat = v[t][i] / correction2;
      p[t][i] -= c.lr * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
  ++state.step;
}

void softmax_into(std::span<const double> logits, std::span<double> out) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] /= total;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) return {};
  std::vector<double> out(logits.size());
  softmax_into(logits, out);
  return out;
}

double sigmoid(double x) {
  // Clamped so the result stays strictly inside (0, 1) for saturated inputs.
  constexpr double kLow = std::numeric_limits<double>::min();
  constexpr double kHigh = 1.0 - 0x1.0p-53;
  double s;
  if (x >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    s = e / (1.0 + e);
  }
  return std::clamp(s, kLow, kHigh);
}

double clamped_log(double p) { return std::log(std::max(p, kLogFloor)); }

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace vfl
