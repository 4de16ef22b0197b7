// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense two-layer MLP kernels with analytic backward and Adam. All math is
// 64-bit; the only place 32-bit floats appear is the wire encoding.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace vfl {

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

/// logits = w2 * relu(w1 * x + b1) + b2
struct Mlp2 {
  Matrix w1;               // hidden x in
  std::vector<double> b1;  // hidden
  Matrix w2;               // out x hidden
  std::vector<double> b2;  // out

  [[nodiscard]] std::size_t in_dim() const { return w1.cols; }
  [[nodiscard]] std::size_t hidden_dim() const { return w1.rows; }
  [[nodiscard]] std::size_t out_dim() const { return w2.rows; }
  [[nodiscard]] std::size_t parameter_count() const;

  /// Zero-valued network of the same shape.
  [[nodiscard]] Mlp2 zeros_like() const;

  /// w1, b1, w2, b2 as flat spans, in that order.
  std::array<std::span<double>, 4> tensors();
  std::array<std::span<const double>, 4> tensors() const;

  /// Throws ShapeError on inconsistent shapes, NumericError on non-finite values.
  void validate() const;

  bool operator==(const Mlp2&) const = default;
};

/// Activations recorded by mlp_forward for the matching mlp_backward call.
struct MlpCache {
  std::vector<double> input;
  std::vector<double> pre;   // w1 * x + b1
  std::vector<double> post;  // relu(pre)
};

struct MlpForward {
  std::vector<double> logits;
  MlpCache cache;
};

struct MlpBackward {
  Mlp2 grads;
  std::vector<double> dx;
};

MlpForward mlp_forward(const Mlp2& m, std::span<const double> x);

/// Forward into caller-owned buffers; avoids allocation in training loops.
void mlp_forward_into(const Mlp2& m, std::span<const double> x, MlpCache& cache,
                      std::vector<double>& logits);

/// Gradients of dot(logits, dlogits) with respect to parameters and input.
MlpBackward mlp_backward(const Mlp2& m, const MlpCache& cache, std::span<const double> dlogits);

/// Adds the parameter gradients into `grads`; skips the input gradient.
void mlp_accumulate_backward(const Mlp2& m, const MlpCache& cache,
                             std::span<const double> dlogits, Mlp2& grads);

/// Glorot-uniform weights in the open interval (-s, s) with
/// s = sqrt(6 / (fan_in + fan_out)); zero biases. Deterministic given seed.
Mlp2 init_mlp(std::size_t in, std::size_t hidden, std::size_t out, std::uint64_t seed);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  Mlp2 first_moment;
  Mlp2 second_moment;
  std::uint64_t step = 0;

  static AdamState for_params(const Mlp2& params, AdamConfig config = {});
};

/// One bias-corrected Adam update. Throws NonFiniteGradientError (leaving
/// params and state untouched) if any gradient is NaN or infinite.
void adam_step(Mlp2& params, const Mlp2& grads, AdamState& state);

// Helpers shared by the heads.

std::vector<double> softmax(std::span<const double> logits);
void softmax_into(std::span<const double> logits, std::span<double> out);
double sigmoid(double x);
/// log(max(p, 1e-12))
double clamped_log(double p);
inline constexpr double kLogFloor = 1e-12;

/// Index of the largest element; lowest index wins ties.
std::size_t argmax(std::span<const double> values);

bool all_finite(std::span<const double> values);

}  // namespace vfl
