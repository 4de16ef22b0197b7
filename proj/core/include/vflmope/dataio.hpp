// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "vflmope/dataset.hpp"
#include "vflmope/heads.hpp"
#include "vflmope/nn.hpp"

namespace vfl {

/// Gaussian class clusters per participant. Participant k's class-c mean is
/// separation[k] times a seeded unit direction; samples add isotropic noise
/// with standard deviation within_std. separation[k] = 0 makes block k
/// carry no label information.
///
/// `offset` (optional, one value per participant) shifts every sample of
/// block k by a shared seeded vector of that norm. Pretrained-backbone
/// embeddings sit far from the origin, which makes zero padding an
/// off-distribution input; the offset reproduces that.
struct SyntheticSpec {
  std::size_t classes = 2;
  std::size_t samples = 1000;
  double train_fraction = 0.8;
  std::vector<std::size_t> dims;
  std::vector<double> separation;
  std::vector<double> offset;
  double within_std = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  /// One n x dims[k] matrix per participant; the last is the active one.
  std::vector<Matrix> blocks;
  std::vector<std::size_t> labels;
  std::vector<std::uint64_t> ids;
  std::vector<std::uint8_t> is_test;
  std::size_t classes = 0;
};

SyntheticData gen_synthetic(const SyntheticSpec& spec);

/// Seeded train/test assignment: exactly floor(train_fraction * n) rows are
/// training rows.
std::vector<std::uint8_t> split_test_flags(std::size_t samples, double train_fraction,
                                           std::uint64_t seed);

/// Contents of one embedding message or file.
struct EmbeddingFile {
  std::uint32_t participant = 0;
  std::vector<std::uint64_t> ids;
  Matrix embeddings;  // n x z, widened from 32-bit on read
  std::optional<std::vector<std::uint32_t>> labels;
};

inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;

/// Little-endian encoding:
///   "VFLE" | u32 version | u32 participant | u64 n | u32 z |
///   n x u64 ids | n*z x f32 (row-major) | u8 label flag [| n x u32 labels]
std::vector<std::uint8_t> encode_embeddings(const EmbeddingFile& file);

/// Inverse of encode_embeddings. Throws FormatError naming the section and
/// byte offset where decoding failed. A stream that ends right before the
/// label flag is read as having no labels.
EmbeddingFile decode_embeddings(std::span<const std::uint8_t> bytes);

void write_embedding_file(const std::filesystem::path& path, const EmbeddingFile& file);
EmbeddingFile read_embedding_file(const std::filesystem::path& path);

struct MetricReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  /// F1 of class 1; only set for two-class problems.
  std::optional<double> binary_f1;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::size_t sample_count = 0;

  /// binary_f1 when available, otherwise macro_f1.
  [[nodiscard]] double headline_f1() const { return binary_f1.value_or(macro_f1); }
};

/// Classes with no predicted (or no actual) members get precision (recall)
/// 0, and F1 0 when both are 0.
MetricReport compute_metrics(std::span<const std::size_t> predicted,
                             std::span<const std::size_t> labels, std::size_t classes);

/// Scores every row of `test`, padded rows included.
MetricReport evaluate(const Head& head, const HeadDataset& test);

}  // namespace vfl
