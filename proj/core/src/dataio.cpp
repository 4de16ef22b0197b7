// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0

#include "vflmope/dataio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

#include "vflmope/error.hpp"
#include "vflmope/rng.hpp"

namespace vfl {

void SyntheticSpec::validate() const {
  std::string bad;
  if (classes < 2) bad += " classes";
  if (samples == 0) bad += " samples";
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) bad += " train_fraction";
  if (dims.empty() || std::find(dims.begin(), dims.end(), 0) != dims.end()) bad += " dims";
  if (separation.size() != dims.size() ||
      std::any_of(separation.begin(), separation.end(), [](double s) { return !(s >= 0.0) || !std::isfinite(s); })) {
    bad += " separation";
  }
  if (!offset.empty() && (offset.size() != dims.size() ||
                          std::any_of(offset.begin(), offset.end(), [](double o) { return !(o >= 0.0) || !std::isfinite(o); }))) {
    bad += " offset";
  }
  if (!(within_std > 0.0) || !std::isfinite(within_std)) bad += " within_std";
  if (!bad.empty()) throw ValidationError("invalid synthetic spec:" + bad);
}

std::vector<std::uint8_t> split_test_flags(std::size_t samples, double train_fraction,
                                           std::uint64_t seed) {
  std::vector<std::size_t> order(samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());
  const auto train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(samples)));
  std::vector<std::uint8_t> is_test(samples, 1);
  for (std::size_t r = 0; r < train; ++r) is_test[order[r]] = 0;
  return is_test;
}

SyntheticData gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t participants = spec.dims.size();
  const std::size_t n = spec.samples;

  // Class means: separation times a unit direction per (participant, class).
  Rng direction_rng(mix_seed(spec.seed, 1));
  std::vector<std::vector<std::vector<double>>> means(participants);
  for (std::size_t k = 0; k < participants; ++k) {
    for (std::size_t c = 0; c < spec.classes; ++c) {
      std::vector<double> u(spec.dims[k]);
      double norm = 0.0;
      do {
        norm = 0.0;
        for (double& v : u) {
          v = direction_rng.normal();
          norm += v * v;
        }
      } while (norm == 0.0);
      norm = std::sqrt(norm);
      for (double& v : u) v = spec.separation[k] * v / norm;
      means[k].push_back(std::move(u));
    }
  }

  // Shared shift per participant, drawn after the class directions.
  std::vector<std::vector<double>> shifts(participants);
  for (std::size_t k = 0; k < participants; ++k) {
    shifts[k].assign(spec.dims[k], 0.0);
    const double norm_target = spec.offset.empty() ? 0.0 : spec.offset[k];
    if (norm_target == 0.0) continue;
    Rng shift_rng(mix_seed(spec.seed, 100 + k));
    double norm = 0.0;
    for (double& v : shifts[k]) {
      v = shift_rng.normal();
      norm += v * v;
    }
    for (double& v : shifts[k]) v = norm_target * v / std::sqrt(norm);
  }

  SyntheticData data;
  data.classes = spec.classes;
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) data.labels[i] = i % spec.classes;
  Rng label_rng(mix_seed(spec.seed, 2));
  label_rng.shuffle(data.labels.begin(), data.labels.end());

  data.ids.resize(n);
  std::iota(data.ids.begin(), data.ids.end(), std::uint64_t{0});

  Rng sample_rng(mix_seed(spec.seed, 3));
  for (std::size_t k = 0; k < participants; ++k) data.blocks.emplace_back(n, spec.dims[k]);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < participants; ++k) {
      const auto& mu = means[k][data.labels[i]];
      auto row = data.blocks[k].row(i);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] = shifts[k][j] + mu[j] + spec.within_std * sample_rng.normal();
    }
  }
  data.is_test = split_test_flags(n, spec.train_fraction, mix_seed(spec.seed, 4));
  return data;
}

namespace {

constexpr std::uint8_t kMagic[4] = {'V', 'F', 'L', 'E'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<std::uint8_t>(value >> (8 * b)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* section) {
    require(sizeof(T), section);
    T value = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b) value |= static_cast<T>(bytes_[pos_ + b]) << (8 * b);
    pos_ += sizeof(T);
    return value;
  }

  void require(std::size_t count, const char* section) const {
    if (bytes_.size() - pos_ < count) {
      throw FormatError(std::string("truncated embedding data: missing ") + section, pos_);
    }
  }

  [[nodiscard]] std::size_t offset() const { return pos_; }
  [[nodiscard]] bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_embeddings(const EmbeddingFile& file) {
  const std::uint64_t n = file.ids.size();
  const auto z = static_cast<std::uint32_t>(file.embeddings.cols);
  if (file.embeddings.rows != n) throw ShapeError("encode_embeddings: row count differs from ID count");
  if (file.labels && file.labels->size() != n) throw ShapeError("encode_embeddings: label count differs from ID count");

  std::vector<std::uint8_t> out;
  out.reserve(25 + n * 8 + n * z * 4 + 1 + (file.labels ? n * 4 : 0));
  for (auto b : kMagic) out.push_back(b);
  put<std::uint32_t>(out, kEmbeddingFormatVersion);
  put<std::uint32_t>(out, file.participant);
  put<std::uint64_t>(out, n);
  put<std::uint32_t>(out, z);
  for (auto id : file.ids) put<std::uint64_t>(out, id);
  for (double v : file.embeddings.data) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  put<std::uint8_t>(out, file.labels ? 1 : 0);
  if (file.labels) {
    for (auto y : *file.labels) put<std::uint32_t>(out, y);
  }
  return out;
}

EmbeddingFile decode_embeddings(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  in.require(4, "magic");
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw FormatError("bad magic: not an embedding file", 0);
  }
  in.get<std::uint32_t>("magic");
  const auto version = in.get<std::uint32_t>("version");
  if (version != kEmbeddingFormatVersion) {
    throw FormatError("unsupported embedding format version " + std::to_string(version), 4);
  }
  EmbeddingFile file;
  file.participant = in.get<std::uint32_t>("participant id");
  const auto n = in.get<std::uint64_t>("sample count");
  const auto z = in.get<std::uint32_t>("embedding dim");

  // Reject sizes that cannot fit before allocating.
  if (n > (bytes.size() - in.offset()) / 8) {
    throw FormatError("truncated embedding data: missing sample IDs", in.offset());
  }
  file.ids.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) file.ids.push_back(in.get<std::uint64_t>("sample IDs"));

  if (z != 0 && n > (bytes.size() - in.offset()) / 4 / z) {
    throw FormatError("truncated embedding data: missing embedding values", in.offset());
  }
  file.embeddings = Matrix(n, z);
  for (double& v : file.embeddings.data) {
    v = static_cast<double>(std::bit_cast<float>(in.get<std::uint32_t>("embedding values")));
  }

  if (in.at_end()) return file;
  const auto flag = in.get<std::uint8_t>("label flag");
  if (flag > 1) throw FormatError("invalid label flag " + std::to_string(flag), in.offset() - 1);
  if (flag == 1) {
    std::vector<std::uint32_t> labels;
    labels.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) labels.push_back(in.get<std::uint32_t>("labels"));
    file.labels = std::move(labels);
  }
  if (!in.at_end()) throw FormatError("trailing bytes after embedding data", in.offset());
  return file;
}

void write_embedding_file(const std::filesystem::path& path, const EmbeddingFile& file) {
  const auto bytes = encode_embeddings(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

EmbeddingFile read_embedding_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_embeddings(bytes);
}

MetricReport compute_metrics(std::span<const std::size_t> predicted,
                             std::span<const std::size_t> labels, std::size_t classes) {
  if (predicted.size() != labels.size()) throw ShapeError("compute_metrics: length mismatch");
  if (labels.empty()) throw ValidationError("compute_metrics: empty test set");
  std::vector<std::size_t> tp(classes, 0), fp(classes, 0), fn(classes, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes || predicted[i] >= classes) {
      throw ValidationError("compute_metrics: class index out of range");
    }
    if (predicted[i] == labels[i]) {
      ++correct;
      ++tp[labels[i]];
    } else {
      ++fp[predicted[i]];
      ++fn[labels[i]];
    }
  }
  MetricReport r;
  r.sample_count = labels.size();
  r.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  for (std::size_t c = 0; c < classes; ++c) {
    const double p = tp[c] + fp[c] == 0 ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fp[c]);
    const double q = tp[c] + fn[c] == 0 ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fn[c]);
    r.precision.push_back(p);
    r.recall.push_back(q);
    r.f1.push_back(p + q == 0.0 ? 0.0 : 2.0 * p * q / (p + q));
  }
  r.macro_f1 = std::accumulate(r.f1.begin(), r.f1.end(), 0.0) / static_cast<double>(classes);
  if (classes == 2) r.binary_f1 = r.f1[1];
  return r;
}

MetricReport evaluate(const Head& head, const HeadDataset& test) {
  if (test.empty()) throw ValidationError("evaluate: empty test set");
  test.validate();
  std::vector<std::size_t> predicted;
  predicted.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    predicted.push_back(argmax(predict_proba(head, test.features.row(i), test.alignments[i])));
  }
  return compute_metrics(predicted, test.labels, test.classes);
}

}  // namespace vfl
