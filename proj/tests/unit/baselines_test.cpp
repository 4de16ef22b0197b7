// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <numeric>
#include <vector>

#include "test_support.hpp"
#include "vflmope/baselines.hpp"
#include "vflmope/dataio.hpp"
#include "vflmope/error.hpp"
#include "vflmope/federation.hpp"
#include "vflmope/heads.hpp"

namespace vfl {
namespace {

using testing::random_vector;

ExchangeResult synthetic_split(std::vector<double> separation, double p_miss, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.classes = 3;
  spec.samples = 900;
  spec.dims = {4, 4};
  spec.separation = std::move(separation);
  spec.seed = seed;
  const auto fed = federation_from_synthetic(gen_synthetic(spec));
  return exchange_embeddings(fed, align_federation(fed, p_miss, seed + 1));
}

double train_accuracy(const Head& head, const HeadDataset& data) {
  return evaluate(head, data).accuracy;
}

TEST(LocalBaseline, IgnoresPassiveBlocks) {
  const auto layout = BlockLayout::from_dims({3, 2});
  const auto head = make_baseline_head(BaselineKind::Local, layout, 4, 1);
  const auto active = random_vector(2, 2);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto passive = random_vector(3, 100 + s, 50.0);
    const std::vector<BlockView> with{std::span<const double>(passive), std::span<const double>(active)};
    const std::vector<BlockView> without{std::nullopt, std::span<const double>(active)};
    EXPECT_EQ(baseline_forward(head, with), baseline_forward(head, without));
  }
}

TEST(ConcatBaseline, MissingBlocksEqualExplicitZeros) {
  const auto layout = BlockLayout::from_dims({3, 2, 2});
  const auto head = make_baseline_head(BaselineKind::SplitnnConcat, layout, 3, 4);
  const auto active = random_vector(2, 5);
  const std::vector<double> zeros3(3, 0.0), zeros2(2, 0.0);
  const std::vector<BlockView> missing{std::nullopt, std::nullopt, std::span<const double>(active)};
  const std::vector<BlockView> zeroed{std::span<const double>(zeros3), std::span<const double>(zeros2),
                                      std::span<const double>(active)};
  EXPECT_EQ(baseline_forward(head, missing), baseline_forward(head, zeroed));
}

TEST(MeanBaseline, IdenticalBlocksReduceToSingleBlock) {
  const auto layout = BlockLayout::from_dims({3, 3});
  const auto head = make_baseline_head(BaselineKind::SplitnnMean, layout, 3, 6);
  const auto block = random_vector(3, 7);
  const std::vector<BlockView> both{std::span<const double>(block), std::span<const double>(block)};
  const std::vector<BlockView> single{std::nullopt, std::span<const double>(block)};
  const auto a = baseline_forward(head, both);
  const auto b = baseline_forward(head, single);
  const auto direct = softmax(mlp_forward(head.classifier, block).logits);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(a[c], direct[c], 1e-15);
    EXPECT_NEAR(b[c], direct[c], 1e-15);
  }
}

TEST(MeanBaseline, AveragesPresentBlocksOnly) {
  const auto layout = BlockLayout::from_dims({2, 2, 2});
  const auto head = make_baseline_head(BaselineKind::SplitnnMean, layout, 2, 0);
  const std::vector<double> z{1, 2, 100, 100, 3, 6};
  EXPECT_EQ(baseline_input(head, z, AlignmentSet::of({0, 2})), (std::vector<double>{2, 4}));
  EXPECT_EQ(baseline_input(head, z, AlignmentSet::of({0, 1, 2})),
            (std::vector<double>{104.0 / 3.0, 108.0 / 3.0}));
}

TEST(MeanBaseline, UnequalWidthsAreAConfigError) {
  EXPECT_THROW(make_baseline_head(BaselineKind::SplitnnMean, BlockLayout::from_dims({3, 2}), 2, 0),
               ConfigError);
}

TEST(Baselines, OutputsAreDistributions) {
  const auto layout = BlockLayout::from_dims({2, 2});
  for (auto kind : {BaselineKind::Local, BaselineKind::SplitnnConcat, BaselineKind::SplitnnMean}) {
    const auto head = make_baseline_head(kind, layout, 5, 3);
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto p = baseline_forward(head, random_vector(4, s, 4.0), AlignmentSet::of({0, 1}));
      EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
    }
  }
}

TEST(Baselines, ConcatAtFullMissingnessEqualsZeroedPassives) {
  const auto ex = synthetic_split({2.0, 2.0}, 1.0, 3);
  const auto head = make_baseline_head(BaselineKind::SplitnnConcat, BlockLayout::from_dims({4, 4}), 3, 2);
  for (std::size_t i = 0; i < ex.test.size(); ++i) {
    const auto row = ex.test.features.row(i);
    std::vector<double> zeroed(row.begin(), row.end());
    for (std::size_t j = 0; j < 4; ++j) zeroed[j] = 0.0;
    EXPECT_EQ(baseline_forward(head, row, ex.test.alignments[i]),
              baseline_forward(head, zeroed, AlignmentSet::of({1})));
  }
}

TEST(TrainBaseline, SeparableLocalDataIsLearned) {
  const auto ex = synthetic_split({0.0, 12.0}, 0.0, 8);
  Head head = make_head(HeadKind::Local, BlockLayout::from_dims({4, 4}), 3, 1);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.adam.lr = 1e-3;
  train_head(head, ex.train, cfg);
  EXPECT_GT(train_accuracy(head, ex.train), 0.99);
}

TEST(TrainBaseline, ConcatUsesPassiveSignal) {
  const auto ex = synthetic_split({2.0, 2.0}, 0.0, 9);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.adam.lr = 1e-3;
  Head local = make_head(HeadKind::Local, BlockLayout::from_dims({4, 4}), 3, 1);
  Head concat = make_head(HeadKind::SplitnnConcat, BlockLayout::from_dims({4, 4}), 3, 1);
  train_head(local, ex.train, cfg);
  train_head(concat, ex.train, cfg);
  EXPECT_GE(evaluate(concat, ex.test).accuracy, evaluate(local, ex.test).accuracy);
}

TEST(TrainBaseline, DeterministicPerSeed) {
  const auto ex = synthetic_split({1.0, 1.0}, 0.3, 10);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 4;
  auto a = make_baseline_head(BaselineKind::SplitnnMean, BlockLayout::from_dims({4, 4}), 3, 5);
  auto b = a;
  train_baseline(a, ex.train, cfg);
  train_baseline(b, ex.train, cfg);
  EXPECT_EQ(a, b);
}

TEST(HeadKinds, NamesRoundTrip) {
  for (auto kind : {HeadKind::Mope, HeadKind::Local, HeadKind::SplitnnConcat, HeadKind::SplitnnMean}) {
    EXPECT_EQ(parse_head_kind(to_string(kind)), kind);
  }
  EXPECT_THROW(parse_head_kind("laser"), ValidationError);
}

}  // namespace
}  // namespace vfl
