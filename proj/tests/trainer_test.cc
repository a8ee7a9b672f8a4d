// Copyright 2026 The mmrec Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mmrec/trainer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <gtest/gtest.h>

#include "loss_oracle.h"
#include "test_util.h"

namespace mmrec {
namespace {

TrainConfig no_decay(double lr) {
  TrainConfig cfg;
  cfg.learning_rate = lr;
  cfg.l2_reg = 0.0;
  return cfg;
}

TEST(AdamStep, ZeroGradientLeavesTableUnchanged) {
  auto tbl = testing::random_table(3, 4, 2, 1);
  const auto before = tbl;
  AdamState state(tbl);
  GradientAccumulator g(2);
  g.users.row(1);  // touched, all zero
  g.items.row(2);
  adam_step(tbl, g, state, no_decay(0.1));
  EXPECT_TRUE(tbl == before);
  EXPECT_EQ(state.step, 1u);
}

TEST(AdamStep, FirstStepMovesByLearningRate) {
  EmbeddingTable tbl(1, 1, 1);
  tbl.item(0)[0] = 0.5;
  AdamState state(tbl);
  GradientAccumulator g(1);
  g.items.row(0)[0] = 1.0;
  adam_step(tbl, g, state, no_decay(0.01));
  // m_hat = g, v_hat = g^2, so the first step is lr * g / (|g| + eps).
  EXPECT_NEAR(tbl.item(0)[0], 0.5 - 0.01 / (1.0 + 1e-8), 1e-15);
  EXPECT_DOUBLE_EQ(tbl.user(0)[0], 0.0);
}

TEST(AdamStep, MatchesScalarRecurrence) {
  EmbeddingTable tbl(1, 1, 1);
  AdamState state(tbl);
  const std::vector<double> grads{0.3, -1.2, 0.05, 2.0, -0.7};
  double theta = 0.0, m = 0.0, v = 0.0;
  TrainConfig cfg = no_decay(0.05);
  cfg.l2_reg = 0.01;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    const double g = grads[t - 1] + cfg.l2_reg * theta;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, t));
    const double vh = v / (1.0 - std::pow(0.999, t));
    theta -= cfg.learning_rate * mh / (std::sqrt(vh) + 1e-8);

    GradientAccumulator acc(1);
    acc.users.row(0)[0] = grads[t - 1];
    adam_step(tbl, acc, state, cfg);
    EXPECT_NEAR(tbl.user(0)[0], theta, 1e-14);
  }
}

TEST(AdamStep, UntouchedRowsKeepValuesAndMoments) {
  auto tbl = testing::random_table(4, 4, 3, 2);
  AdamState state(tbl);
  GradientAccumulator g(3);
  g.items.add(1, std::vector<double>{1.0, -1.0, 0.5});
  TrainConfig cfg = no_decay(0.1);
  cfg.l2_reg = 0.5;
  const auto before = tbl;
  adam_step(tbl, g, state, cfg);
  for (ItemId i : {0u, 2u, 3u}) {
    EXPECT_TRUE(std::ranges::equal(tbl.item(i), before.item(i)));
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(state.item_m[i * 3 + k], 0.0);
  }
  EXPECT_TRUE(std::ranges::equal(tbl.user_data(), before.user_data()));
  EXPECT_FALSE(std::ranges::equal(tbl.item(1), before.item(1)));
}

TEST(AdamStep, Deterministic) {
  auto a = testing::random_table(3, 3, 2, 3);
  auto b = a;
  AdamState sa(a), sb(b);
  GradientAccumulator g(2);
  g.users.add(0, std::vector<double>{0.1, 0.2});
  g.items.add(2, std::vector<double>{-0.3, 0.4});
  for (int i = 0; i < 5; ++i) {
    adam_step(a, g, sa, no_decay(0.01));
    adam_step(b, g, sb, no_decay(0.01));
  }
  EXPECT_TRUE(a == b);
  EXPECT_TRUE(sa == sb);
}

TEST(AdamStep, NonFiniteGradientThrows) {
  auto tbl = testing::random_table(2, 2, 2, 4);
  AdamState state(tbl);
  GradientAccumulator g(2);
  g.items.row(0)[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(adam_step(tbl, g, state, no_decay(0.1)), NonFiniteError);
  g = GradientAccumulator(2);
  g.users.row(1)[0] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(adam_step(tbl, g, state, no_decay(0.1)), NonFiniteError);
}

TEST(TrainConfigValidation, RejectsBadValues) {
  TrainConfig cfg;
  cfg.learning_rate = -1.0;
  EXPECT_THROW(validate(cfg), std::invalid_argument);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_THROW(validate(cfg), std::invalid_argument);
  cfg = {};
  cfg.num_negatives = 0;
  EXPECT_THROW(validate(cfg), std::invalid_argument);
  cfg = {};
  cfg.l2_reg = std::nan("");
  EXPECT_THROW(validate(cfg), std::invalid_argument);
  EXPECT_NO_THROW(validate(TrainConfig{}));
}

const EncoderConfig kMf16{EncoderKind::kMF, 16, 0.5, 100};

TrainConfig small_run(std::size_t epochs) {
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.batch_size = 64;
  cfg.epochs = epochs;
  cfg.num_negatives = 10;
  cfg.seed = 5;
  return cfg;
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  const auto ds = make_synthetic(30, 20, 2, 0.0, 1);
  auto cfg = small_run(0);
  const auto r = train(ds, kMf16, Ccl{}, cfg);
  EXPECT_TRUE(r.trace.empty());
  EXPECT_EQ(r.selected_epoch, 0u);
  EXPECT_TRUE(r.table == init_embeddings(30, 20, 16, cfg.seed + kInitSeedOffset));
}

TEST(Train, EmptyTrainSetThrows) {
  const auto ds = build_dataset(2, 3, {{}, {}}, {{0}, {1}});
  EXPECT_THROW(train(ds, kMf16, Ccl{}, small_run(1)), std::invalid_argument);
}

TEST(Train, BitIdenticalAcrossRuns) {
  const auto ds = make_synthetic(60, 40, 2, 0.2, 3);
  for (std::size_t threads : {1u, 3u}) {
    TrainOptions opts;
    opts.threads = threads;
    const auto a = train(ds, EncoderConfig{EncoderKind::kBehaviorAvg, 8, 0.5, 10},
                         Ccl{}, small_run(3), opts);
    const auto b = train(ds, EncoderConfig{EncoderKind::kBehaviorAvg, 8, 0.5, 10},
                         Ccl{}, small_run(3), opts);
    EXPECT_TRUE(a.table == b.table);
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for (std::size_t e = 0; e < a.trace.size(); ++e) {
      EXPECT_EQ(a.trace[e].loss, b.trace[e].loss);
    }
  }
}

TEST(Train, DifferentSeedsDiffer) {
  const auto ds = make_synthetic(40, 30, 2, 0.0, 3);
  auto c1 = small_run(1);
  auto c2 = c1;
  c2.seed = 6;
  EXPECT_FALSE(train(ds, kMf16, Ccl{}, c1).table == train(ds, kMf16, Ccl{}, c2).table);
}

TEST(Train, LossFallsForEveryLossKind) {
  const auto ds = make_synthetic(100, 60, 2, 0.1, 11);
  for (const auto& [name, spec] : testing::loss_catalog()) {
    const auto r = train(ds, kMf16, spec, small_run(10));
    ASSERT_EQ(r.trace.size(), 10u);
    EXPECT_LT(r.trace.back().loss, r.trace.front().loss) << name;
    EXPECT_EQ(r.selected_epoch, 10u);
  }
}

TEST(Train, OnEpochSeesEveryRecord) {
  const auto ds = make_synthetic(30, 20, 2, 0.0, 1);
  std::vector<std::size_t> seen;
  TrainOptions opts;
  opts.on_epoch = [&](const EpochRecord& r) { seen.push_back(r.epoch); };
  train(ds, kMf16, Ccl{}, small_run(4), opts);
  EXPECT_EQ(seen, (std::vector<std::size_t>{1, 2, 3, 4}));
}

TEST(Train, EarlyStoppingReturnsBestValidationTable) {
  const auto ds = make_synthetic(120, 60, 3, 0.3, 2);
  auto cfg = small_run(60);
  cfg.learning_rate = 0.05;
  cfg.early_stop = true;
  cfg.patience = 2;
  testing::TempDir dir;
  TrainOptions opts;
  opts.checkpoint_path = dir.path() / "latest.mrecemb";
  const auto r = train(ds, kMf16, Ccl{}, cfg, opts);

  // The trace ends exactly `patience` evaluations after the best one.
  ASSERT_FALSE(r.trace.empty());
  double best = -1.0;
  std::size_t best_epoch = 0;
  for (const auto& rec : r.trace) {
    ASSERT_TRUE(rec.recall.has_value());
    if (*rec.recall > best) {
      best = *rec.recall;
      best_epoch = rec.epoch;
    }
  }
  EXPECT_EQ(r.selected_epoch, best_epoch);
  ASSERT_LT(r.trace.size(), cfg.epochs);
  EXPECT_EQ(r.trace.size(), best_epoch + cfg.patience);
  // The returned table reproduces the selected validation score.
  const auto holdout = carve_validation(ds, cfg.seed + kValidationSeedOffset);
  EXPECT_EQ(evaluate(kMf16, r.table, holdout, kValidationK).recall, best);
  EXPECT_TRUE(std::filesystem::exists(*opts.checkpoint_path));
}

TEST(Train, EvalEverySkipsValidation) {
  const auto ds = make_synthetic(40, 30, 2, 0.0, 2);
  auto cfg = small_run(6);
  cfg.early_stop = true;
  cfg.eval_every = 3;
  cfg.patience = 5;
  const auto r = train(ds, kMf16, Ccl{}, cfg);
  ASSERT_EQ(r.trace.size(), 6u);
  for (const auto& rec : r.trace) {
    EXPECT_EQ(rec.recall.has_value(), rec.epoch % 3 == 0);
  }
}

TEST(TraceCsv, WritesHeaderAndOptionalFields) {
  testing::TempDir dir;
  TrainTrace trace{{1, 0.5, 2.0, std::nullopt, std::nullopt},
                   {2, 0.25, 3.0, 0.75, 0.5}};
  write_trace_csv(trace, dir.path() / "t.csv");
  EXPECT_EQ(testing::read_file(dir.path() / "t.csv"),
            "epoch,loss,seconds,recall,ndcg\n1,0.5,2,,\n2,0.25,3,0.75,0.5\n");
  write_trace_csv(trace, dir.path() / "d.csv", false);
  EXPECT_EQ(testing::read_file(dir.path() / "d.csv"),
            "epoch,loss,seconds,recall,ndcg\n1,0.5,,,\n2,0.25,,0.75,0.5\n");
}

TEST(Sweep, SingleCellMatchesTrain) {
  const auto ds = make_synthetic(50, 30, 2, 0.0, 4);
  const SweepCell cell{"only", Ccl{}, small_run(3)};
  testing::TempDir dir;
  const auto report = sweep(ds, kMf16, std::span(&cell, 1), 10, dir.path());
  ASSERT_EQ(report.rows.size(), 1u);
  ASSERT_TRUE(report.rows[0].ok);
  const auto direct = evaluate(kMf16, train(ds, kMf16, Ccl{}, small_run(3)).table, ds, 10);
  EXPECT_EQ(report.rows[0].report.recall, direct.recall);
  EXPECT_EQ(report.rows[0].report.ndcg, direct.ndcg);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "sweep_report.csv"));
}

TEST(Sweep, RowsRankedByRecallWithFailuresLast) {
  const auto ds = make_synthetic(60, 40, 2, 0.1, 6);
  std::vector<SweepCell> grid;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto cfg = small_run(2);
    cfg.seed = seed;
    grid.push_back({"seed=" + std::to_string(seed), Ccl{}, cfg});
  }
  auto broken = small_run(2);
  broken.learning_rate = -1.0;
  grid.insert(grid.begin() + 1, SweepCell{"broken", Ccl{}, broken});
  testing::TempDir dir;
  const auto report = sweep(ds, kMf16, grid, 10, dir.path());
  ASSERT_EQ(report.rows.size(), 5u);

  auto resorted = report.rows;
  std::sort(resorted.begin(), resorted.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.ok != b.ok) return a.ok;
    if (a.report.recall != b.report.recall) return a.report.recall > b.report.recall;
    return a.cell < b.cell;
  });
  for (std::size_t i = 0; i < resorted.size(); ++i) {
    EXPECT_EQ(report.rows[i].cell, resorted[i].cell);
  }
  EXPECT_FALSE(report.rows.back().ok);
  EXPECT_EQ(report.rows.back().label, "broken");
  EXPECT_NE(report.rows.back().error.find("learning_rate"), std::string::npos);
  const auto csv = testing::read_file(dir.path() / "sweep_report.csv");
  EXPECT_NE(csv.find("failed"), std::string::npos);
  // Distinct seeds are distinct runs.
  std::set<double> recalls;
  for (const auto& row : report.rows) {
    if (row.ok) recalls.insert(row.report.ndcg);
  }
  EXPECT_GT(recalls.size(), 1u);
}

TEST(Sweep, HookReplacesEvaluation) {
  const auto ds = make_synthetic(30, 20, 2, 0.0, 4);
  const SweepCell cell{"x", Bpr{}, small_run(1)};
  testing::TempDir dir;
  std::size_t calls = 0;
  const auto report = sweep(ds, kMf16, std::span(&cell, 1), 5, dir.path(), {},
                            [&](std::size_t index, const SweepCell& c,
                                const TrainResult& r) {
                              ++calls;
                              EXPECT_EQ(index, 0u);
                              EXPECT_EQ(c.label, "x");
                              EXPECT_EQ(r.trace.size(), 1u);
                              return EvalReport{5, 0.125, 0.25, 7};
                            });
  EXPECT_EQ(calls, 1u);
  EXPECT_EQ(report.rows[0].report.recall, 0.125);
}

TEST(Sweep, EmptyGridThrows) {
  const auto ds = make_synthetic(30, 20, 2, 0.0, 4);
  testing::TempDir dir;
  EXPECT_THROW(sweep(ds, kMf16, std::span<const SweepCell>{}, 5, dir.path()),
               std::invalid_argument);
}

}  // namespace
}  // namespace mmrec
