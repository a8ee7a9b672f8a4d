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

#include "mmrec/dataset.h"

#include <cstdlib>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "test_util.h"

namespace mmrec {
namespace {

using testing::TempDir;
using testing::write_file;

TEST(LoadAdjacency, DedupsAndSortsSingleLine) {
  TempDir dir;
  write_file(dir / "train.txt", "0 5 3 3\n");
  write_file(dir / "test.txt", "0\n");
  const auto ds = load_adjacency_text(dir / "train.txt", dir / "test.txt");
  EXPECT_EQ(ds.num_users, 1u);
  EXPECT_EQ(ds.num_items, 6u);
  EXPECT_EQ(ds.train_positives[0], (std::vector<ItemId>{3, 5}));
  EXPECT_EQ(ds.train_history[0], (std::vector<ItemId>{5, 3}));
  EXPECT_EQ(ds.train_pairs.size(), 2u);
}

TEST(LoadAdjacency, BlankLinesAndMissingTrailingNewline) {
  TempDir dir;
  write_file(dir / "train.txt", "\n0 1 2\n\n   \n1 0");
  write_file(dir / "test.txt", "0 3\r\n1 2\n");
  const auto ds = load_adjacency_text(dir / "train.txt", dir / "test.txt");
  EXPECT_EQ(ds.num_users, 2u);
  EXPECT_EQ(ds.num_items, 4u);
  EXPECT_EQ(ds.test_positives[0], (std::vector<ItemId>{3}));
  EXPECT_EQ(ds.train_pairs.size(), 3u);
}

TEST(LoadAdjacency, UserOnlyInTestHasEmptyTrain) {
  TempDir dir;
  write_file(dir / "train.txt", "0 1\n");
  write_file(dir / "test.txt", "0 2\n3 0 1\n");
  const auto ds = load_adjacency_text(dir / "train.txt", dir / "test.txt");
  EXPECT_EQ(ds.num_users, 4u);
  EXPECT_TRUE(ds.train_positives[3].empty());
  EXPECT_EQ(ds.test_positives[3], (std::vector<ItemId>{0, 1}));
}

TEST(LoadAdjacency, MalformedTokenNamesFileAndLine) {
  TempDir dir;
  write_file(dir / "train.txt", "0 1 2\n1 x7\n");
  write_file(dir / "test.txt", "0 3\n");
  try {
    load_adjacency_text(dir / "train.txt", dir / "test.txt");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.file(), dir / "train.txt");
    EXPECT_NE(std::string(e.what()).find("train.txt:2"), std::string::npos);
  }
}

TEST(LoadAdjacency, NegativeTokenIsRejected) {
  TempDir dir;
  write_file(dir / "train.txt", "0 1\n");
  write_file(dir / "test.txt", "0 -2\n");
  EXPECT_THROW(load_adjacency_text(dir / "train.txt", dir / "test.txt"),
               ParseError);
}

TEST(LoadAdjacency, EmptyFileIsAnError) {
  TempDir dir;
  write_file(dir / "train.txt", "\n\n");
  write_file(dir / "test.txt", "0 1\n");
  EXPECT_THROW(load_adjacency_text(dir / "train.txt", dir / "test.txt"),
               DatasetError);
  write_file(dir / "train.txt", "0 1\n");
  write_file(dir / "test.txt", "");
  EXPECT_THROW(load_adjacency_text(dir / "train.txt", dir / "test.txt"),
               DatasetError);
}

TEST(LoadAdjacency, OverlappingTrainAndTestIsRejected) {
  TempDir dir;
  write_file(dir / "train.txt", "0 1 2\n");
  write_file(dir / "test.txt", "0 2\n");
  EXPECT_THROW(load_adjacency_text(dir / "train.txt", dir / "test.txt"),
               DatasetError);
}

TEST(LoadAdjacency, RoundTripIsIdentity) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t users = 1 + rng() % 30;
    const std::size_t items = 2 + rng() % 40;
    std::vector<std::vector<ItemId>> train(users), test(users);
    for (std::size_t u = 0; u < users; ++u) {
      for (std::size_t i = 0; i < items; ++i) {
        const auto roll = rng() % 10;
        if (roll < 2) train[u].push_back(static_cast<ItemId>(i));
        else if (roll == 2) test[u].push_back(static_cast<ItemId>(i));
      }
      std::shuffle(train[u].begin(), train[u].end(), rng);
    }
    // Pin the extent so the max ids are observed.
    train[0].push_back(static_cast<ItemId>(items - 1));
    test[0].erase(std::remove(test[0].begin(), test[0].end(), items - 1),
                  test[0].end());
    const auto ds = build_dataset(users, items, train, test);

    TempDir dir;
    write_adjacency_text(ds, dir / "train.txt", dir / "test.txt");
    const auto back = load_adjacency_text(dir / "train.txt", dir / "test.txt");
    EXPECT_EQ(back, ds) << "seed " << seed;
  }
}

TEST(Stats, SingleInteractionHasUnitDensity) {
  const auto ds = build_dataset(1, 1, {{0}}, {{}});
  const auto s = stats(ds);
  EXPECT_EQ(s.num_train, 1u);
  EXPECT_EQ(s.num_test, 0u);
  EXPECT_DOUBLE_EQ(s.density, 1.0);
}

TEST(Stats, CountsBothSplits) {
  const auto ds = build_dataset(2, 4, {{0, 1}, {2}}, {{3}, {0, 1}});
  const auto s = stats(ds);
  EXPECT_EQ(s.num_users, 2u);
  EXPECT_EQ(s.num_items, 4u);
  EXPECT_EQ(s.num_train, 3u);
  EXPECT_EQ(s.num_test, 3u);
  EXPECT_DOUBLE_EQ(s.density, 6.0 / 8.0);
}

TEST(MakeSynthetic, Deterministic) {
  EXPECT_EQ(make_synthetic(200, 100, 2, 0.0, 7),
            make_synthetic(200, 100, 2, 0.0, 7));
  EXPECT_NE(make_synthetic(200, 100, 2, 0.0, 7),
            make_synthetic(200, 100, 2, 0.0, 8));
}

TEST(MakeSynthetic, SingleClusterHoldsEverything) {
  const auto ds = make_synthetic(10, 10, 1, 0.0, 1);
  std::set<ItemId> core;
  for (std::size_t u = 0; u < ds.num_users; ++u) {
    EXPECT_EQ(ds.train_positives[u].size() + ds.test_positives[u].size(), 4u);
    core.insert(ds.train_positives[u].begin(), ds.train_positives[u].end());
    core.insert(ds.test_positives[u].begin(), ds.test_positives[u].end());
  }
  EXPECT_EQ(core.size(), 4u);
}

TEST(MakeSynthetic, NoCrossClusterPositivesWithoutNoise) {
  const auto ds = make_synthetic(200, 100, 2, 0.0, 7);
  std::size_t cross = 0;
  for (std::size_t u = 0; u < ds.num_users; ++u) {
    for (const auto* list : {&ds.train_positives[u], &ds.test_positives[u]}) {
      for (ItemId i : *list) cross += (i % 2 != u % 2) ? 1 : 0;
    }
  }
  EXPECT_EQ(cross, 0u);
}

TEST(MakeSynthetic, NoiseAddsCrossClusterItems) {
  const auto ds = make_synthetic(50, 60, 3, 0.5, 11);
  std::size_t cross = 0;
  for (std::size_t u = 0; u < ds.num_users; ++u) {
    for (const auto* list : {&ds.train_positives[u], &ds.test_positives[u]}) {
      for (ItemId i : *list) cross += (i % 3 != u % 3) ? 1 : 0;
    }
  }
  EXPECT_GT(cross, 0u);
}

TEST(MakeSynthetic, SplitShapeAndDisjointness) {
  const auto ds = make_synthetic(200, 100, 2, 0.0, 7);
  for (std::size_t u = 0; u < ds.num_users; ++u) {
    const std::size_t n =
        ds.train_positives[u].size() + ds.test_positives[u].size();
    EXPECT_EQ(n, 20u);  // 40% of the 50 items per cluster
    EXPECT_EQ(ds.test_positives[u].size(), 4u);
  }
  EXPECT_NO_THROW(validate(ds));
}

TEST(MakeSynthetic, ArgumentErrors) {
  EXPECT_THROW(make_synthetic(10, 10, 0, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(make_synthetic(10, 3, 4, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(make_synthetic(10, 10, 2, 1.0, 1), std::invalid_argument);
}

TEST(CarveValidation, PartitionsTrainPerUser) {
  const auto ds = make_synthetic(200, 100, 2, 0.2, 3);
  const auto carved = carve_validation(ds, 5);
  for (std::size_t u = 0; u < ds.num_users; ++u) {
    std::set<ItemId> joined(carved.train_positives[u].begin(),
                            carved.train_positives[u].end());
    for (ItemId i : carved.test_positives[u]) {
      EXPECT_TRUE(joined.insert(i).second);
    }
    EXPECT_EQ(std::vector<ItemId>(joined.begin(), joined.end()),
              ds.train_positives[u]);
    const std::size_t n = ds.train_positives[u].size();
    if (n >= 2) {
      EXPECT_EQ(carved.test_positives[u].size(), std::max<std::size_t>(1, n / 10));
    }
  }
  EXPECT_EQ(carve_validation(ds, 5), carved);
}

// Public splits; present only when MMREC_DATA_DIR points at them.
TEST(PublicSplits, ReproduceDatasetStatistics) {
  const char* root = std::getenv("MMREC_DATA_DIR");
  if (root == nullptr) GTEST_SKIP() << "MMREC_DATA_DIR not set";
  struct Expected {
    const char* name;
    std::size_t users, items, train, test;
    double density;
  };
  for (const Expected& e : {Expected{"yelp18", 31668, 38048, 1237259, 324147, 0.00130},
                            Expected{"gowalla", 29858, 40981, 810128, 217242, 0.00084}}) {
    const std::filesystem::path dir = std::filesystem::path(root) / e.name;
    if (!std::filesystem::exists(dir / "train.txt")) continue;
    const auto s = stats(load_adjacency_text(dir / "train.txt", dir / "test.txt"));
    EXPECT_EQ(s.num_users, e.users) << e.name;
    EXPECT_EQ(s.num_items, e.items) << e.name;
    EXPECT_EQ(s.num_train, e.train) << e.name;
    EXPECT_EQ(s.num_test, e.test) << e.name;
    EXPECT_NEAR(s.density, e.density, 5e-6) << e.name;
  }
}

}  // namespace
}  // namespace mmrec
