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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mmrec {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;

/// Raised when an adjacency file contains a token that is not a
/// non-negative decimal integer. The message names file and line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::filesystem::path& file, std::size_t line,
             const std::string& what);

  const std::filesystem::path& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::filesystem::path file_;
  std::size_t line_;
};

/// Structural problems with a dataset: empty input, overlapping
/// train/test sets, out-of-range ids.
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainPair {
  UserId user;
  ItemId item;

  friend bool operator==(const TrainPair&, const TrainPair&) = default;
};

/// Implicit-feedback interactions split into train and test positives.
///
/// Per-user lists are sorted and duplicate-free. `train_history` keeps the
/// same train items in first-seen file order; the behavior-pooling encoder
/// reads its most recent entries.
struct InteractionDataset {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::vector<std::vector<ItemId>> train_positives;
  std::vector<std::vector<ItemId>> test_positives;
  std::vector<std::vector<ItemId>> train_history;
  std::vector<TrainPair> train_pairs;

  bool is_train_positive(UserId user, ItemId item) const;

  friend bool operator==(const InteractionDataset&,
                         const InteractionDataset&) = default;
};

struct DatasetStats {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::size_t num_train = 0;
  std::size_t num_test = 0;
  double density = 0.0;
};

/// Reads whitespace-separated adjacency files: each non-blank line is a user
/// id followed by that user's item ids.
InteractionDataset load_adjacency_text(const std::filesystem::path& train_path,
                                       const std::filesystem::path& test_path);

/// Writes one line per user (user id, then items). Train items are written in
/// history order so that a reload reproduces the dataset exactly.
void write_adjacency_text(const InteractionDataset& ds,
                          const std::filesystem::path& train_path,
                          const std::filesystem::path& test_path);

/// Builds a dataset from per-user lists (file order), applying the same
/// dedup, sorting and validation as the loader.
InteractionDataset build_dataset(std::size_t num_users, std::size_t num_items,
                                 std::vector<std::vector<ItemId>> train,
                                 std::vector<std::vector<ItemId>> test);

/// Throws DatasetError if any invariant is violated.
void validate(const InteractionDataset& ds);

DatasetStats stats(const InteractionDataset& ds);

/// Clustered toy data. Users and items are assigned to clusters round-robin
/// (`id % num_clusters`). Each cluster draws a seeded 40% core of its items
/// that all of its users interact with; each user additionally gets
/// `round(noise * core size)` random items from other clusters. Interactions
/// are split 80/20 per user into train/test.
InteractionDataset make_synthetic(std::size_t num_users, std::size_t num_items,
                                  std::size_t num_clusters, double noise,
                                  std::uint64_t seed);

/// Moves a seeded ~10% of each user's train items (at least one when the user
/// has two or more) into a holdout. The returned dataset trains on the rest
/// and uses the holdout as its test split; the original test split is dropped.
InteractionDataset carve_validation(const InteractionDataset& ds,
                                    std::uint64_t seed);

}  // namespace mmrec
