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
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "mmrec/dataset.h"

namespace mmrec {

/// Dense user and item embeddings, row-major.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t num_users, std::size_t num_items, std::size_t dim);

  std::size_t num_users() const { return num_users_; }
  std::size_t num_items() const { return num_items_; }
  std::size_t dim() const { return dim_; }

  std::span<double> user(UserId u) {
    return {users_.data() + std::size_t{u} * dim_, dim_};
  }
  std::span<const double> user(UserId u) const {
    return {users_.data() + std::size_t{u} * dim_, dim_};
  }
  std::span<double> item(ItemId i) {
    return {items_.data() + std::size_t{i} * dim_, dim_};
  }
  std::span<const double> item(ItemId i) const {
    return {items_.data() + std::size_t{i} * dim_, dim_};
  }

  std::span<double> user_data() { return users_; }
  std::span<const double> user_data() const { return users_; }
  std::span<double> item_data() { return items_; }
  std::span<const double> item_data() const { return items_; }

  friend bool operator==(const EmbeddingTable&,
                         const EmbeddingTable&) = default;

 private:
  std::size_t num_users_ = 0;
  std::size_t num_items_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> users_;
  std::vector<double> items_;
};

/// Entries drawn i.i.d. from normal(0, 0.01), users first, then items.
EmbeddingTable init_embeddings(std::size_t num_users, std::size_t num_items,
                               std::size_t dim, std::uint64_t seed);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary format: "MRECEMB1", then num_users, num_items, dim as LE u64,
/// then the user matrix and the item matrix as row-major LE f32.
void save_checkpoint(const EmbeddingTable& tbl,
                     const std::filesystem::path& path);
EmbeddingTable load_checkpoint(const std::filesystem::path& path);

enum class EncoderKind { kMF, kBehaviorAvg };

struct EncoderConfig {
  EncoderKind kind = EncoderKind::kMF;
  std::size_t dim = 64;
  // BehaviorAvg: v_u = gate * e_u + (1 - gate) * mean(history rows).
  double gate = 0.5;
  std::size_t history_cap = 100;
};

void validate(const EncoderConfig& cfg);

inline constexpr double kNormEpsilon = 1e-12;

/// u.i / (max(|u|, eps) * max(|i|, eps)), clamped to [-1, 1].
double cosine(std::span<const double> u, std::span<const double> i);

/// Euclidean distance between the normalized vectors: sqrt(max(0, 2 - 2s)).
double cosine_distance(double score);

/// Train items pooled by BehaviorAvg: the last `history_cap` entries of the
/// user's history in file order.
std::span<const ItemId> pooled_history(const EncoderConfig& enc,
                                       const InteractionDataset& ds,
                                       UserId user);

void user_vector_into(const EncoderConfig& enc, const EmbeddingTable& tbl,
                      const InteractionDataset& ds, UserId user,
                      std::span<double> out);
std::vector<double> user_vector(const EncoderConfig& enc,
                                const EmbeddingTable& tbl,
                                const InteractionDataset& ds, UserId user);

struct TrainingExample {
  UserId user = 0;
  ItemId pos_item = 0;
  std::vector<ItemId> neg_items;
};

/// Read-only view of scores that the loss kernels consume: `pos` holds one
/// score per example and `neg` holds `num_negatives` scores per example,
/// row-major.
struct ScoreView {
  std::span<const double> pos;
  std::span<const double> neg;
  std::size_t num_negatives = 0;

  std::size_t num_examples() const { return pos.size(); }
  std::span<const double> negatives(std::size_t b) const {
    return neg.subspan(b * num_negatives, num_negatives);
  }
};

struct ScoredBatch {
  std::size_t num_negatives = 0;
  std::vector<double> pos_scores;
  std::vector<double> neg_scores;
  // Cached for backward: pooled user vectors, row-major by example.
  std::vector<double> user_vectors;
  std::size_t dim = 0;

  std::size_t num_examples() const { return pos_scores.size(); }
  ScoreView view() const { return {pos_scores, neg_scores, num_negatives}; }
  std::span<const double> user_vector(std::size_t b) const {
    return {user_vectors.data() + b * dim, dim};
  }
};

ScoredBatch score_batch(const EncoderConfig& enc, const EmbeddingTable& tbl,
                        const InteractionDataset& ds,
                        std::span<const TrainingExample> batch,
                        std::size_t threads = 1);

/// Sparse row gradients; rows touched more than once are summed.
class SparseRows {
 public:
  explicit SparseRows(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  /// Row buffer for `id`, zero-initialized on first touch.
  std::span<double> row(std::uint32_t id);
  std::uint32_t id_at(std::size_t slot) const { return ids_[slot]; }
  std::span<const double> row_at(std::size_t slot) const {
    return {values_.data() + slot * dim_, dim_};
  }
  /// Slot of `id`, or -1 when untouched.
  std::ptrdiff_t find(std::uint32_t id) const;

  void add(std::uint32_t id, std::span<const double> g, double scale = 1.0);
  void merge(const SparseRows& other);

 private:
  std::size_t dim_;
  std::vector<std::uint32_t> ids_;
  std::vector<double> values_;
  std::unordered_map<std::uint32_t, std::size_t> slots_;
};

struct GradientAccumulator {
  explicit GradientAccumulator(std::size_t dim = 0) : users(dim), items(dim) {}

  SparseRows users;
  SparseRows items;

  bool empty() const { return users.empty() && items.empty(); }
  void merge(const GradientAccumulator& other) {
    users.merge(other.users);
    items.merge(other.items);
  }
};

/// Chains score gradients back to embedding rows through the cosine
/// normalization and, for BehaviorAvg, through the history pooling.
/// `dL_dpos` and `dL_dneg` must match the shape of `scored`. Pairs with a
/// zero score gradient are skipped.
GradientAccumulator backward_scores(const EncoderConfig& enc,
                                    const EmbeddingTable& tbl,
                                    const InteractionDataset& ds,
                                    std::span<const TrainingExample> batch,
                                    const ScoredBatch& scored,
                                    std::span<const double> dL_dpos,
                                    std::span<const double> dL_dneg,
                                    std::size_t threads = 1);

}  // namespace mmrec
