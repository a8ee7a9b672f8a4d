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

// Finite-difference oracle for the encoder backward pass. The forward
// evaluation here is written out independently of score_batch.

#include <algorithm>
#include <cmath>
#include <vector>

#include "mmrec/encoder.h"
#include "test_util.h"

namespace mmrec::testing {

inline double naive_cosine(const std::vector<double>& a,
                           const std::vector<double>& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

inline std::vector<double> row_of(std::span<const double> r) {
  return {r.begin(), r.end()};
}

inline std::vector<double> naive_user_vector(const EncoderConfig& enc,
                                             const EmbeddingTable& tbl,
                                             const InteractionDataset& ds,
                                             UserId u) {
  std::vector<double> v = row_of(tbl.user(u));
  if (enc.kind == EncoderKind::kMF) return v;
  const auto& history = ds.train_history[u];
  const std::size_t take = std::min(history.size(), enc.history_cap);
  if (take == 0) return v;
  std::vector<double> mean(v.size(), 0.0);
  for (std::size_t h = history.size() - take; h < history.size(); ++h) {
    const auto e = tbl.item(history[h]);
    for (std::size_t k = 0; k < v.size(); ++k) mean[k] += e[k];
  }
  for (std::size_t k = 0; k < v.size(); ++k) {
    v[k] = enc.gate * v[k] + (1.0 - enc.gate) * mean[k] / static_cast<double>(take);
  }
  return v;
}

/// sum over examples of c_pos * s(u, pos) + sum_j c_neg * s(u, neg_j).
inline double naive_objective(const EncoderConfig& enc,
                              const EmbeddingTable& tbl,
                              const InteractionDataset& ds,
                              const std::vector<TrainingExample>& batch,
                              const std::vector<double>& c_pos,
                              const std::vector<double>& c_neg) {
  double total = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto v = naive_user_vector(enc, tbl, ds, batch[b].user);
    total += c_pos[b] * naive_cosine(v, row_of(tbl.item(batch[b].pos_item)));
    const std::size_t n = batch[b].neg_items.size();
    for (std::size_t j = 0; j < n; ++j) {
      total += c_neg[b * n + j] *
               naive_cosine(v, row_of(tbl.item(batch[b].neg_items[j])));
    }
  }
  return total;
}

struct FdReport {
  double max_rel_error = 0.0;
  std::size_t entries = 0;
};

/// Compares backward_scores against central differences (step h) on every
/// entry of every user and item row the batch can influence.
inline FdReport check_encoder_gradients(const EncoderConfig& enc,
                                        EmbeddingTable tbl,
                                        const InteractionDataset& ds,
                                        const std::vector<TrainingExample>& batch,
                                        const std::vector<double>& c_pos,
                                        const std::vector<double>& c_neg,
                                        double h = 1e-5) {
  const ScoredBatch scored = score_batch(enc, tbl, ds, batch);
  const GradientAccumulator grads =
      backward_scores(enc, tbl, ds, batch, scored, c_pos, c_neg);

  std::vector<UserId> users;
  std::vector<ItemId> items;
  for (const auto& ex : batch) {
    users.push_back(ex.user);
    items.push_back(ex.pos_item);
    items.insert(items.end(), ex.neg_items.begin(), ex.neg_items.end());
    if (enc.kind == EncoderKind::kBehaviorAvg) {
      const auto& hist = ds.train_history[ex.user];
      items.insert(items.end(), hist.begin(), hist.end());
    }
  }
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());

  FdReport report;
  auto probe = [&](std::span<double> row, const SparseRows& rows,
                   std::uint32_t id) {
    const std::ptrdiff_t slot = rows.find(id);
    for (std::size_t k = 0; k < row.size(); ++k) {
      const double analytic = slot < 0 ? 0.0 : rows.row_at(slot)[k];
      const double saved = row[k];
      row[k] = saved + h;
      const double up = naive_objective(enc, tbl, ds, batch, c_pos, c_neg);
      row[k] = saved - h;
      const double down = naive_objective(enc, tbl, ds, batch, c_pos, c_neg);
      row[k] = saved;
      const double numeric = (up - down) / (2.0 * h);
      report.max_rel_error =
          std::max(report.max_rel_error, fd_rel_error(analytic, numeric));
      ++report.entries;
    }
  };
  for (UserId u : users) probe(tbl.user(u), grads.users, u);
  for (ItemId i : items) probe(tbl.item(i), grads.items, i);
  return report;
}

}  // namespace mmrec::testing
