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

#include "mmrec/eval.h"

#include <algorithm>
#include <cmath>
#include <queue>

#include "mmrec/parallel.h"

namespace mmrec {

namespace {

struct Scored {
  double score;
  ItemId item;
};

// True when a ranks ahead of b.
bool ranks_before(const Scored& a, const Scored& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.item < b.item;
}

double norm_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

class Ranker {
 public:
  Ranker(const EncoderConfig& enc, const EmbeddingTable& tbl,
         const InteractionDataset& ds)
      : enc_(enc), tbl_(tbl), ds_(ds), item_norms_(tbl.num_items()) {
    for (std::size_t i = 0; i < tbl.num_items(); ++i) {
      item_norms_[i] =
          std::max(norm_of(tbl.item(static_cast<ItemId>(i))), kNormEpsilon);
    }
  }

  std::vector<ItemId> topk(UserId user, std::size_t k,
                           std::vector<double>& scratch) const {
    if (k == 0) throw std::invalid_argument("rank_topk: k must be >= 1");
    scratch.resize(tbl_.dim());
    user_vector_into(enc_, tbl_, ds_, user, scratch);
    const double nu = std::max(norm_of(scratch), kNormEpsilon);

    // Max-heap on "worse", so the top is the weakest retained item.
    auto worse = [](const Scored& a, const Scored& b) {
      return ranks_before(a, b);
    };
    std::priority_queue<Scored, std::vector<Scored>, decltype(worse)> heap(
        worse);
    const auto& positives = ds_.train_positives[user];
    auto next_pos = positives.begin();
    for (std::size_t i = 0; i < tbl_.num_items(); ++i) {
      if (next_pos != positives.end() && *next_pos == i) {
        ++next_pos;
        continue;
      }
      const auto e = tbl_.item(static_cast<ItemId>(i));
      double dot = 0.0;
      for (std::size_t d = 0; d < e.size(); ++d) dot += scratch[d] * e[d];
      const Scored cand{std::clamp(dot / (nu * item_norms_[i]), -1.0, 1.0),
                        static_cast<ItemId>(i)};
      if (heap.size() < k) {
        heap.push(cand);
      } else if (ranks_before(cand, heap.top())) {
        heap.pop();
        heap.push(cand);
      }
    }
    std::vector<ItemId> out(heap.size());
    for (std::size_t p = out.size(); p-- > 0;) {
      out[p] = heap.top().item;
      heap.pop();
    }
    return out;
  }

 private:
  const EncoderConfig& enc_;
  const EmbeddingTable& tbl_;
  const InteractionDataset& ds_;
  std::vector<double> item_norms_;
};

bool contains(std::span<const ItemId> sorted, ItemId item) {
  return std::binary_search(sorted.begin(), sorted.end(), item);
}

}  // namespace

std::vector<ItemId> rank_topk(const EncoderConfig& enc,
                              const EmbeddingTable& tbl,
                              const InteractionDataset& ds, UserId user,
                              std::size_t k) {
  if (user >= ds.num_users) throw std::out_of_range("rank_topk: bad user");
  std::vector<double> scratch;
  return Ranker(enc, tbl, ds).topk(user, k, scratch);
}

double recall_at_k(std::span<const ItemId> ranked,
                   std::span<const ItemId> test) {
  if (test.empty()) throw std::invalid_argument("recall_at_k: empty test set");
  std::size_t hits = 0;
  for (ItemId item : ranked) hits += contains(test, item) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

double ndcg_at_k(std::span<const ItemId> ranked, std::span<const ItemId> test,
                 std::size_t k) {
  if (test.empty()) throw std::invalid_argument("ndcg_at_k: empty test set");
  if (k == 0) k = ranked.size();
  double dcg = 0.0;
  const std::size_t depth = std::min(k, ranked.size());
  for (std::size_t p = 0; p < depth; ++p) {
    if (contains(test, ranked[p])) dcg += 1.0 / std::log2(p + 2.0);
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min(k, test.size());
  for (std::size_t p = 0; p < ideal; ++p) idcg += 1.0 / std::log2(p + 2.0);
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

EvalReport evaluate(const EncoderConfig& enc, const EmbeddingTable& tbl,
                    const InteractionDataset& ds, std::size_t k,
                    std::size_t threads) {
  if (k == 0) throw std::invalid_argument("evaluate: k must be >= 1");
  const Ranker ranker(enc, tbl, ds);
  std::vector<double> recalls(ds.num_users, 0.0);
  std::vector<double> ndcgs(ds.num_users, 0.0);
  parallel_for(ds.num_users, threads,
               [&](std::size_t begin, std::size_t end, std::size_t) {
                 std::vector<double> scratch;
                 for (std::size_t u = begin; u < end; ++u) {
                   const auto& test = ds.test_positives[u];
                   if (test.empty()) continue;
                   const auto ranked =
                       ranker.topk(static_cast<UserId>(u), k, scratch);
                   recalls[u] = recall_at_k(ranked, test);
                   ndcgs[u] = ndcg_at_k(ranked, test, k);
                 }
               });

  EvalReport report;
  report.k = k;
  for (std::size_t u = 0; u < ds.num_users; ++u) {
    if (ds.test_positives[u].empty()) continue;
    report.recall += recalls[u];
    report.ndcg += ndcgs[u];
    ++report.users_evaluated;
  }
  if (report.users_evaluated == 0) {
    throw EvalError("evaluate: no user has test items");
  }
  report.recall /= static_cast<double>(report.users_evaluated);
  report.ndcg /= static_cast<double>(report.users_evaluated);
  return report;
}

}  // namespace mmrec
