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
#include <span>
#include <stdexcept>
#include <vector>

#include "mmrec/dataset.h"
#include "mmrec/encoder.h"

namespace mmrec {

struct EvalReport {
  std::size_t k = 0;
  double recall = 0.0;
  double ndcg = 0.0;
  std::size_t users_evaluated = 0;
};

/// No user has a non-empty test set.
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Top-k items by cosine score among items that are not train positives of
/// `user`, best first; equal scores rank by ascending item id. Returns fewer
/// than k items when there are fewer candidates.
std::vector<ItemId> rank_topk(const EncoderConfig& enc,
                              const EmbeddingTable& tbl,
                              const InteractionDataset& ds, UserId user,
                              std::size_t k);

/// |ranked ∩ test| / |test|. `test` must be sorted and non-empty.
double recall_at_k(std::span<const ItemId> ranked,
                   std::span<const ItemId> test);

/// Binary-relevance NDCG with a log2(p + 1) discount and the ideal DCG
/// truncated at min(k, |test|). `k` defaults to ranked.size().
double ndcg_at_k(std::span<const ItemId> ranked, std::span<const ItemId> test,
                 std::size_t k = 0);

/// Mean Recall@k and NDCG@k over users with non-empty test sets. Users are
/// scored in parallel and reduced in user-id order.
EvalReport evaluate(const EncoderConfig& enc, const EmbeddingTable& tbl,
                    const InteractionDataset& ds, std::size_t k,
                    std::size_t threads = 1);

}  // namespace mmrec
