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

#include "mmrec/sampler.h"

#include <string>

namespace mmrec {

NegativeSampler::NegativeSampler(const SamplerConfig& cfg, std::uint64_t worker)
    : num_negatives_(cfg.num_negatives), rng_(cfg.seed + worker) {
  if (cfg.num_negatives < 1) {
    throw std::invalid_argument("num_negatives must be >= 1");
  }
}

std::vector<ItemId> NegativeSampler::sample(const InteractionDataset& ds,
                                            UserId user) {
  std::vector<ItemId> out(num_negatives_);
  sample_into(ds, user, out);
  return out;
}

void NegativeSampler::sample_into(const InteractionDataset& ds, UserId user,
                                  std::span<ItemId> out) {
  if (user >= ds.num_users) {
    throw std::out_of_range("user " + std::to_string(user) + " out of range");
  }
  const auto& positives = ds.train_positives[user];
  const std::size_t candidates = ds.num_items - positives.size();
  if (candidates == 0) {
    throw UnsatisfiableSampler("user " + std::to_string(user) +
                               " has every item as a train positive");
  }

  if (2 * positives.size() <= ds.num_items) {
    std::uniform_int_distribution<ItemId> pick(
        0, static_cast<ItemId>(ds.num_items - 1));
    for (auto& slot : out) {
      ItemId item;
      do {
        item = pick(rng_);
      } while (ds.is_train_positive(user, item));
      slot = item;
    }
    return;
  }

  // Dense user: draw a rank among the candidates and map it to an item id by
  // skipping over the sorted positives.
  std::uniform_int_distribution<std::size_t> pick(0, candidates - 1);
  for (auto& slot : out) {
    std::size_t item = pick(rng_);
    for (ItemId p : positives) {
      if (p <= item) {
        ++item;
      } else {
        break;
      }
    }
    slot = static_cast<ItemId>(item);
  }
}

}  // namespace mmrec
