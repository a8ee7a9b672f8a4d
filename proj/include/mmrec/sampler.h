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
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "mmrec/dataset.h"

namespace mmrec {

struct SamplerConfig {
  std::size_t num_negatives = 100;
  std::uint64_t seed = 0;
};

/// The user's train positives cover every item, so there is nothing to draw.
class UnsatisfiableSampler : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform negative sampler with replacement over items outside the user's
/// train positives. Test positives remain valid candidates.
///
/// Each worker owns one sampler; worker k uses the stream seeded with
/// `seed + k`.
class NegativeSampler {
 public:
  explicit NegativeSampler(const SamplerConfig& cfg, std::uint64_t worker = 0);

  std::size_t num_negatives() const { return num_negatives_; }

  std::vector<ItemId> sample(const InteractionDataset& ds, UserId user);

  /// Fills `out` (any length) with draws for `user`.
  void sample_into(const InteractionDataset& ds, UserId user,
                   std::span<ItemId> out);

 private:
  std::size_t num_negatives_;
  std::mt19937_64 rng_;
};

}  // namespace mmrec
