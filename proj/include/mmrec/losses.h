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

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mmrec/encoder.h"

namespace mmrec {

// Loss configurations. Every kernel consumes one positive score and N
// negative cosine scores per example.

/// Multi-margin cosine loss: w_p * (1 - s_pos) plus, per negative, a weighted
/// sum of hinges max(0, s_neg - m_k) averaged over the N negatives.
/// `neg_ratio` is R in a w_p:w_n = 1:R setting; it scales every margin weight.
struct Mmcl {
  std::vector<double> margins;
  std::vector<double> margin_weights;
  double pos_weight = 1.0;
  double neg_ratio = 1.0;
};

/// Single-margin cosine contrastive loss.
struct Ccl {
  double margin = 0.9;
  double neg_weight = 1.0;
};

/// Distance-based contrastive loss with a squared hinge on negatives.
struct Contrastive {
  double margin = 1.0;
};

/// Hinge on squared distances, max(0, d_pos^2 - d_neg^2 + m).
struct Triplet {
  double margin = 0.1;
};

struct InfoNce {};

/// Bilateral softmax; with a single positive the positive side is -s_pos.
struct Bsl {
  double tau_pos = 1.0;
  double tau_neg = 1.0;
};

struct Bpr {};

struct PairwiseHinge {
  double margin = 1.0;
};

/// Same computation as InfoNce.
struct SoftmaxCe {};

struct Mse {};

enum class PositiveTerm {
  kOneMinusSimilarity,  // 1 - s(u,i)
  kSquaredDistance,     // d(u,i)^2
};

enum class NegativeTerm {
  kSimilarity,        // s(u,j)
  kSimilarityMargin,  // s(u,j) - m
  kDistanceMargin,    // m - d(u,j)
  kTripletDistance,   // d(u,i) - d(u,j) + m
};

/// w_p * f(u,i) + (w_n / N) * sum_j max(0, f(u,i,j,m)).
/// Similarity-based negative terms pair with 1 - s; distance-based ones
/// pair with d^2.
struct Generalized {
  double pos_weight = 1.0;
  double neg_weight = 1.0;
  double margin = 0.0;
  PositiveTerm positive = PositiveTerm::kOneMinusSimilarity;
  NegativeTerm inner = NegativeTerm::kSimilarityMargin;
};

using LossSpec = std::variant<Mmcl, Ccl, Contrastive, Triplet, InfoNce, Bsl,
                              Bpr, PairwiseHinge, SoftmaxCe, Mse, Generalized>;

/// Lower-case discriminator used in config files ("mmcl", "ccl", ...).
std::string_view loss_kind(const LossSpec& spec);

/// Throws std::invalid_argument naming the offending parameter.
void validate(const LossSpec& spec);

/// Batch-mean loss and its exact gradient with respect to every score.
struct LossResult {
  double loss = 0.0;
  std::vector<double> dL_dpos;
  std::vector<double> dL_dneg;
};

LossResult evaluate(const LossSpec& spec, const ScoreView& scores);

LossResult mmcl(const Mmcl& spec, const ScoreView& scores);
LossResult ccl(const Ccl& spec, const ScoreView& scores);
LossResult contrastive(const Contrastive& spec, const ScoreView& scores);
LossResult triplet(const Triplet& spec, const ScoreView& scores);
LossResult info_nce(const ScoreView& scores);
LossResult bsl(const Bsl& spec, const ScoreView& scores);
LossResult bpr(const ScoreView& scores);
LossResult pairwise_hinge(const PairwiseHinge& spec, const ScoreView& scores);
LossResult softmax_ce(const ScoreView& scores);
LossResult mse(const ScoreView& scores);
LossResult generalized(const Generalized& spec, const ScoreView& scores);

/// Distances below this floor use it in d(d)/ds = -1/d.
inline constexpr double kDistanceGradFloor = 1e-6;

}  // namespace mmrec
