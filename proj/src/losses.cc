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

#include "mmrec/losses.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mmrec {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

LossResult make_result(const ScoreView& scores) {
  if (scores.neg.size() != scores.pos.size() * scores.num_negatives) {
    throw std::invalid_argument("score view shape mismatch");
  }
  LossResult r;
  r.dL_dpos.assign(scores.pos.size(), 0.0);
  r.dL_dneg.assign(scores.neg.size(), 0.0);
  return r;
}

// Batch reduction: per-example terms are averaged over the batch.
double batch_scale(const ScoreView& scores) {
  return scores.pos.empty() ? 0.0 : 1.0 / static_cast<double>(scores.pos.size());
}

double neg_scale(const ScoreView& scores) {
  return scores.num_negatives == 0
             ? 0.0
             : 1.0 / static_cast<double>(scores.num_negatives);
}

// d = sqrt(2 - 2s); dd/ds = -1/d with a floor on d.
double distance_slope(double d) {
  return -1.0 / std::max(d, kDistanceGradFloor);
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

// -log softmax(z)[0] over z = (pos, negs...), with its gradient.
LossResult softmax_first(const ScoreView& scores) {
  LossResult r = make_result(scores);
  const double scale = batch_scale(scores);
  const std::size_t neg = scores.num_negatives;
  for (std::size_t b = 0; b < scores.num_examples(); ++b) {
    const auto negs = scores.negatives(b);
    double top = scores.pos[b];
    for (double s : negs) top = std::max(top, s);
    double total = std::exp(scores.pos[b] - top);
    for (double s : negs) total += std::exp(s - top);
    const double log_z = top + std::log(total);
    r.loss += scale * (log_z - scores.pos[b]);
    r.dL_dpos[b] = scale * (std::exp(scores.pos[b] - log_z) - 1.0);
    for (std::size_t j = 0; j < neg; ++j) {
      r.dL_dneg[b * neg + j] = scale * std::exp(negs[j] - log_z);
    }
  }
  return r;
}

}  // namespace

std::string_view loss_kind(const LossSpec& spec) {
  return std::visit(
      Overloaded{
          [](const Mmcl&) { return std::string_view("mmcl"); },
          [](const Ccl&) { return std::string_view("ccl"); },
          [](const Contrastive&) { return std::string_view("contrastive"); },
          [](const Triplet&) { return std::string_view("triplet"); },
          [](const InfoNce&) { return std::string_view("infonce"); },
          [](const Bsl&) { return std::string_view("bsl"); },
          [](const Bpr&) { return std::string_view("bpr"); },
          [](const PairwiseHinge&) {
            return std::string_view("pairwise_hinge");
          },
          [](const SoftmaxCe&) { return std::string_view("softmax_ce"); },
          [](const Mse&) { return std::string_view("mse"); },
          [](const Generalized&) { return std::string_view("generalized"); },
      },
      spec);
}

void validate(const LossSpec& spec) {
  std::visit(
      Overloaded{
          [](const Mmcl& s) {
            require(!s.margins.empty(), "mmcl: margins must not be empty");
            require(s.margins.size() == s.margin_weights.size(),
                    "mmcl: margin_weights must match margins in length");
            for (std::size_t k = 0; k < s.margins.size(); ++k) {
              require(s.margins[k] >= -1.0 && s.margins[k] <= 1.0,
                      "mmcl: margins must lie in [-1, 1]");
              require(k == 0 || s.margins[k - 1] < s.margins[k],
                      "mmcl: margins must be strictly ascending");
              require(s.margin_weights[k] >= 0.0,
                      "mmcl: margin_weights must be non-negative");
            }
            require(s.pos_weight > 0.0, "mmcl: pos_weight must be > 0");
            require(s.neg_ratio >= 0.0, "mmcl: neg_ratio must be >= 0");
          },
          [](const Ccl& s) {
            require(s.margin >= -1.0 && s.margin <= 1.0,
                    "ccl: margin must lie in [-1, 1]");
            require(s.neg_weight >= 0.0, "ccl: neg_weight must be >= 0");
          },
          [](const Contrastive& s) {
            require(s.margin >= 0.0, "contrastive: margin must be >= 0");
          },
          [](const Triplet& s) {
            require(s.margin >= 0.0, "triplet: margin must be >= 0");
          },
          [](const Bsl& s) {
            require(s.tau_pos > 0.0, "bsl: tau_pos must be > 0");
            require(s.tau_neg > 0.0, "bsl: tau_neg must be > 0");
          },
          [](const PairwiseHinge& s) {
            require(s.margin >= 0.0, "pairwise_hinge: margin must be >= 0");
          },
          [](const Generalized& s) {
            require(s.pos_weight >= 0.0, "generalized: pos_weight must be >= 0");
            require(s.neg_weight >= 0.0, "generalized: neg_weight must be >= 0");
            const bool distance_inner =
                s.inner == NegativeTerm::kDistanceMargin ||
                s.inner == NegativeTerm::kTripletDistance;
            const bool distance_pos = s.positive == PositiveTerm::kSquaredDistance;
            require(distance_inner == distance_pos,
                    "generalized: positive and negative terms must both be "
                    "similarity-based or both distance-based");
          },
          [](const auto&) {},
      },
      spec);
}

LossResult mmcl(const Mmcl& spec, const ScoreView& scores) {
  if (spec.margins.empty()) {
    throw std::invalid_argument("mmcl: margins must not be empty");
  }
  if (spec.margins.size() != spec.margin_weights.size()) {
    throw std::invalid_argument("mmcl: margin_weights must match margins");
  }
  LossResult r = make_result(scores);
  const double scale = batch_scale(scores);
  const double per_neg = neg_scale(scores) * spec.neg_ratio;
  const std::size_t neg = scores.num_negatives;
  for (std::size_t b = 0; b < scores.num_examples(); ++b) {
    double example = spec.pos_weight * (1.0 - scores.pos[b]);
    r.dL_dpos[b] = -scale * spec.pos_weight;
    const auto negs = scores.negatives(b);
    for (std::size_t j = 0; j < neg; ++j) {
      double hinge = 0.0;
      double slope = 0.0;
      for (std::size_t k = 0; k < spec.margins.size(); ++k) {
        if (negs[j] > spec.margins[k]) {
          hinge += spec.margin_weights[k] * (negs[j] - spec.margins[k]);
          slope += spec.margin_weights[k];
        }
      }
      example += per_neg * hinge;
      r.dL_dneg[b * neg + j] = scale * per_neg * slope;
    }
    r.loss += scale * example;
  }
  return r;
}

LossResult ccl(const Ccl& spec, const ScoreView& scores) {
  LossResult r = make_result(scores);
  const double scale = batch_scale(scores);
  const double per_neg = neg_scale(scores) * spec.neg_weight;
  const std::size_t neg = scores.num_negatives;
  for (std::size_t b = 0; b < scores.num_examples(); ++b) {
    double example = 1.0 - scores.pos[b];
    r.dL_dpos[b] = -scale;
    const auto negs = scores.negatives(b);
    for (std::size_t j = 0; j < neg; ++j) {
      if (negs[j] > spec.margin) {
        example += per_neg * (negs[j] - spec.margin);
        r.dL_dneg[b * neg + j] = scale * per_neg;
      }
    }
    r.loss += scale * example;
  }
  return r;
}

LossResult contrastive(const Contrastive& spec, const ScoreView& scores) {
  LossResult r = make_result(scores);
  const double scale = batch_scale(scores);
  const double per_neg = neg_scale(scores);
  const std::size_t neg = scores.num_negatives;
  for (std::size_t b = 0; b < scores.num_examples(); ++b) {
    const double d_pos = cosine_distance(scores.pos[b]);
    double example = 0.5 * d_pos * d_pos;
    // d^2 = 2 - 2s exactly.
    r.dL_dpos[b] = -scale;
    const auto negs = scores.negatives(b);
    for (std::size_t j = 0; j < neg; ++j) {
      const double d = cosine_distance(negs[j]);
      const double hinge = spec.margin - d;
      if (hinge > 0.0) {
        example += 0.5 * per_neg * hinge * hinge;
        r.dL_dneg[b * neg + j] =
            -scale * per_neg * hinge * distance_slope(d);
      }
    }
    r.loss += scale * example;
  }
  return r;
}

LossResult triplet(const Triplet& spec, const ScoreView& scores) {
  LossResult r = make_result(scores);
  const double scale = batch_scale(scores);
  const double per_neg = neg_scale(scores);
  const std::size_t neg = scores.num_negatives;
  for (std::size_t b = 0; b < scores.num_examples(); ++b) {
    double example = 0.0;
    const auto negs = scores.negatives(b);
    for (std::size_t j = 0; j < neg; ++j) {
      // d_pos^2 - d_neg^2 = 2 s_neg - 2 s_pos.
      const double arg = 2.0 * negs[j] - 2.0 * scores.pos[b] + spec.margin;
      if (arg > 0.0) {
        example += per_neg * arg;
        r.dL_dneg[b * neg + j] = 2.0 * scale * per_neg;
        r.dL_dpos[b] -= 2.0 * scale * per_neg;
      }
    }
    r.loss += scale * example;
  }
  return r;
}

LossResult info_nce(const ScoreView& scores) { return softmax_first(scores); }

LossResult softmax_ce(const ScoreView& scores) {
  return softmax_first(scores);
}

LossResult bsl(const Bsl& spec, const ScoreView& scores) {
  if (!(spec.tau_pos > 0.0) || !(spec.tau_neg > 0.0)) {
    throw std::invalid_argument("bsl: temperatures must be > 0");
  }
  LossResult r = make_result(scores);
  const double scale = batch_scale(scores);
  const std::size_t neg = scores.num_negatives;
  const double tau = spec.tau_neg;
  for (std::size_t b = 0; b < scores.num_examples(); ++b) {
    double example = -scores.pos[b];
    r.dL_dpos[b] = -scale;
    if (neg > 0) {
      const auto negs = scores.negatives(b);
      const double top = *std::max_element(negs.begin(), negs.end()) / tau;
      double total = 0.0;
      for (double s : negs) total += std::exp(s / tau - top);
      const double log_mean =
          top + std::log(total) - std::log(static_cast<double>(neg));
      example += tau * log_mean;
      for (std::size_t j = 0; j < neg; ++j) {
        r.dL_dneg[b * neg + j] = scale * std::exp(negs[j] / tau - top) / total;
      }
    }
    r.loss += scale * example;
  }
  return r;
}

LossResult bpr(const ScoreView& scores) {
  LossResult r = make_result(scores);
  const double scale = batch_scale(scores);
  const double per_neg = neg_scale(scores);
  const std::size_t neg = scores.num_negatives;
  for (std::size_t b = 0; b < scores.num_examples(); ++b) {
    double example = 0.0;
    const auto negs = scores.negatives(b);
    for (std::size_t j = 0; j < neg; ++j) {
      const double x = scores.pos[b] - negs[j];
      // -log sigmoid(x) = softplus(-x).
      example += per_neg * (std::max(-x, 0.0) + std::log1p(std::exp(-std::abs(x))));
      const double sig_neg = 1.0 / (1.0 + std::exp(x));
      r.dL_dneg[b * neg + j] = scale * per_neg * sig_neg;
      r.dL_dpos[b] -= scale * per_neg * sig_neg;
    }
    r.loss += scale * example;
  }
  return r;
}

LossResult pairwise_hinge(const PairwiseHinge& spec, const ScoreView& scores) {
  LossResult r = make_result(scores);
  const double scale = batch_scale(scores);
  const double per_neg = neg_scale(scores);
  const std::size_t neg = scores.num_negatives;
  for (std::size_t b = 0; b < scores.num_examples(); ++b) {
    double example = 0.0;
    const auto negs = scores.negatives(b);
    for (std::size_t j = 0; j < neg; ++j) {
      const double arg = spec.margin - (scores.pos[b] - negs[j]);
      if (arg > 0.0) {
        example += per_neg * arg;
        r.dL_dneg[b * neg + j] = scale * per_neg;
        r.dL_dpos[b] -= scale * per_neg;
      }
    }
    r.loss += scale * example;
  }
  return r;
}

LossResult mse(const ScoreView& scores) {
  LossResult r = make_result(scores);
  const double scale = batch_scale(scores);
  const double per_neg = neg_scale(scores);
  const std::size_t neg = scores.num_negatives;
  for (std::size_t b = 0; b < scores.num_examples(); ++b) {
    const double miss = scores.pos[b] - 1.0;
    double example = miss * miss;
    r.dL_dpos[b] = 2.0 * scale * miss;
    const auto negs = scores.negatives(b);
    for (std::size_t j = 0; j < neg; ++j) {
      example += per_neg * negs[j] * negs[j];
      r.dL_dneg[b * neg + j] = 2.0 * scale * per_neg * negs[j];
    }
    r.loss += scale * example;
  }
  return r;
}

LossResult generalized(const Generalized& spec, const ScoreView& scores) {
  validate(LossSpec(spec));
  LossResult r = make_result(scores);
  const double scale = batch_scale(scores);
  const double per_neg = neg_scale(scores) * spec.neg_weight;
  const std::size_t neg = scores.num_negatives;
  for (std::size_t b = 0; b < scores.num_examples(); ++b) {
    const double s_pos = scores.pos[b];
    const double d_pos = cosine_distance(s_pos);
    double example = 0.0;
    if (spec.positive == PositiveTerm::kOneMinusSimilarity) {
      example += spec.pos_weight * (1.0 - s_pos);
      r.dL_dpos[b] = -scale * spec.pos_weight;
    } else {
      example += spec.pos_weight * d_pos * d_pos;
      r.dL_dpos[b] = -2.0 * scale * spec.pos_weight;
    }

    const auto negs = scores.negatives(b);
    for (std::size_t j = 0; j < neg; ++j) {
      const double s = negs[j];
      double arg = 0.0;
      double slope_neg = 0.0;  // d(arg)/d(s_neg)
      double slope_pos = 0.0;  // d(arg)/d(s_pos)
      switch (spec.inner) {
        case NegativeTerm::kSimilarity:
          arg = s;
          slope_neg = 1.0;
          break;
        case NegativeTerm::kSimilarityMargin:
          arg = s - spec.margin;
          slope_neg = 1.0;
          break;
        case NegativeTerm::kDistanceMargin: {
          const double d = cosine_distance(s);
          arg = spec.margin - d;
          slope_neg = -distance_slope(d);
          break;
        }
        case NegativeTerm::kTripletDistance: {
          const double d = cosine_distance(s);
          arg = d_pos - d + spec.margin;
          slope_neg = -distance_slope(d);
          slope_pos = distance_slope(d_pos);
          break;
        }
      }
      if (arg > 0.0) {
        example += per_neg * arg;
        r.dL_dneg[b * neg + j] = scale * per_neg * slope_neg;
        r.dL_dpos[b] += scale * per_neg * slope_pos;
      }
    }
    r.loss += scale * example;
  }
  return r;
}

LossResult evaluate(const LossSpec& spec, const ScoreView& scores) {
  return std::visit(
      Overloaded{
          [&](const Mmcl& s) { return mmcl(s, scores); },
          [&](const Ccl& s) { return ccl(s, scores); },
          [&](const Contrastive& s) { return contrastive(s, scores); },
          [&](const Triplet& s) { return triplet(s, scores); },
          [&](const InfoNce&) { return info_nce(scores); },
          [&](const Bsl& s) { return bsl(s, scores); },
          [&](const Bpr&) { return bpr(scores); },
          [&](const PairwiseHinge& s) { return pairwise_hinge(s, scores); },
          [&](const SoftmaxCe&) { return softmax_ce(scores); },
          [&](const Mse&) { return mse(scores); },
          [&](const Generalized& s) { return generalized(s, scores); },
      },
      spec);
}

}  // namespace mmrec
