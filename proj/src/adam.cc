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

#include "mmrec/trainer.h"

#include <cmath>
#include <string>

namespace mmrec {

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) {
    throw std::invalid_argument("learning_rate must be > 0");
  }
  if (!(cfg.l2_reg >= 0.0)) throw std::invalid_argument("l2_reg must be >= 0");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (cfg.num_negatives < 1) {
    throw std::invalid_argument("num_negatives must be >= 1");
  }
  if (cfg.patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (cfg.eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
}

AdamState::AdamState(const EmbeddingTable& tbl)
    : user_m(tbl.user_data().size(), 0.0),
      user_v(tbl.user_data().size(), 0.0),
      item_m(tbl.item_data().size(), 0.0),
      item_v(tbl.item_data().size(), 0.0) {}

namespace {

void adam_rows(std::span<double> params, std::vector<double>& m,
               std::vector<double>& v, const SparseRows& grads,
               std::size_t num_rows, const char* kind, double lr,
               double bias1, double bias2, double l2_reg) {
  const std::size_t dim = grads.dim();
  constexpr double b1 = AdamState::kBeta1;
  constexpr double b2 = AdamState::kBeta2;
  for (std::size_t s = 0; s < grads.size(); ++s) {
    const std::uint32_t id = grads.id_at(s);
    if (id >= num_rows) {
      throw std::out_of_range(std::string("adam_step: ") + kind + " row " +
                              std::to_string(id) + " out of range");
    }
    const auto g = grads.row_at(s);
    for (std::size_t k = 0; k < dim; ++k) {
      if (!std::isfinite(g[k])) {
        throw NonFiniteError(std::string("non-finite gradient in ") + kind +
                             " row " + std::to_string(id));
      }
    }
    const std::size_t base = std::size_t{id} * dim;
    for (std::size_t k = 0; k < dim; ++k) {
      double& theta = params[base + k];
      const double grad = g[k] + l2_reg * theta;
      double& mk = m[base + k];
      double& vk = v[base + k];
      mk = b1 * mk + (1.0 - b1) * grad;
      vk = b2 * vk + (1.0 - b2) * grad * grad;
      const double m_hat = mk / bias1;
      const double v_hat = vk / bias2;
      theta -= lr * m_hat / (std::sqrt(v_hat) + AdamState::kEpsilon);
    }
  }
}

}  // namespace

void adam_step(EmbeddingTable& tbl, const GradientAccumulator& grads,
               AdamState& state, const TrainConfig& cfg) {
  if (state.user_m.size() != tbl.user_data().size() ||
      state.item_m.size() != tbl.item_data().size()) {
    throw std::invalid_argument("adam_step: state does not match table");
  }
  ++state.step;
  const auto t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(AdamState::kBeta1, t);
  const double bias2 = 1.0 - std::pow(AdamState::kBeta2, t);
  adam_rows(tbl.user_data(), state.user_m, state.user_v, grads.users,
            tbl.num_users(), "user", cfg.learning_rate, bias1, bias2,
            cfg.l2_reg);
  adam_rows(tbl.item_data(), state.item_m, state.item_v, grads.items,
            tbl.num_items(), "item", cfg.learning_rate, bias1, bias2,
            cfg.l2_reg);
}

}  // namespace mmrec
