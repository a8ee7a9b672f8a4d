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

#include "mmrec/encoder.h"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <string>

#include "mmrec/parallel.h"

namespace mmrec {

EmbeddingTable::EmbeddingTable(std::size_t num_users, std::size_t num_items,
                               std::size_t dim)
    : num_users_(num_users),
      num_items_(num_items),
      dim_(dim),
      users_(num_users * dim, 0.0),
      items_(num_items * dim, 0.0) {
  if (dim == 0) throw std::invalid_argument("embedding dim must be >= 1");
}

EmbeddingTable init_embeddings(std::size_t num_users, std::size_t num_items,
                               std::size_t dim, std::uint64_t seed) {
  EmbeddingTable tbl(num_users, num_items, dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.01);
  for (double& x : tbl.user_data()) x = normal(rng);
  for (double& x : tbl.item_data()) x = normal(rng);
  return tbl;
}

namespace {

constexpr std::array<char, 8> kMagic = {'M', 'R', 'E', 'C',
                                        'E', 'M', 'B', '1'};

void put_u64(std::ofstream& out, std::uint64_t v) {
  std::array<char, 8> bytes;
  for (int k = 0; k < 8; ++k) bytes[k] = static_cast<char>((v >> (8 * k)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

void put_f32(std::ofstream& out, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  std::array<char, 4> bytes;
  for (int k = 0; k < 4; ++k) bytes[k] = static_cast<char>((bits >> (8 * k)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | p[k];
  return v;
}

float get_f32(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int k = 3; k >= 0; --k) bits = (bits << 8) | p[k];
  return std::bit_cast<float>(bits);
}

}  // namespace

void save_checkpoint(const EmbeddingTable& tbl,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, tbl.num_users());
  put_u64(out, tbl.num_items());
  put_u64(out, tbl.dim());
  for (double x : tbl.user_data()) put_f32(out, x);
  for (double x : tbl.item_data()) put_f32(out, x);
  if (!out) throw CheckpointError("write failed: " + path.string());
}

EmbeddingTable load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  constexpr std::size_t kHeader = 8 + 3 * 8;
  if (bytes.size() < kHeader ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw CheckpointError(path.string() + ": not an embedding checkpoint");
  }
  const std::uint64_t num_users = get_u64(bytes.data() + 8);
  const std::uint64_t num_items = get_u64(bytes.data() + 16);
  const std::uint64_t dim = get_u64(bytes.data() + 24);
  if (dim == 0) throw CheckpointError(path.string() + ": zero dimension");
  const std::uint64_t payload = bytes.size() - kHeader;
  if (payload % 4 != 0 || payload / 4 / dim != num_users + num_items ||
      payload / 4 % dim != 0) {
    throw CheckpointError(path.string() + ": size does not match header (" +
                          std::to_string(num_users) + " users, " +
                          std::to_string(num_items) + " items, dim " +
                          std::to_string(dim) + ")");
  }
  EmbeddingTable tbl(num_users, num_items, dim);
  const unsigned char* p = bytes.data() + kHeader;
  for (double& x : tbl.user_data()) {
    x = get_f32(p);
    p += 4;
  }
  for (double& x : tbl.item_data()) {
    x = get_f32(p);
    p += 4;
  }
  return tbl;
}

void validate(const EncoderConfig& cfg) {
  if (cfg.dim == 0) throw std::invalid_argument("encoder dim must be >= 1");
  if (!(cfg.gate >= 0.0 && cfg.gate <= 1.0)) {
    throw std::invalid_argument("encoder gate must be in [0, 1]");
  }
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double clamp_unit(double s) { return std::clamp(s, -1.0, 1.0); }

}  // namespace

double cosine(std::span<const double> u, std::span<const double> i) {
  if (u.size() != i.size()) {
    throw std::invalid_argument("cosine: dimension mismatch");
  }
  const double nu = std::max(std::sqrt(dot(u, u)), kNormEpsilon);
  const double ni = std::max(std::sqrt(dot(i, i)), kNormEpsilon);
  return clamp_unit(dot(u, i) / (nu * ni));
}

double cosine_distance(double score) {
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * score));
}

std::span<const ItemId> pooled_history(const EncoderConfig& enc,
                                       const InteractionDataset& ds,
                                       UserId user) {
  std::span<const ItemId> history = ds.train_history[user];
  if (history.size() > enc.history_cap) {
    history = history.last(enc.history_cap);
  }
  return history;
}

void user_vector_into(const EncoderConfig& enc, const EmbeddingTable& tbl,
                      const InteractionDataset& ds, UserId user,
                      std::span<double> out) {
  if (user >= tbl.num_users()) {
    throw std::out_of_range("user " + std::to_string(user) + " out of range");
  }
  const auto row = tbl.user(user);
  std::copy(row.begin(), row.end(), out.begin());
  if (enc.kind == EncoderKind::kMF) return;

  const auto history = pooled_history(enc, ds, user);
  if (history.empty()) return;
  const double pool_scale = (1.0 - enc.gate) / static_cast<double>(history.size());
  for (double& x : out) x *= enc.gate;
  for (ItemId item : history) {
    const auto e = tbl.item(item);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += pool_scale * e[k];
  }
}

std::vector<double> user_vector(const EncoderConfig& enc,
                                const EmbeddingTable& tbl,
                                const InteractionDataset& ds, UserId user) {
  std::vector<double> out(tbl.dim());
  user_vector_into(enc, tbl, ds, user, out);
  return out;
}

ScoredBatch score_batch(const EncoderConfig& enc, const EmbeddingTable& tbl,
                        const InteractionDataset& ds,
                        std::span<const TrainingExample> batch,
                        std::size_t threads) {
  ScoredBatch out;
  out.dim = tbl.dim();
  out.num_negatives = batch.empty() ? 0 : batch.front().neg_items.size();
  for (const auto& ex : batch) {
    if (ex.neg_items.size() != out.num_negatives) {
      throw std::invalid_argument(
          "score_batch: examples have different negative counts");
    }
    if (ex.user >= tbl.num_users() || ex.pos_item >= tbl.num_items()) {
      throw std::out_of_range("score_batch: id out of range");
    }
    for (ItemId j : ex.neg_items) {
      if (j >= tbl.num_items()) {
        throw std::out_of_range("score_batch: negative id out of range");
      }
    }
  }
  const std::size_t n = batch.size();
  const std::size_t neg = out.num_negatives;
  out.pos_scores.resize(n);
  out.neg_scores.resize(n * neg);
  out.user_vectors.resize(n * out.dim);

  parallel_for(n, threads, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t b = begin; b < end; ++b) {
      const auto& ex = batch[b];
      std::span<double> v(out.user_vectors.data() + b * out.dim, out.dim);
      user_vector_into(enc, tbl, ds, ex.user, v);
      out.pos_scores[b] = cosine(v, tbl.item(ex.pos_item));
      for (std::size_t j = 0; j < neg; ++j) {
        out.neg_scores[b * neg + j] = cosine(v, tbl.item(ex.neg_items[j]));
      }
    }
  });
  return out;
}

std::span<double> SparseRows::row(std::uint32_t id) {
  auto [it, inserted] = slots_.try_emplace(id, ids_.size());
  if (inserted) {
    ids_.push_back(id);
    values_.resize(values_.size() + dim_, 0.0);
  }
  return {values_.data() + it->second * dim_, dim_};
}

std::ptrdiff_t SparseRows::find(std::uint32_t id) const {
  const auto it = slots_.find(id);
  return it == slots_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

void SparseRows::add(std::uint32_t id, std::span<const double> g,
                     double scale) {
  auto dst = row(id);
  for (std::size_t k = 0; k < dim_; ++k) dst[k] += scale * g[k];
}

void SparseRows::merge(const SparseRows& other) {
  for (std::size_t s = 0; s < other.size(); ++s) {
    add(other.id_at(s), other.row_at(s));
  }
}

namespace {

// Accumulates c * ds/dv into grad_v and c * ds/de into the item row, where
// s = cos(v, e). Norms below kNormEpsilon are treated as the constant
// epsilon, so their normalization term drops out.
void cosine_backward(std::span<const double> v, std::span<const double> e,
                     double score, double coeff, std::span<double> grad_v,
                     std::span<double> grad_e) {
  const double nv_raw = std::sqrt(dot(v, v));
  const double ne_raw = std::sqrt(dot(e, e));
  const double nv = std::max(nv_raw, kNormEpsilon);
  const double ne = std::max(ne_raw, kNormEpsilon);
  const double inv = coeff / (nv * ne);
  const double v_self = nv_raw >= kNormEpsilon ? coeff * score / (nv * nv) : 0.0;
  const double e_self = ne_raw >= kNormEpsilon ? coeff * score / (ne * ne) : 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    grad_v[k] += inv * e[k] - v_self * v[k];
    grad_e[k] += inv * v[k] - e_self * e[k];
  }
}

void backward_range(const EncoderConfig& enc, const EmbeddingTable& tbl,
                    const InteractionDataset& ds,
                    std::span<const TrainingExample> batch,
                    const ScoredBatch& scored, std::span<const double> dL_dpos,
                    std::span<const double> dL_dneg, std::size_t begin,
                    std::size_t end, GradientAccumulator& acc) {
  const std::size_t dim = tbl.dim();
  const std::size_t neg = scored.num_negatives;
  std::vector<double> grad_v(dim);
  for (std::size_t b = begin; b < end; ++b) {
    const auto& ex = batch[b];
    const auto v = scored.user_vector(b);
    std::fill(grad_v.begin(), grad_v.end(), 0.0);
    bool touched = false;

    if (dL_dpos[b] != 0.0) {
      cosine_backward(v, tbl.item(ex.pos_item), scored.pos_scores[b],
                      dL_dpos[b], grad_v, acc.items.row(ex.pos_item));
      touched = true;
    }
    for (std::size_t j = 0; j < neg; ++j) {
      const double c = dL_dneg[b * neg + j];
      if (c == 0.0) continue;
      const ItemId item = ex.neg_items[j];
      cosine_backward(v, tbl.item(item), scored.neg_scores[b * neg + j], c,
                      grad_v, acc.items.row(item));
      touched = true;
    }
    if (!touched) continue;

    if (enc.kind == EncoderKind::kMF) {
      acc.users.add(ex.user, grad_v);
      continue;
    }
    const auto history = pooled_history(enc, ds, ex.user);
    if (history.empty()) {
      acc.users.add(ex.user, grad_v);
      continue;
    }
    acc.users.add(ex.user, grad_v, enc.gate);
    const double pool_scale =
        (1.0 - enc.gate) / static_cast<double>(history.size());
    if (pool_scale == 0.0) continue;
    for (ItemId item : history) acc.items.add(item, grad_v, pool_scale);
  }
}

}  // namespace

GradientAccumulator backward_scores(const EncoderConfig& enc,
                                    const EmbeddingTable& tbl,
                                    const InteractionDataset& ds,
                                    std::span<const TrainingExample> batch,
                                    const ScoredBatch& scored,
                                    std::span<const double> dL_dpos,
                                    std::span<const double> dL_dneg,
                                    std::size_t threads) {
  if (dL_dpos.size() != scored.pos_scores.size() ||
      dL_dneg.size() != scored.neg_scores.size() ||
      batch.size() != scored.num_examples()) {
    throw std::invalid_argument("backward_scores: gradient shape mismatch");
  }
  const std::size_t n = batch.size();
  const std::size_t workers = worker_count(n, threads);
  std::vector<GradientAccumulator> partial(workers,
                                           GradientAccumulator(tbl.dim()));
  parallel_for(n, workers,
               [&](std::size_t begin, std::size_t end, std::size_t w) {
                 backward_range(enc, tbl, ds, batch, scored, dL_dpos, dL_dneg,
                                begin, end, partial[w]);
               });
  GradientAccumulator out = std::move(partial.front());
  for (std::size_t w = 1; w < workers; ++w) out.merge(partial[w]);
  return out;
}

}  // namespace mmrec
