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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "mmrec/parallel.h"
#include "mmrec/sampler.h"
#include "mmrec/trainer.h"

namespace mmrec {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

class EpochRunner {
 public:
  EpochRunner(const InteractionDataset& ds, const EncoderConfig& enc,
              const LossSpec& loss, const TrainConfig& cfg,
              std::size_t threads)
      : ds_(ds),
        enc_(enc),
        loss_(loss),
        cfg_(cfg),
        threads_(std::max<std::size_t>(1, threads)),
        shuffle_rng_(cfg.seed + kShuffleSeedOffset),
        order_(ds.train_pairs.size()) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    SamplerConfig sampler_cfg{cfg.num_negatives,
                              cfg.seed + kSamplerSeedOffset};
    for (std::size_t w = 0; w < threads_; ++w) {
      samplers_.emplace_back(sampler_cfg, w);
    }
  }

  // Returns the mean per-example loss of the epoch.
  double run(std::size_t epoch, EmbeddingTable& tbl, AdamState& adam) {
    std::shuffle(order_.begin(), order_.end(), shuffle_rng_);
    double loss_sum = 0.0;
    std::vector<TrainingExample> batch;
    for (std::size_t start = 0; start < order_.size();
         start += cfg_.batch_size) {
      const std::size_t end = std::min(order_.size(), start + cfg_.batch_size);
      batch.resize(end - start);
      parallel_for(batch.size(), threads_,
                   [&](std::size_t begin, std::size_t stop, std::size_t w) {
                     for (std::size_t b = begin; b < stop; ++b) {
                       const TrainPair& pair = ds_.train_pairs[order_[start + b]];
                       auto& ex = batch[b];
                       ex.user = pair.user;
                       ex.pos_item = pair.item;
                       ex.neg_items.resize(cfg_.num_negatives);
                       samplers_[w].sample_into(ds_, pair.user, ex.neg_items);
                     }
                   });

      const ScoredBatch scored = score_batch(enc_, tbl, ds_, batch, threads_);
      const LossResult result = evaluate(loss_, scored.view());
      if (!std::isfinite(result.loss)) {
        throw NonFiniteError("epoch " + std::to_string(epoch) +
                             ": non-finite loss");
      }
      loss_sum += result.loss * static_cast<double>(batch.size());
      const GradientAccumulator grads =
          backward_scores(enc_, tbl, ds_, batch, scored, result.dL_dpos,
                          result.dL_dneg, threads_);
      try {
        adam_step(tbl, grads, adam, cfg_);
      } catch (const NonFiniteError& e) {
        throw NonFiniteError("epoch " + std::to_string(epoch) + ": " +
                             e.what());
      }
    }
    return loss_sum / static_cast<double>(order_.size());
  }

 private:
  const InteractionDataset& ds_;
  const EncoderConfig& enc_;
  const LossSpec& loss_;
  const TrainConfig& cfg_;
  std::size_t threads_;
  std::mt19937_64 shuffle_rng_;
  std::vector<std::size_t> order_;
  std::vector<NegativeSampler> samplers_;
};

}  // namespace

TrainResult train(const InteractionDataset& ds, const EncoderConfig& enc,
                  const LossSpec& loss, const TrainConfig& cfg,
                  const TrainOptions& opts) {
  validate(enc);
  validate(loss);
  validate(cfg);
  if (ds.train_pairs.empty()) {
    throw std::invalid_argument("train: dataset has no train pairs");
  }

  TrainResult result;
  result.table = init_embeddings(ds.num_users, ds.num_items, enc.dim,
                                 cfg.seed + kInitSeedOffset);
  if (cfg.epochs == 0) return result;

  std::optional<InteractionDataset> carved;
  if (cfg.early_stop) {
    carved = carve_validation(ds, cfg.seed + kValidationSeedOffset);
  }
  const InteractionDataset& fit = carved ? *carved : ds;
  if (fit.train_pairs.empty()) {
    throw std::invalid_argument("train: no train pairs left after holdout");
  }

  EmbeddingTable& tbl = result.table;
  AdamState adam(tbl);
  EpochRunner runner(fit, enc, loss, cfg, opts.threads);

  std::optional<EmbeddingTable> best;
  double best_recall = -1.0;
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = Clock::now();
    EpochRecord record;
    record.epoch = epoch;
    record.loss = runner.run(epoch, tbl, adam);
    record.seconds = seconds_since(start);

    bool stop = false;
    if (cfg.early_stop && epoch % cfg.eval_every == 0) {
      const EvalReport val =
          evaluate(enc, tbl, fit, kValidationK, opts.threads);
      record.recall = val.recall;
      record.ndcg = val.ndcg;
      if (opts.checkpoint_path) save_checkpoint(tbl, *opts.checkpoint_path);
      if (val.recall > best_recall) {
        best_recall = val.recall;
        best = tbl;
        result.selected_epoch = epoch;
        stale = 0;
      } else if (++stale >= cfg.patience) {
        stop = true;
      }
    }
    result.trace.push_back(record);
    if (opts.on_epoch) opts.on_epoch(record);
    if (stop) break;
  }

  if (best) {
    result.table = std::move(*best);
  } else {
    result.selected_epoch = result.trace.size();
  }
  return result;
}

namespace {

std::string format_number(double x) {
  std::ostringstream out;
  out << std::setprecision(10) << x;
  return out.str();
}

}  // namespace

void write_trace_csv(const TrainTrace& trace, const std::filesystem::path& path,
                     bool include_seconds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,loss,seconds,recall,ndcg\n";
  for (const auto& r : trace) {
    out << r.epoch << ',' << format_number(r.loss) << ',';
    if (include_seconds) out << format_number(r.seconds);
    out << ',';
    if (r.recall) out << format_number(*r.recall);
    out << ',';
    if (r.ndcg) out << format_number(*r.ndcg);
    out << '\n';
  }
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_sweep_csv(const SweepReport& report,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "rank,cell,label,loss,status,k,recall,ndcg,users_evaluated,seconds,"
         "error\n";
  std::size_t rank = 0;
  for (const auto& row : report.rows) {
    out << ++rank << ',' << row.cell << ',' << csv_field(row.label) << ','
        << row.loss_kind << ',' << (row.ok ? "ok" : "failed") << ',';
    if (row.ok) {
      out << row.report.k << ',' << format_number(row.report.recall) << ','
          << format_number(row.report.ndcg) << ','
          << row.report.users_evaluated;
    } else {
      out << ",,,";
    }
    out << ',' << format_number(row.seconds) << ',' << csv_field(row.error)
        << '\n';
  }
}

SweepReport sweep(const InteractionDataset& ds, const EncoderConfig& enc,
                  std::span<const SweepCell> grid, std::size_t eval_k,
                  const std::filesystem::path& out_dir,
                  const TrainOptions& opts, const SweepCellHook& on_cell) {
  if (grid.empty()) throw std::invalid_argument("sweep: empty grid");
  SweepReport report;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const SweepCell& cell = grid[c];
    SweepRow row;
    row.cell = c;
    row.label = cell.label;
    row.loss_kind = std::string(loss_kind(cell.loss));
    const auto start = Clock::now();
    try {
      const TrainResult trained = train(ds, enc, cell.loss, cell.train, opts);
      row.report = on_cell ? on_cell(c, cell, trained)
                           : evaluate(enc, trained.table, ds, eval_k,
                                      opts.threads);
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    row.seconds = seconds_since(start);
    report.rows.push_back(std::move(row));
  }
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const SweepRow& a, const SweepRow& b) {
                     if (a.ok != b.ok) return a.ok;
                     if (!a.ok) return false;
                     return a.report.recall > b.report.recall;
                   });
  std::filesystem::create_directories(out_dir);
  write_sweep_csv(report, out_dir / "sweep_report.csv");
  return report;
}

}  // namespace mmrec
