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
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmrec/dataset.h"
#include "mmrec/encoder.h"
#include "mmrec/eval.h"
#include "mmrec/losses.h"

namespace mmrec {

struct TrainConfig {
  double learning_rate = 1e-4;
  double l2_reg = 1e-9;
  std::size_t batch_size = 512;
  std::size_t epochs = 100;
  std::size_t num_negatives = 100;
  bool early_stop = false;
  std::size_t patience = 3;
  std::size_t eval_every = 1;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

// Offsets from TrainConfig::seed for each random stream.
inline constexpr std::uint64_t kInitSeedOffset = 0;
inline constexpr std::uint64_t kShuffleSeedOffset = 1;
inline constexpr std::uint64_t kValidationSeedOffset = 2;
inline constexpr std::uint64_t kSamplerSeedOffset = 1000;

/// Early stopping monitors Recall at this cutoff on the validation holdout.
inline constexpr std::size_t kValidationK = 20;

/// Raised when a loss or gradient is NaN or infinite.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adam moments mirroring an EmbeddingTable.
struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(const EmbeddingTable& tbl);

  std::vector<double> user_m, user_v;
  std::vector<double> item_m, item_v;
  std::uint64_t step = 0;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update over the rows present in `grads`, after
/// adding l2_reg * theta to each touched row's gradient. Untouched rows and
/// their moments are left alone.
void adam_step(EmbeddingTable& tbl, const GradientAccumulator& grads,
               AdamState& state, const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
  double seconds = 0.0;
  std::optional<double> recall;
  std::optional<double> ndcg;
};

using TrainTrace = std::vector<EpochRecord>;

struct TrainOptions {
  std::size_t threads = 1;
  // Overwritten with the current table after every validation pass.
  std::optional<std::filesystem::path> checkpoint_path;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  EmbeddingTable table;
  TrainTrace trace;
  // Epoch whose table was returned (0 when no epochs ran).
  std::size_t selected_epoch = 0;
};

/// Mini-batch training: shuffle pairs, sample negatives, score, apply the
/// loss, backpropagate and step Adam. With early stopping, a validation
/// holdout is carved from train and the best-validation table is returned.
TrainResult train(const InteractionDataset& ds, const EncoderConfig& enc,
                  const LossSpec& loss, const TrainConfig& cfg,
                  const TrainOptions& opts = {});

/// Writes epoch,loss,seconds,recall,ndcg. Missing metrics are empty fields;
/// with `include_seconds` false the seconds column is left empty.
void write_trace_csv(const TrainTrace& trace, const std::filesystem::path& path,
                     bool include_seconds = true);

struct SweepCell {
  std::string label;
  LossSpec loss;
  TrainConfig train;
};

struct SweepRow {
  std::size_t cell = 0;
  std::string label;
  std::string loss_kind;
  bool ok = false;
  std::string error;
  EvalReport report;
  double seconds = 0.0;
};

/// Rows ranked by recall, best first; failed cells go last in grid order.
struct SweepReport {
  std::vector<SweepRow> rows;
};

/// Finishes a trained cell and returns its final report. The default
/// evaluates the trained table on the test split at `eval_k`.
using SweepCellHook = std::function<EvalReport(
    std::size_t index, const SweepCell&, const TrainResult&)>;

/// Trains and evaluates each cell independently. A cell that throws is
/// recorded as failed and the sweep continues. Writes sweep_report.csv into
/// `out_dir`.
SweepReport sweep(const InteractionDataset& ds, const EncoderConfig& enc,
                  std::span<const SweepCell> grid, std::size_t eval_k,
                  const std::filesystem::path& out_dir,
                  const TrainOptions& opts = {},
                  const SweepCellHook& on_cell = {});

void write_sweep_csv(const SweepReport& report,
                     const std::filesystem::path& path);

}  // namespace mmrec
