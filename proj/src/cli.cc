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

#include "mmrec/cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "mmrec/config.h"
#include "mmrec/eval.h"
#include "mmrec/trainer.h"

namespace mmrec {

namespace fs = std::filesystem;

namespace {

struct RunFlags {
  std::string config_path;
  bool deterministic = false;
  std::size_t threads = 0;
  std::optional<std::uint64_t> seed;
};

std::size_t resolve_threads(const RunFlags& flags) {
  if (flags.deterministic) return 1;
  if (flags.threads > 0) return flags.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

RunConfig load_with_overrides(const RunFlags& flags) {
  RunConfig cfg = load_config(flags.config_path);
  if (flags.seed) {
    cfg.seed = *flags.seed;
    cfg.train.seed = *flags.seed;
  }
  return cfg;
}

// "synthetic", or the directory holding the train file (e.g. "gowalla").
std::string dataset_label(const RunConfig& cfg) {
  if (cfg.dataset.kind == DatasetSource::Kind::kSynthetic) return "synthetic";
  const fs::path parent = fs::absolute(cfg.dataset.train).parent_path();
  const std::string name = parent.filename().string();
  return name.empty() ? cfg.dataset.train.stem().string() : name;
}

void write_manifest(const RunConfig& cfg, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(cfg).dump(2) << '\n';
}

void write_report_csv(const RunConfig& cfg, const EvalReport& report,
                      const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "dataset,encoder,loss,k,recall,ndcg,users_evaluated\n";
  out << dataset_label(cfg) << ',' << encoder_kind_name(cfg.encoder.kind) << ','
      << loss_kind(cfg.loss) << ',' << report.k << ','
      << std::setprecision(10) << report.recall << ',' << report.ndcg << ','
      << report.users_evaluated << '\n';
}

void print_report(const RunConfig& cfg, const EvalReport& report,
                  std::ostream& out) {
  out << "dataset=" << dataset_label(cfg)
      << " encoder=" << encoder_kind_name(cfg.encoder.kind)
      << " loss=" << loss_kind(cfg.loss) << " Recall@" << report.k << "="
      << std::fixed << std::setprecision(4) << report.recall << " NDCG@"
      << report.k << "=" << report.ndcg << std::defaultfloat
      << " users=" << report.users_evaluated << '\n';
}

void write_timing_csv(const TrainTrace& trace, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,seconds\n";
  for (const auto& r : trace) out << r.epoch << ',' << r.seconds << '\n';
}

// Writes manifest, trace, checkpoint and report for one trained run. The
// report is computed from the checkpoint as written, so cmd_eval on that
// file reproduces it exactly.
EvalReport finish_run(const RunConfig& cfg, const InteractionDataset& ds,
                      const TrainResult& trained, bool deterministic,
                      std::size_t threads, std::ostream& out) {
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  write_manifest(cfg, dir / "manifest.json");
  write_trace_csv(trained.trace, dir / "trace.csv", !deterministic);
  if (deterministic) write_timing_csv(trained.trace, dir / "timing.csv");
  const fs::path checkpoint = dir / "checkpoint.mrecemb";
  save_checkpoint(trained.table, checkpoint);
  const EmbeddingTable stored = load_checkpoint(checkpoint);
  const EvalReport report = evaluate(cfg.encoder, stored, ds, cfg.eval_k, threads);
  write_report_csv(cfg, report, dir / "report.csv");
  print_report(cfg, report, out);
  return report;
}

TrainOptions make_train_options(const RunConfig& cfg, std::size_t threads,
                                std::ostream& out) {
  TrainOptions opts;
  opts.threads = threads;
  if (cfg.train.early_stop) {
    opts.checkpoint_path = fs::path(cfg.output_dir) / "latest.mrecemb";
  }
  opts.on_epoch = [&out](const EpochRecord& r) {
    out << "epoch " << r.epoch << " loss " << std::setprecision(6) << r.loss;
    if (r.recall) out << " val_recall@" << kValidationK << " " << *r.recall;
    out << '\n';
  };
  return opts;
}

int cmd_train(const RunFlags& flags, std::ostream& out) {
  const RunConfig cfg = load_with_overrides(flags);
  const std::size_t threads = resolve_threads(flags);
  const InteractionDataset ds = load_dataset(cfg.dataset);
  fs::create_directories(cfg.output_dir);
  const TrainResult trained = train(ds, cfg.encoder, cfg.loss, cfg.train,
                                    make_train_options(cfg, threads, out));
  finish_run(cfg, ds, trained, flags.deterministic, threads, out);
  return kExitOk;
}

int cmd_eval(const RunFlags& flags, const std::string& checkpoint_path,
             std::ostream& out) {
  const RunConfig cfg = load_with_overrides(flags);
  const InteractionDataset ds = load_dataset(cfg.dataset);
  const EmbeddingTable tbl = load_checkpoint(checkpoint_path);
  if (tbl.num_users() != ds.num_users || tbl.num_items() != ds.num_items) {
    throw CheckpointError("checkpoint has " + std::to_string(tbl.num_users()) +
                          " users and " + std::to_string(tbl.num_items()) +
                          " items; dataset has " +
                          std::to_string(ds.num_users) + " and " +
                          std::to_string(ds.num_items));
  }
  const EvalReport report =
      evaluate(cfg.encoder, tbl, ds, cfg.eval_k, resolve_threads(flags));
  fs::create_directories(cfg.output_dir);
  write_report_csv(cfg, report, fs::path(cfg.output_dir) / "eval_report.csv");
  print_report(cfg, report, out);
  return kExitOk;
}

int cmd_sweep(const RunFlags& flags, std::ostream& out) {
  const RunConfig base = load_with_overrides(flags);
  if (!base.grid) throw ConfigError("grid", "missing required key");
  std::vector<GridCell> cells = expand_grid(base);
  const std::size_t threads = resolve_threads(flags);
  const InteractionDataset ds = load_dataset(base.dataset);

  std::vector<SweepCell> grid;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::ostringstream dir;
    dir << "cell_" << std::setw(3) << std::setfill('0') << c;
    cells[c].config.output_dir = fs::path(base.output_dir) / dir.str();
    grid.push_back({cells[c].label, cells[c].config.loss, cells[c].config.train});
  }
  out << "sweep: " << grid.size() << " cells\n";

  TrainOptions opts;
  opts.threads = threads;
  const SweepReport report = sweep(
      ds, base.encoder, grid, base.eval_k, base.output_dir, opts,
      [&](std::size_t index, const SweepCell&, const TrainResult& trained) {
        out << "cell " << index << " [" << cells[index].label << "]\n";
        return finish_run(cells[index].config, ds, trained,
                          flags.deterministic, threads, out);
      });

  std::size_t failed = 0;
  for (const auto& row : report.rows) {
    if (!row.ok) {
      ++failed;
      out << "cell " << row.cell << " failed: " << row.error << '\n';
    }
  }
  out << "wrote " << (fs::path(base.output_dir) / "sweep_report.csv").string()
      << '\n';
  return failed == report.rows.size() ? kExitRuntime : kExitOk;
}

int cmd_stats(const std::string& config_path, const std::string& train_path,
              const std::string& test_path, std::ostream& out) {
  InteractionDataset ds;
  if (!config_path.empty()) {
    ds = load_dataset(load_config(config_path).dataset);
  } else if (!train_path.empty() && !test_path.empty()) {
    ds = load_adjacency_text(train_path, test_path);
  } else {
    throw ConfigError("stats", "pass --config or both --train and --test");
  }
  const DatasetStats s = stats(ds);
  out << "users " << s.num_users << '\n'
      << "items " << s.num_items << '\n'
      << "interactions " << s.num_train + s.num_test << '\n'
      << "train " << s.num_train << '\n'
      << "test " << s.num_test << '\n'
      << "density " << std::fixed << std::setprecision(5) << s.density
      << std::defaultfloat << '\n';
  return kExitOk;
}

struct SynthFlags {
  std::size_t users = 200;
  std::size_t items = 100;
  std::size_t clusters = 2;
  double noise = 0.0;
  std::uint64_t seed = 7;
  std::string out_dir;
};

int cmd_synth(const SynthFlags& flags, std::ostream& out) {
  const InteractionDataset ds = make_synthetic(
      flags.users, flags.items, flags.clusters, flags.noise, flags.seed);
  const fs::path dir = flags.out_dir;
  fs::create_directories(dir);
  write_adjacency_text(ds, dir / "train.txt", dir / "test.txt");
  out << "wrote " << (dir / "train.txt").string() << " and "
      << (dir / "test.txt").string() << '\n';
  return kExitOk;
}

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Run config (JSON)")
      ->required();
  cmd->add_flag("--deterministic", flags.deterministic,
                "Single-threaded, bit-reproducible run");
  cmd->add_option("--threads", flags.threads, "Worker threads (0 = all cores)");
  cmd->add_option("--seed", flags.seed, "Override the config seed");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"mmrec: contrastive-loss recommender training"};
  app.require_subcommand(1);

  RunFlags train_flags, eval_flags, sweep_flags;
  std::string checkpoint;
  std::string stats_config, stats_train, stats_test;
  SynthFlags synth;

  auto* train_cmd = app.add_subcommand("train", "Train and evaluate one config");
  add_run_flags(train_cmd, train_flags);
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_run_flags(eval_cmd, eval_flags);
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  auto* sweep_cmd = app.add_subcommand("sweep", "Run every cell of the grid");
  add_run_flags(sweep_cmd, sweep_flags);
  auto* stats_cmd = app.add_subcommand("stats", "Print dataset statistics");
  stats_cmd->add_option("--config", stats_config, "Run config (JSON)");
  stats_cmd->add_option("--train", stats_train, "Train adjacency file");
  stats_cmd->add_option("--test", stats_test, "Test adjacency file");
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic dataset");
  synth_cmd->add_option("--users", synth.users);
  synth_cmd->add_option("--items", synth.items);
  synth_cmd->add_option("--clusters", synth.clusters);
  synth_cmd->add_option("--noise", synth.noise);
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--out", synth.out_dir, "Output directory")->required();

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("mmrec");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train_cmd) return cmd_train(train_flags, out);
    if (*eval_cmd) return cmd_eval(eval_flags, checkpoint, out);
    if (*sweep_cmd) return cmd_sweep(sweep_flags, out);
    if (*stats_cmd) return cmd_stats(stats_config, stats_train, stats_test, out);
    if (*synth_cmd) return cmd_synth(synth, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace mmrec
