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

#include "mmrec/config.h"

#include <fstream>
#include <set>
#include <sstream>

namespace mmrec {

using nlohmann::json;

ConfigError::ConfigError(std::string key_path, const std::string& what)
    : std::runtime_error(key_path + ": " + what), key_path_(std::move(key_path)) {}

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Reads an object strictly: every key must be consumed.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path)
      : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) {
      throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }
  }

  bool has(const std::string& key) const { return obj_.contains(key); }
  std::string path(const std::string& key) const { return join(path_, key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(path(key), "expected a number");
    return v.get<double>();
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d >= 0.0 && d < 0x1p64 &&
          d == static_cast<double>(static_cast<std::uint64_t>(d))) {
        return static_cast<std::uint64_t>(d);
      }
    }
    throw ConfigError(path(key), "expected a non-negative integer");
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(path(key), "expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(path(key), "expected a string");
    return v.get<std::string>();
  }

  std::string required_text(const std::string& key) {
    if (!has(key)) throw ConfigError(path(key), "missing required key");
    return text(key, "");
  }

  std::vector<double> numbers(const std::string& key,
                              std::vector<double> fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(path(key), "expected a list of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) {
        throw ConfigError(path(key), "expected a list of numbers");
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError(path(key), "unknown key");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& key_path, const std::string& what) {
  if (!ok) throw ConfigError(key_path, what);
}

const char* positive_term_name(PositiveTerm t) {
  switch (t) {
    case PositiveTerm::kOneMinusSimilarity:
      return "one_minus_similarity";
    case PositiveTerm::kSquaredDistance:
      return "squared_distance";
  }
  return "";
}

const char* negative_term_name(NegativeTerm t) {
  switch (t) {
    case NegativeTerm::kSimilarity:
      return "similarity";
    case NegativeTerm::kSimilarityMargin:
      return "similarity_margin";
    case NegativeTerm::kDistanceMargin:
      return "distance_margin";
    case NegativeTerm::kTripletDistance:
      return "triplet_distance";
  }
  return "";
}

}  // namespace

std::string_view encoder_kind_name(EncoderKind kind) {
  return kind == EncoderKind::kMF ? "mf" : "behavior_avg";
}

json loss_to_json(const LossSpec& spec) {
  json out;
  out["kind"] = std::string(loss_kind(spec));
  if (const auto* s = std::get_if<Mmcl>(&spec)) {
    out["margins"] = s->margins;
    out["margin_weights"] = s->margin_weights;
    out["pos_weight"] = s->pos_weight;
    out["neg_ratio"] = s->neg_ratio;
  } else if (const auto* s = std::get_if<Ccl>(&spec)) {
    out["margin"] = s->margin;
    out["neg_weight"] = s->neg_weight;
  } else if (const auto* s = std::get_if<Contrastive>(&spec)) {
    out["margin"] = s->margin;
  } else if (const auto* s = std::get_if<Triplet>(&spec)) {
    out["margin"] = s->margin;
  } else if (const auto* s = std::get_if<Bsl>(&spec)) {
    out["tau_pos"] = s->tau_pos;
    out["tau_neg"] = s->tau_neg;
  } else if (const auto* s = std::get_if<PairwiseHinge>(&spec)) {
    out["margin"] = s->margin;
  } else if (const auto* s = std::get_if<Generalized>(&spec)) {
    out["pos_weight"] = s->pos_weight;
    out["neg_weight"] = s->neg_weight;
    out["margin"] = s->margin;
    out["positive"] = positive_term_name(s->positive);
    out["inner"] = negative_term_name(s->inner);
  }
  return out;
}

LossSpec loss_from_json(const json& doc, const std::string& key_path) {
  ObjectReader r(doc, key_path);
  const std::string kind = r.required_text("kind");
  LossSpec spec;
  if (kind == "mmcl") {
    Mmcl s;
    s.margins = r.numbers("margins", {});
    s.margin_weights = r.numbers("margin_weights", {});
    s.pos_weight = r.number("pos_weight", s.pos_weight);
    s.neg_ratio = r.number("neg_ratio", s.neg_ratio);
    check(!s.margins.empty(), r.path("margins"), "must not be empty");
    check(s.margins.size() == s.margin_weights.size(), r.path("margin_weights"),
          "must have one weight per margin");
    spec = s;
  } else if (kind == "ccl") {
    Ccl s;
    s.margin = r.number("margin", s.margin);
    s.neg_weight = r.number("neg_weight", s.neg_weight);
    spec = s;
  } else if (kind == "contrastive") {
    Contrastive s;
    s.margin = r.number("margin", s.margin);
    spec = s;
  } else if (kind == "triplet") {
    Triplet s;
    s.margin = r.number("margin", s.margin);
    spec = s;
  } else if (kind == "infonce") {
    spec = InfoNce{};
  } else if (kind == "bsl") {
    Bsl s;
    s.tau_pos = r.number("tau_pos", s.tau_pos);
    s.tau_neg = r.number("tau_neg", s.tau_neg);
    spec = s;
  } else if (kind == "bpr") {
    spec = Bpr{};
  } else if (kind == "pairwise_hinge") {
    PairwiseHinge s;
    s.margin = r.number("margin", s.margin);
    spec = s;
  } else if (kind == "softmax_ce") {
    spec = SoftmaxCe{};
  } else if (kind == "mse") {
    spec = Mse{};
  } else if (kind == "generalized") {
    Generalized s;
    s.pos_weight = r.number("pos_weight", s.pos_weight);
    s.neg_weight = r.number("neg_weight", s.neg_weight);
    s.margin = r.number("margin", s.margin);
    const std::string pos = r.text("positive", positive_term_name(s.positive));
    if (pos == "one_minus_similarity") {
      s.positive = PositiveTerm::kOneMinusSimilarity;
    } else if (pos == "squared_distance") {
      s.positive = PositiveTerm::kSquaredDistance;
    } else {
      throw ConfigError(r.path("positive"), "unknown positive term '" + pos + "'");
    }
    const std::string inner = r.text("inner", negative_term_name(s.inner));
    if (inner == "similarity") {
      s.inner = NegativeTerm::kSimilarity;
    } else if (inner == "similarity_margin") {
      s.inner = NegativeTerm::kSimilarityMargin;
    } else if (inner == "distance_margin") {
      s.inner = NegativeTerm::kDistanceMargin;
    } else if (inner == "triplet_distance") {
      s.inner = NegativeTerm::kTripletDistance;
    } else {
      throw ConfigError(r.path("inner"), "unknown negative term '" + inner + "'");
    }
    spec = s;
  } else {
    throw ConfigError(r.path("kind"), "unknown loss kind '" + kind + "'");
  }
  r.finish();

  try {
    validate(spec);
  } catch (const std::invalid_argument& e) {
    // Messages read "<kind>: <param> ..."; point the key path at <param>.
    const std::string msg = e.what();
    std::string param;
    if (const auto colon = msg.find(": "); colon != std::string::npos) {
      const auto start = colon + 2;
      param = msg.substr(start, msg.find(' ', start) - start);
    }
    throw ConfigError(param.empty() ? key_path : join(key_path, param), msg);
  }
  return spec;
}

RunConfig parse_config(const json& doc) {
  RunConfig cfg;
  ObjectReader root(doc, "");
  cfg.name = root.text("name", cfg.name);
  cfg.seed = root.count("seed", cfg.seed);
  cfg.eval_k = root.count("eval_k", cfg.eval_k);
  check(cfg.eval_k >= 1, "eval_k", "must be >= 1");
  cfg.output_dir = root.text("output_dir", cfg.output_dir.string());

  if (!root.has("dataset")) throw ConfigError("dataset", "missing required key");
  {
    ObjectReader r(root.raw("dataset"), "dataset");
    const std::string kind = r.required_text("kind");
    auto& ds = cfg.dataset;
    if (kind == "adjacency") {
      ds.kind = DatasetSource::Kind::kAdjacency;
      ds.train = r.required_text("train");
      ds.test = r.required_text("test");
    } else if (kind == "synthetic") {
      ds.kind = DatasetSource::Kind::kSynthetic;
      ds.num_users = r.count("num_users", ds.num_users);
      ds.num_items = r.count("num_items", ds.num_items);
      ds.num_clusters = r.count("num_clusters", ds.num_clusters);
      ds.noise = r.number("noise", ds.noise);
      ds.seed = r.count("seed", ds.seed);
      check(ds.num_clusters >= 1, r.path("num_clusters"), "must be >= 1");
      check(ds.num_clusters <= std::min(ds.num_users, ds.num_items),
            r.path("num_clusters"), "must not exceed users or items");
      check(ds.noise >= 0.0 && ds.noise < 1.0, r.path("noise"),
            "must be in [0, 1)");
    } else {
      throw ConfigError(r.path("kind"), "unknown dataset kind '" + kind + "'");
    }
    r.finish();
  }

  if (root.has("encoder")) {
    ObjectReader r(root.raw("encoder"), "encoder");
    auto& enc = cfg.encoder;
    const std::string kind = r.text("kind", "mf");
    if (kind == "mf") {
      enc.kind = EncoderKind::kMF;
    } else if (kind == "behavior_avg") {
      enc.kind = EncoderKind::kBehaviorAvg;
    } else {
      throw ConfigError(r.path("kind"), "unknown encoder kind '" + kind + "'");
    }
    enc.dim = r.count("dim", enc.dim);
    enc.gate = r.number("gate", enc.gate);
    enc.history_cap = r.count("history_cap", enc.history_cap);
    check(enc.dim >= 1, r.path("dim"), "must be >= 1");
    check(enc.gate >= 0.0 && enc.gate <= 1.0, r.path("gate"), "must be in [0, 1]");
    r.finish();
  }

  if (!root.has("loss")) throw ConfigError("loss", "missing required key");
  cfg.loss = loss_from_json(root.raw("loss"), "loss");

  if (root.has("train")) {
    ObjectReader r(root.raw("train"), "train");
    auto& t = cfg.train;
    t.learning_rate = r.number("learning_rate", t.learning_rate);
    t.l2_reg = r.number("l2_reg", t.l2_reg);
    t.batch_size = r.count("batch_size", t.batch_size);
    t.epochs = r.count("epochs", t.epochs);
    t.num_negatives = r.count("num_negatives", t.num_negatives);
    t.early_stop = r.flag("early_stop", t.early_stop);
    t.patience = r.count("patience", t.patience);
    t.eval_every = r.count("eval_every", t.eval_every);
    check(t.learning_rate > 0.0, r.path("learning_rate"), "must be > 0");
    check(t.l2_reg >= 0.0, r.path("l2_reg"), "must be >= 0");
    check(t.batch_size >= 1, r.path("batch_size"), "must be >= 1");
    check(t.num_negatives >= 1, r.path("num_negatives"), "must be >= 1");
    check(t.patience >= 1, r.path("patience"), "must be >= 1");
    check(t.eval_every >= 1, r.path("eval_every"), "must be >= 1");
    r.finish();
  }
  cfg.train.seed = cfg.seed;

  if (root.has("grid")) {
    const json& grid = root.raw("grid");
    check(grid.is_object() && !grid.empty(), "grid",
          "expected an object of axis -> list of values");
    for (const auto& [axis, values] : grid.items()) {
      check(values.is_array() && !values.empty(), "grid." + axis,
            "expected a non-empty list");
      check(axis != "grid", "grid." + axis, "cannot sweep the grid itself");
    }
    cfg.grid = grid;
  }
  root.finish();
  return cfg;
}

json to_json(const RunConfig& cfg) {
  json out;
  out["name"] = cfg.name;
  out["seed"] = cfg.seed;
  out["eval_k"] = cfg.eval_k;
  out["output_dir"] = cfg.output_dir.string();

  json ds;
  if (cfg.dataset.kind == DatasetSource::Kind::kAdjacency) {
    ds["kind"] = "adjacency";
    ds["train"] = cfg.dataset.train.string();
    ds["test"] = cfg.dataset.test.string();
  } else {
    ds["kind"] = "synthetic";
    ds["num_users"] = cfg.dataset.num_users;
    ds["num_items"] = cfg.dataset.num_items;
    ds["num_clusters"] = cfg.dataset.num_clusters;
    ds["noise"] = cfg.dataset.noise;
    ds["seed"] = cfg.dataset.seed;
  }
  out["dataset"] = ds;

  out["encoder"] = {{"kind", std::string(encoder_kind_name(cfg.encoder.kind))},
                    {"dim", cfg.encoder.dim},
                    {"gate", cfg.encoder.gate},
                    {"history_cap", cfg.encoder.history_cap}};
  out["loss"] = loss_to_json(cfg.loss);
  out["train"] = {{"learning_rate", cfg.train.learning_rate},
                  {"l2_reg", cfg.train.l2_reg},
                  {"batch_size", cfg.train.batch_size},
                  {"epochs", cfg.train.epochs},
                  {"num_negatives", cfg.train.num_negatives},
                  {"early_stop", cfg.train.early_stop},
                  {"patience", cfg.train.patience},
                  {"eval_every", cfg.train.eval_every}};
  if (cfg.grid) out["grid"] = *cfg.grid;
  return out;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

std::vector<GridCell> expand_grid(const RunConfig& base) {
  if (!base.grid) {
    return {GridCell{"", base}};
  }
  json resolved = to_json(base);
  resolved.erase("grid");

  std::vector<std::pair<std::string, std::vector<json>>> axes;
  for (const auto& [axis, values] : base.grid->items()) {
    std::string pointer = "/" + axis;
    for (char& c : pointer) {
      if (c == '.') c = '/';
    }
    json::json_pointer ptr;
    try {
      ptr = json::json_pointer(pointer);
    } catch (const json::exception&) {
      throw ConfigError("grid." + axis, "malformed axis name");
    }
    if (!resolved.contains(ptr)) {
      throw ConfigError("grid." + axis, "axis does not name a config key");
    }
    axes.emplace_back(pointer, std::vector<json>(values.begin(), values.end()));
  }

  std::vector<GridCell> cells;
  std::vector<std::size_t> index(axes.size(), 0);
  while (true) {
    json doc = resolved;
    std::string label;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const json& value = axes[a].second[index[a]];
      doc[json::json_pointer(axes[a].first)] = value;
      std::string name = axes[a].first.substr(1);
      for (char& c : name) {
        if (c == '/') c = '.';
      }
      if (!label.empty()) label += ";";
      label += name + "=" + value.dump();
    }
    try {
      cells.push_back({label, parse_config(doc)});
    } catch (const ConfigError& e) {
      throw ConfigError(e.key_path(), std::string("grid cell [") + label +
                                          "]: " + e.what());
    }

    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++index[a] < axes[a].second.size()) break;
      index[a] = 0;
      if (a == 0) return cells;
    }
    if (axes.empty()) return cells;
  }
}

InteractionDataset load_dataset(const DatasetSource& source) {
  if (source.kind == DatasetSource::Kind::kAdjacency) {
    return load_adjacency_text(source.train, source.test);
  }
  return make_synthetic(source.num_users, source.num_items,
                        source.num_clusters, source.noise, source.seed);
}

}  // namespace mmrec
