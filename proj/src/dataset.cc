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

#include "mmrec/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string_view>
#include <unordered_set>

namespace mmrec {

ParseError::ParseError(const std::filesystem::path& file, std::size_t line,
                       const std::string& what)
    : std::runtime_error(file.string() + ":" + std::to_string(line) + ": " +
                         what),
      file_(file),
      line_(line) {}

bool InteractionDataset::is_train_positive(UserId user, ItemId item) const {
  const auto& items = train_positives[user];
  return std::binary_search(items.begin(), items.end(), item);
}

namespace {

struct AdjacencyFile {
  // (user, items in file order), one entry per non-blank line.
  std::vector<std::pair<UserId, std::vector<ItemId>>> rows;
  std::uint64_t max_user = 0;
  std::uint64_t max_item = 0;
  bool any_item = false;
};

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f';
}

AdjacencyFile read_adjacency(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open " + path.string());

  AdjacencyFile out;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::uint32_t> tokens;
  while (std::getline(in, line)) {
    ++line_no;
    tokens.clear();
    std::string_view rest(line);
    while (!rest.empty()) {
      std::size_t start = 0;
      while (start < rest.size() && is_space(rest[start])) ++start;
      rest.remove_prefix(start);
      if (rest.empty()) break;
      std::size_t end = 0;
      while (end < rest.size() && !is_space(rest[end])) ++end;
      const std::string_view token = rest.substr(0, end);
      std::uint32_t value = 0;
      const auto [ptr, ec] =
          std::from_chars(token.data(), token.data() + token.size(), value);
      if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw ParseError(path, line_no,
                         "malformed token '" + std::string(token) + "'");
      }
      tokens.push_back(value);
      rest.remove_prefix(end);
    }
    if (tokens.empty()) continue;

    const UserId user = tokens.front();
    out.max_user = std::max<std::uint64_t>(out.max_user, user);
    std::vector<ItemId> items(tokens.begin() + 1, tokens.end());
    for (ItemId item : items) {
      out.max_item = std::max<std::uint64_t>(out.max_item, item);
      out.any_item = true;
    }
    out.rows.emplace_back(user, std::move(items));
  }
  if (out.rows.empty()) throw DatasetError("empty dataset: " + path.string());
  return out;
}

// Dedups while keeping first-seen order.
std::vector<ItemId> unique_in_order(const std::vector<ItemId>& items) {
  std::vector<ItemId> out;
  out.reserve(items.size());
  std::unordered_set<ItemId> seen;
  seen.reserve(items.size() * 2);
  for (ItemId item : items) {
    if (seen.insert(item).second) out.push_back(item);
  }
  return out;
}

std::vector<ItemId> sorted_unique(std::vector<ItemId> items) {
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  return items;
}

}  // namespace

InteractionDataset build_dataset(std::size_t num_users, std::size_t num_items,
                                 std::vector<std::vector<ItemId>> train,
                                 std::vector<std::vector<ItemId>> test) {
  train.resize(num_users);
  test.resize(num_users);

  InteractionDataset ds;
  ds.num_users = num_users;
  ds.num_items = num_items;
  ds.train_positives.resize(num_users);
  ds.test_positives.resize(num_users);
  ds.train_history.resize(num_users);
  for (std::size_t u = 0; u < num_users; ++u) {
    ds.train_history[u] = unique_in_order(train[u]);
    ds.train_positives[u] = sorted_unique(ds.train_history[u]);
    ds.test_positives[u] = sorted_unique(std::move(test[u]));
  }
  std::size_t total = 0;
  for (const auto& items : ds.train_positives) total += items.size();
  ds.train_pairs.reserve(total);
  for (std::size_t u = 0; u < num_users; ++u) {
    for (ItemId item : ds.train_positives[u]) {
      ds.train_pairs.push_back({static_cast<UserId>(u), item});
    }
  }
  validate(ds);
  return ds;
}

void validate(const InteractionDataset& ds) {
  if (ds.train_positives.size() != ds.num_users ||
      ds.test_positives.size() != ds.num_users ||
      ds.train_history.size() != ds.num_users) {
    throw DatasetError("per-user lists do not match num_users");
  }
  std::size_t total = 0;
  for (std::size_t u = 0; u < ds.num_users; ++u) {
    for (const auto* list : {&ds.train_positives[u], &ds.test_positives[u]}) {
      for (std::size_t k = 0; k < list->size(); ++k) {
        if ((*list)[k] >= ds.num_items) {
          throw DatasetError("item id " + std::to_string((*list)[k]) +
                             " out of range for user " + std::to_string(u));
        }
        if (k > 0 && (*list)[k - 1] >= (*list)[k]) {
          throw DatasetError("positives of user " + std::to_string(u) +
                             " are not strictly increasing");
        }
      }
    }
    const auto& train = ds.train_positives[u];
    const auto& test = ds.test_positives[u];
    std::vector<ItemId> overlap;
    std::set_intersection(train.begin(), train.end(), test.begin(), test.end(),
                          std::back_inserter(overlap));
    if (!overlap.empty()) {
      throw DatasetError("user " + std::to_string(u) + " has item " +
                         std::to_string(overlap.front()) +
                         " in both train and test");
    }
    if (ds.train_history[u].size() != train.size()) {
      throw DatasetError("train history of user " + std::to_string(u) +
                         " does not match its positives");
    }
    total += train.size();
  }
  if (ds.train_pairs.size() != total) {
    throw DatasetError("train_pairs length differs from train positives");
  }
  for (const auto& pair : ds.train_pairs) {
    if (pair.user >= ds.num_users || pair.item >= ds.num_items) {
      throw DatasetError("train pair out of range");
    }
  }
}

InteractionDataset load_adjacency_text(const std::filesystem::path& train_path,
                                       const std::filesystem::path& test_path) {
  const AdjacencyFile train = read_adjacency(train_path);
  const AdjacencyFile test = read_adjacency(test_path);
  if (!train.any_item && !test.any_item) {
    throw DatasetError("no interactions in " + train_path.string() + " or " +
                       test_path.string());
  }
  const std::size_t num_users =
      1 + static_cast<std::size_t>(std::max(train.max_user, test.max_user));
  const std::size_t num_items =
      1 + static_cast<std::size_t>(std::max(train.max_item, test.max_item));

  std::vector<std::vector<ItemId>> train_lists(num_users);
  std::vector<std::vector<ItemId>> test_lists(num_users);
  for (const auto& [user, items] : train.rows) {
    auto& dst = train_lists[user];
    dst.insert(dst.end(), items.begin(), items.end());
  }
  for (const auto& [user, items] : test.rows) {
    auto& dst = test_lists[user];
    dst.insert(dst.end(), items.begin(), items.end());
  }
  return build_dataset(num_users, num_items, std::move(train_lists),
                       std::move(test_lists));
}

void write_adjacency_text(const InteractionDataset& ds,
                          const std::filesystem::path& train_path,
                          const std::filesystem::path& test_path) {
  const auto write = [&](const std::filesystem::path& path,
                         const std::vector<std::vector<ItemId>>& lists) {
    std::ofstream out(path);
    if (!out) throw DatasetError("cannot write " + path.string());
    for (std::size_t u = 0; u < lists.size(); ++u) {
      out << u;
      for (ItemId item : lists[u]) out << ' ' << item;
      out << '\n';
    }
    if (!out) throw DatasetError("write failed: " + path.string());
  };
  write(train_path, ds.train_history);
  write(test_path, ds.test_positives);
}

DatasetStats stats(const InteractionDataset& ds) {
  DatasetStats s;
  s.num_users = ds.num_users;
  s.num_items = ds.num_items;
  s.num_train = ds.train_pairs.size();
  for (const auto& items : ds.test_positives) s.num_test += items.size();
  const double cells =
      static_cast<double>(ds.num_users) * static_cast<double>(ds.num_items);
  s.density = cells > 0.0
                  ? static_cast<double>(s.num_train + s.num_test) / cells
                  : 0.0;
  return s;
}

InteractionDataset make_synthetic(std::size_t num_users, std::size_t num_items,
                                  std::size_t num_clusters, double noise,
                                  std::uint64_t seed) {
  if (num_clusters == 0) {
    throw std::invalid_argument("make_synthetic: num_clusters must be >= 1");
  }
  if (num_clusters > std::min(num_users, num_items)) {
    throw std::invalid_argument(
        "make_synthetic: num_clusters exceeds min(num_users, num_items)");
  }
  if (!(noise >= 0.0 && noise < 1.0)) {
    throw std::invalid_argument("make_synthetic: noise must be in [0, 1)");
  }

  std::mt19937_64 rng(seed);

  // Items of each cluster, then a seeded 40% core per cluster.
  std::vector<std::vector<ItemId>> cluster_items(num_clusters);
  for (std::size_t i = 0; i < num_items; ++i) {
    cluster_items[i % num_clusters].push_back(static_cast<ItemId>(i));
  }
  std::vector<std::vector<ItemId>> cores(num_clusters);
  for (std::size_t c = 0; c < num_clusters; ++c) {
    std::vector<ItemId> pool = cluster_items[c];
    std::shuffle(pool.begin(), pool.end(), rng);
    const auto core_size = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(0.4 * pool.size())));
    pool.resize(core_size);
    cores[c] = std::move(pool);
  }

  std::vector<std::vector<ItemId>> train(num_users);
  std::vector<std::vector<ItemId>> test(num_users);
  for (std::size_t u = 0; u < num_users; ++u) {
    const std::size_t c = u % num_clusters;
    std::vector<ItemId> items = cores[c];
    const auto num_noise =
        static_cast<std::size_t>(std::lround(noise * cores[c].size()));
    const std::size_t outside = num_items - cluster_items[c].size();
    if (num_noise > 0 && outside > 0) {
      std::unordered_set<ItemId> picked;
      std::uniform_int_distribution<std::size_t> pick(0, num_items - 1);
      const std::size_t want = std::min(num_noise, outside);
      while (picked.size() < want) {
        const auto item = static_cast<ItemId>(pick(rng));
        if (item % num_clusters != c && picked.insert(item).second) {
          items.push_back(item);
        }
      }
    }
    std::shuffle(items.begin(), items.end(), rng);
    const std::size_t n = items.size();
    const std::size_t num_test =
        n >= 2 ? std::max<std::size_t>(1, n / 5) : 0;
    test[u].assign(items.begin(), items.begin() + num_test);
    train[u].assign(items.begin() + num_test, items.end());
  }
  return build_dataset(num_users, num_items, std::move(train),
                       std::move(test));
}

InteractionDataset carve_validation(const InteractionDataset& ds,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<ItemId>> train(ds.num_users);
  std::vector<std::vector<ItemId>> holdout(ds.num_users);
  for (std::size_t u = 0; u < ds.num_users; ++u) {
    const auto& history = ds.train_history[u];
    const std::size_t n = history.size();
    const std::size_t k = n >= 2 ? std::max<std::size_t>(1, n / 10) : 0;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> held(n, false);
    for (std::size_t j = 0; j < k; ++j) held[order[j]] = true;
    for (std::size_t j = 0; j < n; ++j) {
      (held[j] ? holdout[u] : train[u]).push_back(history[j]);
    }
  }
  return build_dataset(ds.num_users, ds.num_items, std::move(train),
                       std::move(holdout));
}

}  // namespace mmrec
