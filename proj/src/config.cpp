// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "slowvae/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "slowvae/errors.hpp"
#include "slowvae/io.hpp"

namespace svae {

using nlohmann::json;

namespace {

// Pixel count of the reference resolution the regularizer weights refer to.
constexpr double kReferencePixels = 100.0 * 100.0;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw ConfigError(where + ": unknown key \"" + k + "\"");
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

std::vector<double> default_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 7; ++k) g.push_back(std::ldexp(1.0, -k));
  return g;
}

}  // namespace

std::string fraction_label(double fraction) {
  for (int k = 0; k <= 7; ++k) {
    if (fraction == std::ldexp(1.0, -k)) return k == 0 ? "1" : "1/" + std::to_string(1 << k);
  }
  throw ConfigError("subset fraction must be 1/2^k with k in 0..7");
}

double parse_fraction(const json& value) {
  double f = 0.0;
  if (value.is_number()) {
    f = value.get<double>();
  } else if (value.is_string()) {
    const std::string s = value.get<std::string>();
    const auto slash = s.find('/');
    try {
      std::size_t used = 0;
      if (slash == std::string::npos) {
        f = std::stod(s, &used);
        if (used != s.size()) throw ConfigError("");
      } else {
        const std::string num = s.substr(0, slash);
        const std::string den = s.substr(slash + 1);
        std::size_t u1 = 0, u2 = 0;
        const double n = std::stod(num, &u1);
        const double d = std::stod(den, &u2);
        if (u1 != num.size() || u2 != den.size() || d == 0.0) throw ConfigError("");
        f = n / d;
      }
    } catch (const std::exception&) {
      throw ConfigError("cannot parse subset fraction \"" + s + "\"");
    }
  } else {
    throw ConfigError("subset fraction must be a string like \"1/8\" or a number");
  }
  if (!is_valid_subset_fraction(f)) {
    throw ConfigError("subset fraction " + value.dump() + " is not 1/2^k with k in 0..7");
  }
  return f;
}

void ExperimentConfig::validate() const {
  dataset.validate();
  if (representation.empty()) throw ConfigError("representation: no methods configured");
  for (const auto& [m, c] : representation) {
    if (c.method != m) throw ConfigError("representation." + to_string(m) + ": method field disagrees");
    c.validate();
  }
  head.validate();
  if (subset_grid.empty()) throw ConfigError("downstream.subset_grid is empty");
  for (std::size_t k = 0; k < subset_grid.size(); ++k) {
    if (!is_valid_subset_fraction(subset_grid[k])) {
      throw ConfigError("downstream.subset_grid entries must be 1/2^k with k in 0..7");
    }
    if (k > 0 && !(subset_grid[k] < subset_grid[k - 1])) {
      throw ConfigError("downstream.subset_grid must be strictly decreasing");
    }
  }
  if (seeds.empty()) throw ConfigError("downstream.seeds must not be empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("downstream.seeds contains duplicates");
  }
  if (!(evaluation.test_fraction > 0.0 && evaluation.test_fraction < 1.0)) {
    throw ConfigError("evaluation.test_fraction must lie in (0, 1)");
  }
  const auto n_test = static_cast<std::size_t>(std::floor(evaluation.test_fraction * dataset.n_sequences));
  if (std::max<std::size_t>(n_test, 1) >= dataset.n_sequences) {
    throw ConfigError("evaluation.test_fraction leaves no training sequences");
  }
}

TrainConfig ExperimentConfig::train_config(Method method, std::uint64_t seed) const {
  const auto it = representation.find(method);
  if (it == representation.end()) throw ConfigError("method " + to_string(method) + " is not configured");
  TrainConfig c = it->second;
  c.seed = seed;
  return c;
}

std::vector<Method> ExperimentConfig::methods() const {
  std::vector<Method> out;
  for (const auto& [m, c] : representation) out.push_back(m);
  return out;
}

ExperimentConfig desk_config() {
  ExperimentConfig c;
  c.dataset = sim::GenerationConfig{};
  const double scale = kReferencePixels / static_cast<double>(c.dataset.arena.pixels());
  TrainConfig base;
  base.beta = 1e-6 * scale;
  // Selected on a validation split of the training sequences over lambda in {0, 1e-3, ..., 10}.
  base.lambda = 1.0;
  base.epochs = 30;
  base.hidden_width = 64;
  base.hidden_layers = 2;
  c.representation[Method::svae] = TrainConfig::for_method(Method::svae, base);
  c.representation[Method::bvae] = TrainConfig::for_method(Method::bvae, base);
  c.subset_grid = default_grid();
  for (std::uint64_t s = 1; s <= 12; ++s) c.seeds.push_back(s);
  return c;
}

ExperimentConfig paper_config() {
  ExperimentConfig c;
  c.dataset.arena = {100, 100};
  c.dataset.n_sequences = 10000;
  c.dataset.radius = 5.0;
  TrainConfig base;  // beta 1e-6, lambda 1e-5, 4 x 300
  c.representation[Method::svae] = TrainConfig::for_method(Method::svae, base);
  c.representation[Method::bvae] = TrainConfig::for_method(Method::bvae, base);
  c.subset_grid = default_grid();
  for (std::uint64_t s = 1; s <= 12; ++s) c.seeds.push_back(s);
  return c;
}

json to_json(const ExperimentConfig& c) {
  json rep = json::object();
  for (const auto& [m, tc] : c.representation) {
    json t = io::train_config_to_json(tc);
    t.erase("seed");
    rep[to_string(m)] = t;
  }
  json grid = json::array();
  for (double f : c.subset_grid) grid.push_back(fraction_label(f));
  return {{"dataset",
           {{"width", c.dataset.arena.width},
            {"height", c.dataset.arena.height},
            {"n_sequences", c.dataset.n_sequences},
            {"seq_len", c.dataset.seq_len},
            {"radius", c.dataset.radius},
            {"speed_min", c.dataset.speed_min},
            {"speed_max", c.dataset.speed_max},
            {"seed", c.dataset.seed}}},
          {"representation", rep},
          {"downstream",
           {{"hidden_width", c.head.hidden_width},
            {"hidden_layers", c.head.hidden_layers},
            {"epochs", c.head.epochs},
            {"min_steps", c.head.min_steps},
            {"batch_size", c.head.batch_size},
            {"learning_rate", c.head.learning_rate},
            {"subset_grid", grid},
            {"seeds", c.seeds}}},
          {"evaluation",
           {{"test_fraction", c.evaluation.test_fraction},
            {"scatter_samples", c.evaluation.scatter_samples},
            {"scatter_seed", c.evaluation.scatter_seed}}}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c = desk_config();
  reject_unknown(j, {"dataset", "representation", "downstream", "evaluation"}, "config");

  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    reject_unknown(d, {"width", "height", "n_sequences", "seq_len", "radius", "speed_min", "speed_max", "seed"},
                   "dataset");
    read_opt(d, "width", c.dataset.arena.width, "dataset");
    read_opt(d, "height", c.dataset.arena.height, "dataset");
    read_opt(d, "n_sequences", c.dataset.n_sequences, "dataset");
    read_opt(d, "seq_len", c.dataset.seq_len, "dataset");
    read_opt(d, "radius", c.dataset.radius, "dataset");
    read_opt(d, "speed_min", c.dataset.speed_min, "dataset");
    read_opt(d, "speed_max", c.dataset.speed_max, "dataset");
    read_opt(d, "seed", c.dataset.seed, "dataset");
  }

  if (j.contains("representation")) {
    const json& r = j.at("representation");
    if (!r.is_object()) throw ConfigError("representation: expected an object");
    c.representation.clear();
    for (const auto& [name, tj] : r.items()) {
      Method m;
      try {
        m = method_from_string(name);
      } catch (const std::exception&) {
        throw ConfigError("representation: unknown method \"" + name + "\"");
      }
      reject_unknown(tj,
                     {"method", "beta", "lambda", "learning_rate", "batch_size", "epochs", "latent_dim",
                      "hidden_width", "hidden_layers", "symmetric_beta"},
                     "representation." + name);
      json with_method = tj;
      if (!with_method.contains("method")) with_method["method"] = name;
      c.representation[m] = io::train_config_from_json(with_method);
    }
  }

  if (j.contains("downstream")) {
    const json& d = j.at("downstream");
    reject_unknown(d,
                   {"hidden_width", "hidden_layers", "epochs", "min_steps", "batch_size", "learning_rate",
                    "subset_grid", "seeds"},
                   "downstream");
    read_opt(d, "hidden_width", c.head.hidden_width, "downstream");
    read_opt(d, "hidden_layers", c.head.hidden_layers, "downstream");
    read_opt(d, "epochs", c.head.epochs, "downstream");
    read_opt(d, "min_steps", c.head.min_steps, "downstream");
    read_opt(d, "batch_size", c.head.batch_size, "downstream");
    read_opt(d, "learning_rate", c.head.learning_rate, "downstream");
    if (d.contains("subset_grid")) {
      if (!d.at("subset_grid").is_array()) throw ConfigError("downstream.subset_grid: expected an array");
      c.subset_grid.clear();
      for (const auto& v : d.at("subset_grid")) c.subset_grid.push_back(parse_fraction(v));
    }
    read_opt(d, "seeds", c.seeds, "downstream");
  }

  if (j.contains("evaluation")) {
    const json& e = j.at("evaluation");
    reject_unknown(e, {"test_fraction", "scatter_samples", "scatter_seed"}, "evaluation");
    read_opt(e, "test_fraction", c.evaluation.test_fraction, "evaluation");
    read_opt(e, "scatter_samples", c.evaluation.scatter_samples, "evaluation");
    read_opt(e, "scatter_seed", c.evaluation.scatter_seed, "evaluation");
  }

  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::string section_hash(const ExperimentConfig& config, const std::string& section) {
  const json j = to_json(config);
  if (!j.contains(section)) throw ConfigError("no config section \"" + section + "\"");
  return io::sha256_hex(j.at(section).dump());
}

}  // namespace svae
