// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "slowvae/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "slowvae/downstream.hpp"
#include "slowvae/errors.hpp"
#include "slowvae/eval.hpp"
#include "slowvae/io.hpp"
#include "slowvae/log.hpp"

namespace svae::pipeline {

using nlohmann::json;

namespace {

std::mutex g_log_mu;

void say(std::ostream* log, const std::string& line) {
  if (!log) return;
  std::lock_guard lock(g_log_mu);
  *log << line << '\n' << std::flush;
}

std::string denominator(double fraction) { return std::to_string(std::llround(1.0 / fraction)); }

std::string cell_name(Method m, std::uint64_t seed) {
  return "repr " + to_string(m) + " seed " + std::to_string(seed);
}

std::string cell_name(Method m, std::uint64_t seed, double fraction) {
  return "head " + to_string(m) + " seed " + std::to_string(seed) + " fraction " + fraction_label(fraction);
}

sim::SequenceSplit split_for(const sim::Dataset& ds, const ExperimentConfig& config) {
  return sim::split_sequences(ds.n_sequences(), config.evaluation.test_fraction, ds.config().seed);
}

// ---- cache stamps ----------------------------------------------------------

std::string repr_key(const ExperimentConfig& c, Method m, std::uint64_t seed, const std::string& dataset_digest) {
  json j = {{"train", io::train_config_to_json(c.train_config(m, seed))},
            {"test_fraction", c.evaluation.test_fraction},
            {"dataset", dataset_digest}};
  return io::sha256_hex(j.dump());
}

std::string head_key(const ExperimentConfig& c, double fraction, std::uint64_t seed, const std::string& repr_digest,
                     const std::string& dataset_digest) {
  json d = to_json(c).at("downstream");
  d.erase("seeds");
  d.erase("subset_grid");
  json j = {{"head", d},
            {"fraction", fraction_label(fraction)},
            {"seed", seed},
            {"test_fraction", c.evaluation.test_fraction},
            {"repr", repr_digest},
            {"dataset", dataset_digest}};
  return io::sha256_hex(j.dump());
}

// The digest of a cached artifact, or nullopt if it must be rebuilt.
std::optional<std::string> cached_digest(const fs::path& artifact, const std::string& key) {
  const fs::path sp = stamp_path(artifact);
  if (!fs::exists(artifact) || !fs::exists(sp)) return std::nullopt;
  try {
    std::ifstream in(sp);
    const json s = json::parse(in);
    if (s.at("key").get<std::string>() != key) return std::nullopt;
    const std::string digest = io::file_sha256(artifact);
    if (s.at("digest").get<std::string>() != digest) return std::nullopt;
    return digest;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void write_stamp(const fs::path& artifact, const std::string& key, const std::string& digest) {
  io::atomic_write_text(stamp_path(artifact), json{{"key", key}, {"digest", digest}}.dump(2) + "\n");
}

// ---- cells -----------------------------------------------------------------

TrainReprSummary train_repr_cell(const ExperimentConfig& config, const sim::Dataset& dataset, Method method,
                                 std::uint64_t seed, const fs::path& out, std::ostream* log) {
  const TrainConfig tc = config.train_config(method, seed);
  const auto split = split_for(dataset, config);
  const fs::path loss_csv = loss_log_path(out);
  Checkpoint ck;
  try {
    ck = train_representation(dataset, split.train, tc, [&](std::size_t epoch, const LossBreakdown& l) {
      info(cell_name(method, seed) + " epoch " + std::to_string(epoch + 1) + "/" + std::to_string(tc.epochs) +
           " total " + std::to_string(l.total));
    });
  } catch (const TrainingDivergence&) {
    std::error_code ec;
    fs::remove(out, ec);
    fs::remove(loss_csv, ec);
    fs::remove(stamp_path(out), ec);
    throw;
  }
  const json meta = {{"dataset_seed", dataset.config().seed},
                     {"test_fraction", config.evaluation.test_fraction},
                     {"train_sequences", split.train.size()}};
  io::write_checkpoint(out, ck, meta);
  io::atomic_write_text(loss_csv, io::loss_log_csv(ck.loss_log));
  TrainReprSummary s;
  s.digest = io::file_sha256(out);
  s.epochs = ck.epochs_completed;
  if (!ck.loss_log.empty()) s.final_loss = ck.loss_log.back();
  say(log, cell_name(method, seed) + ": " + std::to_string(s.epochs) + " epochs, final total " +
               std::to_string(s.final_loss.total) + " -> " + out.string());
  return s;
}

void check_compatible(const VaeModel& model, const sim::Dataset& dataset) {
  if (model.frame_size != dataset.frame_size()) {
    const auto& a = dataset.config().arena;
    throw InvalidInput("checkpoint encoder expects frames of " + std::to_string(model.frame_size) +
                       " pixels, dataset frames are " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                       " = " + std::to_string(dataset.frame_size()) + " pixels");
  }
}

TrainHeadSummary train_head_cell(const ExperimentConfig& config, const sim::Dataset& dataset,
                                 const LatentTable& latents, const std::string& repr_digest, Method method,
                                 std::uint64_t seed, double fraction, const fs::path& out, std::ostream* log) {
  const auto split = split_for(dataset, config);
  const auto pool = consecutive_pairs(dataset, split.train);
  const DownstreamResult r = train_downstream(latents, dataset, pool, fraction, config.head, seed);
  const json meta = {{"method", to_string(method)},
                     {"seed", seed},
                     {"fraction", fraction_label(fraction)},
                     {"n_examples", r.n_examples},
                     {"batch_size", r.batch_size},
                     {"batch_clamped", r.batch_clamped},
                     {"epochs", r.loss_log.size()},
                     {"final_train_mse", r.loss_log.empty() ? 0.0 : r.loss_log.back()},
                     {"checkpoint_digest", repr_digest}};
  io::write_head(out, r.head, meta);
  TrainHeadSummary s;
  s.digest = io::file_sha256(out);
  s.n_examples = r.n_examples;
  s.batch_size = r.batch_size;
  s.train_mse = r.loss_log.empty() ? 0.0 : r.loss_log.back();
  say(log, cell_name(method, seed, fraction) + ": " + std::to_string(s.n_examples) + " pairs, train MSE " +
               std::to_string(s.train_mse));
  return s;
}

// Runs tasks on up to `workers` threads. The first failure stops the
// scheduling of new tasks and is rethrown after all threads finish.
void run_parallel(std::size_t workers, std::vector<std::function<void()>>& tasks) {
  workers = std::max<std::size_t>(1, std::min(workers, tasks.size()));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first;
  std::mutex mu;
  auto body = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        tasks[i]();
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
        failed.store(true);
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  }
  if (first) std::rethrow_exception(first);
}

// ---- evaluation helpers ----------------------------------------------------

std::string csv_num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

fs::path Layout::dataset() const { return root / "dataset.slds"; }

fs::path Layout::repr(Method method, std::uint64_t seed) const {
  return root / "repr" / to_string(method) / ("seed_" + std::to_string(seed) + ".slck");
}

fs::path Layout::head(Method method, std::uint64_t seed, double fraction) const {
  return root / "heads" / to_string(method) / ("seed_" + std::to_string(seed)) /
         ("frac_" + denominator(fraction) + ".slck");
}

fs::path Layout::eval_dir() const { return root / "eval"; }

fs::path loss_log_path(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  p.replace_extension(".loss.csv");
  return p;
}

fs::path stamp_path(const fs::path& artifact) {
  fs::path p = artifact;
  p += ".stamp.json";
  return p;
}

GenerateSummary cmd_generate(const ExperimentConfig& config, const fs::path& out, std::ostream* log) {
  config.validate();
  io::generate_dataset_file(out, config.dataset);
  GenerateSummary s;
  s.bytes = fs::file_size(out);
  s.digest = io::file_sha256(out);
  const auto& d = config.dataset;
  say(log, "generated " + std::to_string(d.n_sequences) + " sequences x " + std::to_string(d.seq_len) + " frames (" +
               std::to_string(d.arena.width) + "x" + std::to_string(d.arena.height) + "), seed " +
               std::to_string(d.seed) + ", " + std::to_string(s.bytes) + " bytes, sha256 " + s.digest + " -> " +
               out.string());
  return s;
}

TrainReprSummary cmd_train_repr(const ExperimentConfig& config, const fs::path& dataset_path, Method method,
                                std::uint64_t seed, const fs::path& out, std::ostream* log) {
  const sim::Dataset ds = io::read_dataset(dataset_path);
  return train_repr_cell(config, ds, method, seed, out, log);
}

TrainHeadSummary cmd_train_downstream(const ExperimentConfig& config, const fs::path& checkpoint_path,
                                      const fs::path& dataset_path, double fraction, std::uint64_t seed,
                                      const fs::path& out, std::ostream* log) {
  if (!is_valid_subset_fraction(fraction)) {
    throw InvalidInput("subset fraction must be one of 1, 1/2, ..., 1/128");
  }
  const Checkpoint ck = io::read_checkpoint(checkpoint_path);
  const sim::Dataset ds = io::read_dataset(dataset_path);
  check_compatible(ck.model, ds);
  const LatentTable latents = encode_dataset(ck.model, ds);
  return train_head_cell(config, ds, latents, io::file_sha256(checkpoint_path), ck.config.method, seed, fraction,
                         out, log);
}

EvaluateReport cmd_evaluate(const ExperimentConfig& config, const fs::path& run_dir, const fs::path& out_dir,
                            std::ostream* log) {
  const Layout layout{run_dir};
  EvaluateReport report;
  report.out_dir = out_dir;
  if (!fs::exists(layout.dataset())) {
    throw InvalidInput("nothing to evaluate: " + layout.dataset().string() + " does not exist");
  }
  sim::Dataset ds = io::read_dataset(layout.dataset());
  const bool have_positions = sim::restore_positions(ds);
  const auto split = split_for(ds, config);
  const auto train_pairs = consecutive_pairs(ds, split.train);
  const auto test_pairs = consecutive_pairs(ds, split.test);
  const Eigen::MatrixXd test_labels = pair_labels(ds, test_pairs);

  // Ascending subset sizes.
  std::vector<double> grid = config.subset_grid;
  std::sort(grid.begin(), grid.end());

  std::ostringstream cells_csv, curves_csv, bv_csv, slow_csv, scatter_csv;
  cells_csv << "method,fraction,n_examples,seed,test_mse\n";
  curves_csv << "method,fraction,n_examples,n_seeds,loss_mean,loss_std\n";
  bv_csv << "method,fraction,n_examples,n_seeds,bias_sq,variance,mean_mse,identity_residual\n";
  slow_csv << "method,seed,ratio,consecutive_mean,random_mean,degenerate\n";
  scatter_csv << "method,seed,sample,ball_x,ball_y,latent_index,latent_value\n";

  json methods_json = json::object();
  std::map<Method, eval::SubsetCurve> complete_curves;

  for (Method m : config.methods()) {
    // predictions[fraction index] = list of (seed, prediction matrix)
    std::vector<std::vector<std::pair<std::uint64_t, Eigen::MatrixXd>>> preds(grid.size());
    std::vector<double> ratios;
    bool scatter_done = false;
    for (std::uint64_t seed : config.seeds) {
      const fs::path rp = layout.repr(m, seed);
      if (!fs::exists(rp)) {
        report.missing.push_back(cell_name(m, seed));
        for (double f : grid) report.missing.push_back(cell_name(m, seed, f));
        continue;
      }
      const Checkpoint ck = io::read_checkpoint(rp);
      check_compatible(ck.model, ds);
      const LatentTable latents = encode_dataset(ck.model, ds);
      const auto slow = eval::latent_slowness_ratio(latents, split.test, 0);
      ratios.push_back(slow.ratio);
      slow_csv << to_string(m) << ',' << seed << ',' << csv_num(slow.ratio) << ',' << csv_num(slow.consecutive_mean)
               << ',' << csv_num(slow.random_mean) << ',' << (slow.degenerate ? 1 : 0) << '\n';
      ++report.evaluated_cells;

      if (!scatter_done && have_positions && ck.model.latent_dim > 0) {
        const std::size_t n = std::min(config.evaluation.scatter_samples, ds.n_frames());
        const auto rows = eval::export_latent_scatter(latents, ds, n, config.evaluation.scatter_seed);
        for (std::size_t i = 0; i < rows.size(); ++i) {
          scatter_csv << to_string(m) << ',' << seed << ',' << i / latents.latent_dim() << ','
                      << csv_num(rows[i].ball_x) << ',' << csv_num(rows[i].ball_y) << ',' << rows[i].latent_index
                      << ',' << csv_num(rows[i].value) << '\n';
        }
        scatter_done = true;
      }

      for (std::size_t k = 0; k < grid.size(); ++k) {
        const fs::path hp = layout.head(m, seed, grid[k]);
        if (!fs::exists(hp)) {
          report.missing.push_back(cell_name(m, seed, grid[k]));
          continue;
        }
        const DownstreamHead head = io::read_head(hp);
        Eigen::MatrixXd p = predict_pairs(latents, head, test_pairs);
        const double mse = eval::mean_squared_error(p, test_labels);
        cells_csv << to_string(m) << ',' << fraction_label(grid[k]) << ','
                  << subset_size(train_pairs.size(), grid[k]) << ',' << seed << ',' << csv_num(mse) << '\n';
        preds[k].emplace_back(seed, std::move(p));
        ++report.evaluated_cells;
      }
    }

    eval::SubsetCurve curve;
    bool complete = true;
    json mj = {{"seeds_evaluated", ratios.size()}};
    if (!ratios.empty()) {
      double sum = 0.0;
      for (double r : ratios) sum += r;
      mj["mean_slowness_ratio"] = sum / static_cast<double>(ratios.size());
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const std::size_t n_ex = subset_size(train_pairs.size(), grid[k]);
      if (preds[k].size() != config.seeds.size()) complete = false;
      if (preds[k].empty()) continue;
      std::vector<double> losses;
      std::vector<Eigen::MatrixXd> mats;
      for (const auto& [seed, p] : preds[k]) {
        losses.push_back(eval::mean_squared_error(p, test_labels));
        mats.push_back(p);
      }
      const auto point = eval::make_point(n_ex, grid[k], losses);
      curves_csv << to_string(m) << ',' << fraction_label(grid[k]) << ',' << n_ex << ',' << losses.size() << ','
                 << csv_num(point.loss_mean) << ',' << csv_num(point.loss_std) << '\n';
      curve.points.push_back(point);
      if (mats.size() >= 2) {
        const auto bv = eval::bias_variance(mats, test_labels);
        bv_csv << to_string(m) << ',' << fraction_label(grid[k]) << ',' << n_ex << ',' << mats.size() << ','
               << csv_num(bv.bias_sq) << ',' << csv_num(bv.variance) << ',' << csv_num(bv.mean_mse) << ','
               << csv_num(std::abs(bv.bias_sq + bv.variance - bv.mean_mse)) << '\n';
      }
    }
    if (!curve.points.empty()) {
      const auto best = std::min_element(curve.points.begin(), curve.points.end(),
                                         [](const auto& a, const auto& b) { return a.loss_mean < b.loss_mean; });
      mj["best_mean_mse"] = best->loss_mean;
      mj["best_n_examples"] = best->n_examples;
      mj["best_fraction"] = fraction_label(best->fraction);
      if (curve.points.back().fraction == 1.0) mj["full_mean_mse"] = curve.points.back().loss_mean;
    }
    mj["complete"] = complete && !curve.points.empty();
    if (complete && !curve.points.empty()) complete_curves[m] = curve;
    methods_json[to_string(m)] = mj;
  }

  if (report.evaluated_cells == 0) {
    throw InvalidInput("nothing to evaluate in " + run_dir.string() + ": no representation checkpoints found");
  }

  json summary = {{"format_version", 1},
                  {"interpolation", "log-linear in n_examples"},
                  {"loss", "test MSE of the velocity prediction"},
                  {"n_train_pairs", train_pairs.size()},
                  {"n_test_pairs", test_pairs.size()},
                  {"methods", methods_json},
                  {"crossover", nullptr},
                  {"full_data_improvement_percent", nullptr},
                  {"missing_cells", report.missing}};
  if (complete_curves.contains(Method::svae) && complete_curves.contains(Method::bvae)) {
    const auto de = eval::data_efficiency(complete_curves[Method::svae], complete_curves[Method::bvae]);
    summary["crossover"] = {{"candidate", "svae"},
                            {"reference", "bvae"},
                            {"achieved", de.achieved},
                            {"reference_best_mse", de.reference_best_loss},
                            {"n_reference_best", de.n_reference_best},
                            {"n_needed", de.achieved ? json(de.n_needed) : json(nullptr)},
                            {"percent_savings", de.achieved ? json(de.percent_savings) : json(nullptr)}};
    const auto& s = complete_curves[Method::svae].points.back();
    const auto& b = complete_curves[Method::bvae].points.back();
    if (s.fraction == 1.0 && b.fraction == 1.0) {
      summary["full_data_improvement_percent"] = 100.0 * (1.0 - s.loss_mean / b.loss_mean);
    }
  }

  io::atomic_write_text(out_dir / "cells.csv", cells_csv.str());
  io::atomic_write_text(out_dir / "curves.csv", curves_csv.str());
  io::atomic_write_text(out_dir / "bias_variance.csv", bv_csv.str());
  io::atomic_write_text(out_dir / "slowness.csv", slow_csv.str());
  io::atomic_write_text(out_dir / "scatter.csv", scatter_csv.str());
  io::atomic_write_text(out_dir / "summary.json", summary.dump(2) + "\n");
  say(log, "evaluated " + std::to_string(report.evaluated_cells) + " cells, " +
               std::to_string(report.missing.size()) + " missing -> " + out_dir.string());
  for (const auto& m : report.missing) say(log, "  missing: " + m);
  return report;
}

RunAllReport cmd_run_all(const ExperimentConfig& config, const fs::path& out_dir, std::size_t workers,
                         std::ostream* log) {
  config.validate();
  const Layout layout{out_dir};
  RunAllReport report;

  const std::string ds_key = section_hash(config, "dataset");
  std::string ds_digest;
  if (auto d = cached_digest(layout.dataset(), ds_key)) {
    ds_digest = *d;
    say(log, "dataset up to date: " + layout.dataset().string());
  } else {
    try {
      ds_digest = cmd_generate(config, layout.dataset(), log).digest;
    } catch (const std::exception& e) {
      throw CellFailure("dataset", e.what());
    }
    write_stamp(layout.dataset(), ds_key, ds_digest);
    report.dataset_generated = true;
  }
  const sim::Dataset ds = io::read_dataset(layout.dataset());

  std::mutex mu;
  std::map<std::pair<Method, std::uint64_t>, std::string> repr_digests;
  std::vector<std::function<void()>> tasks;
  for (Method m : config.methods()) {
    for (std::uint64_t seed : config.seeds) {
      tasks.emplace_back([&, m, seed] {
        const fs::path out = layout.repr(m, seed);
        const std::string key = repr_key(config, m, seed, ds_digest);
        std::string digest;
        bool trained = false;
        if (auto d = cached_digest(out, key)) {
          digest = *d;
        } else {
          try {
            digest = train_repr_cell(config, ds, m, seed, out, log).digest;
          } catch (const std::exception& e) {
            throw CellFailure(cell_name(m, seed), e.what());
          }
          write_stamp(out, key, digest);
          trained = true;
        }
        std::lock_guard lock(mu);
        repr_digests[{m, seed}] = digest;
        (trained ? report.repr_trained : report.repr_skipped) += 1;
      });
    }
  }
  run_parallel(workers, tasks);

  tasks.clear();
  for (Method m : config.methods()) {
    for (std::uint64_t seed : config.seeds) {
      tasks.emplace_back([&, m, seed] {
        const std::string repr_digest = repr_digests.at({m, seed});
        std::optional<LatentTable> latents;
        for (double f : config.subset_grid) {
          const fs::path out = layout.head(m, seed, f);
          const std::string key = head_key(config, f, seed, repr_digest, ds_digest);
          if (cached_digest(out, key)) {
            std::lock_guard lock(mu);
            ++report.heads_skipped;
            continue;
          }
          try {
            if (!latents) latents = encode_dataset(io::read_checkpoint(layout.repr(m, seed)).model, ds);
            const auto s = train_head_cell(config, ds, *latents, repr_digest, m, seed, f, out, log);
            write_stamp(out, key, s.digest);
          } catch (const std::exception& e) {
            throw CellFailure(cell_name(m, seed, f), e.what());
          }
          std::lock_guard lock(mu);
          ++report.heads_trained;
        }
      });
    }
  }
  run_parallel(workers, tasks);

  report.evaluation = cmd_evaluate(config, out_dir, layout.eval_dir(), log);
  say(log, "run-all: representation " + std::to_string(report.repr_trained) + " trained / " +
               std::to_string(report.repr_skipped) + " cached; heads " + std::to_string(report.heads_trained) +
               " trained / " + std::to_string(report.heads_skipped) + " cached");
  return report;
}

}  // namespace svae::pipeline
