// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0
//
// Python bindings: the pipeline commands, config (as JSON text), dataset and
// checkpoint readers, and the evaluation helpers. Arrays cross the boundary
// as numpy arrays.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "slowvae/config.hpp"
#include "slowvae/downstream.hpp"
#include "slowvae/errors.hpp"
#include "slowvae/eval.hpp"
#include "slowvae/gaussian.hpp"
#include "slowvae/io.hpp"
#include "slowvae/log.hpp"
#include "slowvae/pipeline.hpp"
#include "slowvae/runtime.hpp"

namespace py = pybind11;
using namespace svae;

namespace {

ExperimentConfig config_from_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(e.what());
  }
  return config_from_json(j);
}

// [n_sequences, seq_len, height, width] float32 copy of the frames.
py::array_t<float> frames_array(const sim::Dataset& ds) {
  py::array_t<float> out({ds.n_sequences(), ds.seq_len(), ds.arena().height, ds.arena().width});
  std::copy(ds.frames_data().begin(), ds.frames_data().end(), out.mutable_data());
  return out;
}

py::array_t<float> labels_array(const sim::Dataset& ds) {
  py::array_t<float> out({ds.n_sequences(), ds.seq_len(), ds.label_dim()});
  std::copy(ds.labels_data().begin(), ds.labels_data().end(), out.mutable_data());
  return out;
}

py::dict dataset_dict(const sim::Dataset& ds) {
  py::dict d;
  d["frames"] = frames_array(ds);
  d["labels"] = labels_array(ds);
  if (ds.has_positions()) {
    py::array_t<double> pos({ds.n_sequences(), ds.seq_len(), std::size_t{2}});
    std::copy(ds.positions_data().begin(), ds.positions_data().end(), pos.mutable_data());
    d["positions"] = pos;
  }
  return d;
}

LatentTable table_from(const Eigen::MatrixXd& means, std::size_t seq_len) {
  if (seq_len == 0 || static_cast<std::size_t>(means.cols()) % seq_len != 0) {
    throw InvalidInput("latent means must have n_sequences * seq_len columns");
  }
  return LatentTable{means, seq_len};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "slowvae native core";
  tune_allocator();

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_IOError);
  py::register_exception<TrainingDivergence>(m, "TrainingDivergence", PyExc_RuntimeError);

  m.def("set_verbose", &set_verbose);
  m.def("set_warnings_enabled", &set_warnings_enabled);

  // Config as JSON text, so Python callers can use the json module.
  m.def("desk_config", [] { return to_json(desk_config()).dump(); });
  m.def("paper_config", [] { return to_json(paper_config()).dump(); });
  m.def("normalize_config", [](const std::string& text) { return to_json(config_from_text(text)).dump(); },
        "Parses, validates and returns the config with every default filled in.");

  m.def("kl_to_standard_normal", [](const Eigen::VectorXd& mean, const Eigen::VectorXd& log_var) {
    return kl_to_standard_normal(DiagonalGaussian(mean, log_var));
  });
  m.def(
      "similarity_loss",
      [](const Eigen::VectorXd& mean_i, const Eigen::VectorXd& log_var_i, const Eigen::VectorXd& mean_j,
         const Eigen::VectorXd& log_var_j, double delta_t) {
        return similarity_loss(DiagonalGaussian(mean_i, log_var_i), DiagonalGaussian(mean_j, log_var_j), delta_t);
      },
      py::arg("mean_i"), py::arg("log_var_i"), py::arg("mean_j"), py::arg("log_var_j"), py::arg("delta_t") = 1.0);

  m.def(
      "generate_dataset",
      [](const std::string& config_text) {
        const ExperimentConfig c = config_from_text(config_text);
        py::gil_scoped_release release;
        sim::Dataset ds = sim::generate_dataset(c.dataset);
        py::gil_scoped_acquire acquire;
        return dataset_dict(ds);
      },
      py::arg("config"));
  m.def(
      "read_dataset",
      [](const std::filesystem::path& path) {
        sim::Dataset ds = io::read_dataset(path);
        sim::restore_positions(ds);
        return dataset_dict(ds);
      },
      py::arg("path"));
  m.def("read_checkpoint_header", [](const std::filesystem::path& p) { return io::read_checkpoint_header(p).dump(); });
  m.def("file_sha256", &io::file_sha256);

  m.def(
      "encode",
      [](const std::filesystem::path& checkpoint, const Eigen::MatrixXd& frames) {
        const Checkpoint ck = io::read_checkpoint(checkpoint);
        Eigen::MatrixXd means, log_vars;
        encode_batch(ck.model, frames.transpose(), means, log_vars);
        return py::make_tuple(Eigen::MatrixXd(means.transpose()), Eigen::MatrixXd(log_vars.transpose()));
      },
      py::arg("checkpoint"), py::arg("frames"),
      "Posterior means and log-variances for frames given as rows [n, pixels].");

  m.def("mean_squared_error", [](const Eigen::MatrixXd& pred, const Eigen::MatrixXd& labels) {
    return eval::mean_squared_error(pred.transpose(), labels.transpose());
  });
  m.def(
      "bias_variance",
      [](const std::vector<Eigen::MatrixXd>& predictions, const Eigen::MatrixXd& labels) {
        std::vector<Eigen::MatrixXd> t;
        for (const auto& p : predictions) t.push_back(p.transpose());
        const auto bv = eval::bias_variance(t, labels.transpose());
        return py::dict(py::arg("bias_sq") = bv.bias_sq, py::arg("variance") = bv.variance,
                        py::arg("mean_mse") = bv.mean_mse);
      },
      py::arg("predictions"), py::arg("labels"), "Predictions and labels are [n_points, label_dim].");
  m.def(
      "data_efficiency",
      [](const std::vector<std::size_t>& n, const std::vector<double>& candidate,
         const std::vector<double>& reference) {
        if (candidate.size() != n.size() || reference.size() != n.size()) {
          throw InvalidInput("data_efficiency: grid and curves differ in length");
        }
        eval::SubsetCurve a, b;
        for (std::size_t k = 0; k < n.size(); ++k) {
          a.points.push_back(eval::make_point(n[k], 1.0, {candidate[k]}));
          b.points.push_back(eval::make_point(n[k], 1.0, {reference[k]}));
        }
        const auto de = eval::data_efficiency(a, b);
        py::dict d;
        d["achieved"] = de.achieved;
        d["n_needed"] = de.achieved ? py::object(py::float_(de.n_needed)) : py::none();
        d["percent_savings"] = de.achieved ? py::object(py::float_(de.percent_savings)) : py::none();
        d["n_reference_best"] = de.n_reference_best;
        d["reference_best_loss"] = de.reference_best_loss;
        return d;
      },
      py::arg("n_examples"), py::arg("candidate"), py::arg("reference"),
      "Mean-loss curves on a shared ascending grid of example counts.");
  m.def(
      "latent_slowness_ratio",
      [](const Eigen::MatrixXd& means, std::size_t seq_len, std::uint64_t seed) {
        const LatentTable t = table_from(means.transpose(), seq_len);
        std::vector<std::size_t> seqs(static_cast<std::size_t>(means.rows()) / seq_len);
        for (std::size_t i = 0; i < seqs.size(); ++i) seqs[i] = i;
        return eval::latent_slowness_ratio(t, seqs, seed).ratio;
      },
      py::arg("means"), py::arg("seq_len"), py::arg("seed") = 0,
      "Means are [n_sequences * seq_len, latent_dim], sequence-major.");

  m.def(
      "generate",
      [](const std::string& config_text, const std::filesystem::path& out) {
        const ExperimentConfig c = config_from_text(config_text);
        py::gil_scoped_release release;
        return pipeline::cmd_generate(c, out).digest;
      },
      py::arg("config"), py::arg("out"));
  m.def(
      "run_all",
      [](const std::string& config_text, const std::filesystem::path& out, std::size_t workers) {
        const ExperimentConfig c = config_from_text(config_text);
        pipeline::RunAllReport r;
        {
          py::gil_scoped_release release;
          r = pipeline::cmd_run_all(c, out, workers);
        }
        py::dict d;
        d["dataset_generated"] = r.dataset_generated;
        d["repr_trained"] = r.repr_trained;
        d["repr_skipped"] = r.repr_skipped;
        d["heads_trained"] = r.heads_trained;
        d["heads_skipped"] = r.heads_skipped;
        d["missing"] = r.evaluation.missing;
        return d;
      },
      py::arg("config"), py::arg("out"), py::arg("workers") = 1);
  m.def(
      "evaluate",
      [](const std::string& config_text, const std::filesystem::path& run_dir, const std::filesystem::path& out) {
        const ExperimentConfig c = config_from_text(config_text);
        py::gil_scoped_release release;
        return pipeline::cmd_evaluate(c, run_dir, out).missing;
      },
      py::arg("config"), py::arg("run_dir"), py::arg("out"));
}
