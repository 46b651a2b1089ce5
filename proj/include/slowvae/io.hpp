// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary file formats and small file utilities.
//
// Dataset file (all integers unsigned, all values little-endian):
//
//   offset  size  field
//   0       4     magic "SLDS"
//   4       4     u32 format version (1)
//   8       4     u32 width
//   12      4     u32 height
//   16      4     u32 sequence length L
//   20      8     u64 number of sequences
//   28      8     f64 radius
//   36      8     f64 minimum speed
//   44      8     f64 maximum speed
//   52      8     u64 generation seed
//   60      4     u32 label dimension
//   64            payload: per sequence, L frames of width*height f32
//                 (row-major), then L labels of label_dim f32
//
// Checkpoint file:
//
//   0       4     magic "SLCK"
//   4       4     u32 format version (1)
//   8       8     u64 byte length n of the JSON header
//   16      n     UTF-8 JSON header (architecture, config echo, metadata)
//   16+n          payload: f64 parameters in the order the header declares

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "slowvae/ball_sim.hpp"
#include "slowvae/downstream.hpp"
#include "slowvae/vae.hpp"

namespace svae::io {

namespace fs = std::filesystem;

inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes = 64;

/// Header bytes plus payload bytes of a dataset file.
std::uint64_t dataset_file_size(const sim::GenerationConfig& config, std::size_t label_dim);

void write_dataset(const fs::path& path, const sim::Dataset& dataset);
sim::Dataset read_dataset(const fs::path& path);

/// Simulates and writes sequence by sequence without holding the whole
/// dataset in memory. Produces the same bytes as generate + write_dataset.
void generate_dataset_file(const fs::path& path, const sim::GenerationConfig& config);

/// Reads only the header; the returned pair is (config, label_dim).
std::pair<sim::GenerationConfig, std::size_t> read_dataset_header(const fs::path& path);

/// Representation checkpoint. `metadata` is stored verbatim under "metadata".
void write_checkpoint(const fs::path& path, const Checkpoint& checkpoint,
                      const nlohmann::json& metadata = nlohmann::json::object());
Checkpoint read_checkpoint(const fs::path& path, nlohmann::json* metadata = nullptr);

/// Downstream head checkpoint.
void write_head(const fs::path& path, const DownstreamHead& head,
                const nlohmann::json& metadata = nlohmann::json::object());
DownstreamHead read_head(const fs::path& path, nlohmann::json* metadata = nullptr);

/// JSON header of any checkpoint file, without the payload.
nlohmann::json read_checkpoint_header(const fs::path& path);

nlohmann::json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Writes through a temporary file in the same directory and renames it
/// into place. Parent directories are created.
void atomic_write(const fs::path& path, const std::function<void(std::ostream&)>& writer);
void atomic_write_text(const fs::path& path, std::string_view text);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const fs::path& path);

/// Per-epoch loss log: epoch,reconstruction,kl_prior,kl_similarity,total
std::string loss_log_csv(const std::vector<LossBreakdown>& log);

}  // namespace svae::io
