// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "slowvae/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <atomic>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unistd.h>

#include "slowvae/errors.hpp"

namespace svae::io {

using nlohmann::json;

namespace {

constexpr std::array<char, 4> kDatasetMagic{'S', 'L', 'D', 'S'};
constexpr std::array<char, 4> kCheckpointMagic{'S', 'L', 'C', 'K'};

// Little-endian encoding independent of the host byte order.
template <typename U>
void put_le(std::ostream& out, U value) {
  static_assert(std::is_unsigned_v<U>);
  char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  out.write(buf, sizeof(U));
}

void put_u32(std::ostream& out, std::uint32_t v) { put_le(out, v); }
void put_u64(std::ostream& out, std::uint64_t v) { put_le(out, v); }
void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

template <typename U>
U get_le(std::istream& in, const fs::path& path) {
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) {
    throw FormatError(path.string() + ": truncated file");
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

std::uint32_t get_u32(std::istream& in, const fs::path& p) { return get_le<std::uint32_t>(in, p); }
std::uint64_t get_u64(std::istream& in, const fs::path& p) { return get_le<std::uint64_t>(in, p); }
double get_f64(std::istream& in, const fs::path& p) { return std::bit_cast<double>(get_u64(in, p)); }

void put_f32_block(std::ostream& out, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
  } else {
    for (float v : values) put_le(out, std::bit_cast<std::uint32_t>(v));
  }
}

void get_f32_block(std::istream& in, std::span<float> values, const fs::path& path) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!in.read(reinterpret_cast<char*>(values.data()),
                 static_cast<std::streamsize>(values.size() * sizeof(float)))) {
      throw FormatError(path.string() + ": truncated payload");
    }
  } else {
    for (float& v : values) v = std::bit_cast<float>(get_le<std::uint32_t>(in, path));
  }
}

std::uint32_t narrow_u32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFu) throw InvalidInput(std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

void write_dataset_header(std::ostream& out, const sim::GenerationConfig& c, std::size_t label_dim) {
  out.write(kDatasetMagic.data(), 4);
  put_u32(out, kDatasetVersion);
  put_u32(out, narrow_u32(c.arena.width, "width"));
  put_u32(out, narrow_u32(c.arena.height, "height"));
  put_u32(out, narrow_u32(c.seq_len, "sequence length"));
  put_u64(out, c.n_sequences);
  put_f64(out, c.radius);
  put_f64(out, c.speed_min);
  put_f64(out, c.speed_max);
  put_u64(out, c.seed);
  put_u32(out, narrow_u32(label_dim, "label_dim"));
}

std::pair<sim::GenerationConfig, std::size_t> parse_dataset_header(std::istream& in, const fs::path& path) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4)) throw FormatError(path.string() + ": truncated header");
  if (magic != kDatasetMagic) throw FormatError(path.string() + ": not a dataset file (bad magic)");
  const std::uint32_t version = get_u32(in, path);
  if (version != kDatasetVersion) {
    throw UnsupportedVersion(path.string() + ": unsupported dataset format version " + std::to_string(version),
                             version);
  }
  sim::GenerationConfig c;
  c.arena.width = get_u32(in, path);
  c.arena.height = get_u32(in, path);
  c.seq_len = get_u32(in, path);
  c.n_sequences = get_u64(in, path);
  c.radius = get_f64(in, path);
  c.speed_min = get_f64(in, path);
  c.speed_max = get_f64(in, path);
  c.seed = get_u64(in, path);
  const std::size_t label_dim = get_u32(in, path);
  if (label_dim == 0 || c.arena.width == 0 || c.arena.height == 0 || c.seq_len == 0) {
    throw FormatError(path.string() + ": header has a zero dimension");
  }
  return {c, label_dim};
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

json net_to_json(const std::string& name, const nn::DenseNet& net) {
  json layers = json::array();
  for (const auto& l : net.layers()) {
    layers.push_back({{"in", l.weight.cols()}, {"out", l.weight.rows()}, {"activation", nn::to_string(l.activation)}});
  }
  return {{"name", name}, {"layers", layers}};
}

nn::DenseNet net_from_json(const json& j) {
  std::vector<nn::DenseLayer> layers;
  for (const auto& l : j.at("layers")) {
    const auto in = l.at("in").get<Eigen::Index>();
    const auto out = l.at("out").get<Eigen::Index>();
    if (in <= 0 || out <= 0) throw FormatError("checkpoint: non-positive layer size");
    layers.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out),
                      nn::activation_from_string(l.at("activation").get<std::string>())});
  }
  return nn::DenseNet(std::move(layers));
}

struct Buffer {
  std::string name;
  std::vector<double> values;
};

// Shared writer for both checkpoint kinds: header nets/buffers declare the payload.
void write_checkpoint_file(const fs::path& path, json header,
                           const std::vector<std::pair<std::string, const nn::DenseNet*>>& nets,
                           const std::vector<Buffer>& buffers) {
  json jn = json::array();
  for (const auto& [name, net] : nets) jn.push_back(net_to_json(name, *net));
  json jb = json::array();
  for (const auto& b : buffers) jb.push_back({{"name", b.name}, {"size", b.values.size()}});
  header["nets"] = jn;
  header["buffers"] = jb;
  const std::string text = header.dump();
  atomic_write(path, [&](std::ostream& out) {
    out.write(kCheckpointMagic.data(), 4);
    put_u32(out, kCheckpointVersion);
    put_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, net] : nets) {
      for (double v : net->flat_parameters()) put_f64(out, v);
    }
    for (const auto& b : buffers) {
      for (double v : b.values) put_f64(out, v);
    }
  });
}

struct LoadedCheckpoint {
  json header;
  std::vector<nn::DenseNet> nets;
  std::vector<Buffer> buffers;
};

json read_header(std::istream& in, const fs::path& path) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4)) throw FormatError(path.string() + ": truncated header");
  if (magic != kCheckpointMagic) throw FormatError(path.string() + ": not a checkpoint file (bad magic)");
  const std::uint32_t version = get_u32(in, path);
  if (version != kCheckpointVersion) {
    throw UnsupportedVersion(
        path.string() + ": unsupported checkpoint format version " + std::to_string(version), version);
  }
  const std::uint64_t n = get_u64(in, path);
  const auto file_bytes = fs::file_size(path);
  if (n > file_bytes) throw FormatError(path.string() + ": header length exceeds file size");
  std::string text(n, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(n))) {
    throw FormatError(path.string() + ": truncated header");
  }
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": malformed checkpoint header: " + e.what());
  }
}

LoadedCheckpoint load_checkpoint_file(const fs::path& path) {
  auto in = open_in(path);
  LoadedCheckpoint out;
  out.header = read_header(in, path);
  const auto header_end = static_cast<std::uint64_t>(in.tellg());
  try {
    std::uint64_t count = 0;
    for (const auto& jn : out.header.at("nets")) {
      out.nets.push_back(net_from_json(jn));
      count += out.nets.back().num_parameters();
    }
    for (const auto& jb : out.header.at("buffers")) {
      out.buffers.push_back({jb.at("name").get<std::string>(),
                             std::vector<double>(jb.at("size").get<std::size_t>())});
      count += out.buffers.back().values.size();
    }
    const std::uint64_t expected = header_end + 8 * count;
    if (fs::file_size(path) != expected) {
      throw FormatError(path.string() + ": payload is " + std::to_string(fs::file_size(path) - header_end) +
                        " bytes, architecture declares " + std::to_string(8 * count));
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": malformed checkpoint header: " + e.what());
  } catch (const InvalidInput& e) {
    throw FormatError(path.string() + ": inconsistent architecture: " + e.what());
  }
  for (auto& net : out.nets) {
    std::vector<double> flat(net.num_parameters());
    for (double& v : flat) v = get_f64(in, path);
    net.set_flat_parameters(flat);
  }
  for (auto& b : out.buffers) {
    for (double& v : b.values) v = get_f64(in, path);
  }
  return out;
}

const nn::DenseNet& find_net(const LoadedCheckpoint& c, const std::string& name, const fs::path& path) {
  for (std::size_t i = 0; i < c.nets.size(); ++i) {
    if (c.header["nets"][i].at("name") == name) return c.nets[i];
  }
  throw FormatError(path.string() + ": checkpoint has no net named " + name);
}

const std::vector<double>& find_buffer(const LoadedCheckpoint& c, const std::string& name, const fs::path& path) {
  for (const auto& b : c.buffers) {
    if (b.name == name) return b.values;
  }
  throw FormatError(path.string() + ": checkpoint has no buffer named " + name);
}

void expect_kind(const json& header, const std::string& kind, const fs::path& path) {
  if (header.value("kind", std::string()) != kind) {
    throw FormatError(path.string() + ": expected a " + kind + " checkpoint, found " +
                      header.value("kind", std::string("<none>")));
  }
}

}  // namespace

std::uint64_t dataset_file_size(const sim::GenerationConfig& c, std::size_t label_dim) {
  return kDatasetHeaderBytes + static_cast<std::uint64_t>(c.n_sequences) * c.seq_len *
                                   (c.arena.pixels() + label_dim) * sizeof(float);
}

void write_dataset(const fs::path& path, const sim::Dataset& ds) {
  atomic_write(path, [&](std::ostream& out) {
    write_dataset_header(out, ds.config(), ds.label_dim());
    const std::size_t L = ds.seq_len();
    const std::span<const float> frames(ds.frames_data());
    const std::span<const float> labels(ds.labels_data());
    for (std::size_t s = 0; s < ds.n_sequences(); ++s) {
      put_f32_block(out, frames.subspan(s * L * ds.frame_size(), L * ds.frame_size()));
      put_f32_block(out, labels.subspan(s * L * ds.label_dim(), L * ds.label_dim()));
    }
  });
}

std::pair<sim::GenerationConfig, std::size_t> read_dataset_header(const fs::path& path) {
  auto in = open_in(path);
  return parse_dataset_header(in, path);
}

sim::Dataset read_dataset(const fs::path& path) {
  auto in = open_in(path);
  const auto [config, label_dim] = parse_dataset_header(in, path);
  const std::uint64_t expected = dataset_file_size(config, label_dim);
  const std::uint64_t actual = fs::file_size(path);
  if (actual != expected) {
    throw FormatError(path.string() + ": file is " + std::to_string(actual) + " bytes, header implies " +
                      std::to_string(expected));
  }
  sim::Dataset ds(config, label_dim);
  for (std::size_t s = 0; s < ds.n_sequences(); ++s) {
    get_f32_block(in, ds.sequence_frames(s), path);
    get_f32_block(in, ds.sequence_labels(s), path);
  }
  return ds;
}

void generate_dataset_file(const fs::path& path, const sim::GenerationConfig& config) {
  config.validate();
  constexpr std::size_t kLabelDim = 2;
  const std::size_t L = config.seq_len;
  std::vector<float> frames(L * config.arena.pixels());
  std::vector<float> labels(L * kLabelDim);
  atomic_write(path, [&](std::ostream& out) {
    write_dataset_header(out, config, kLabelDim);
    for (std::size_t s = 0; s < config.n_sequences; ++s) {
      const auto states = sim::simulate_sequence(config, s);
      sim::render_sequence(config, states, frames, labels);
      put_f32_block(out, frames);
      put_f32_block(out, labels);
    }
  });
}

json train_config_to_json(const TrainConfig& c) {
  return {{"method", to_string(c.method)},
          {"beta", c.beta},
          {"lambda", c.lambda},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"latent_dim", c.latent_dim},
          {"hidden_width", c.hidden_width},
          {"hidden_layers", c.hidden_layers},
          {"symmetric_beta", c.symmetric_beta}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  try {
    c.method = method_from_string(j.value("method", to_string(c.method)));
    c.beta = j.value("beta", c.beta);
    c.lambda = j.value("lambda", c.method == Method::bvae ? 0.0 : c.lambda);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.hidden_width = j.value("hidden_width", c.hidden_width);
    c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
    c.symmetric_beta = j.value("symmetric_beta", c.symmetric_beta);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  return c;
}

void write_checkpoint(const fs::path& path, const Checkpoint& ck, const json& metadata) {
  json log = json::array();
  for (const auto& l : ck.loss_log) log.push_back({l.reconstruction, l.kl_prior, l.kl_similarity, l.total});
  json header = {{"kind", "vae"},
                 {"latent_dim", ck.model.latent_dim},
                 {"frame_size", ck.model.frame_size},
                 {"config", train_config_to_json(ck.config)},
                 {"epochs_completed", ck.epochs_completed},
                 {"clamp_events", ck.clamp_events},
                 {"loss_log", log},
                 {"metadata", metadata}};
  write_checkpoint_file(path, std::move(header), {{"encoder", &ck.model.encoder}, {"decoder", &ck.model.decoder}},
                        {});
}

Checkpoint read_checkpoint(const fs::path& path, json* metadata) {
  const LoadedCheckpoint lc = load_checkpoint_file(path);
  expect_kind(lc.header, "vae", path);
  Checkpoint ck;
  try {
    ck.model.encoder = find_net(lc, "encoder", path);
    ck.model.decoder = find_net(lc, "decoder", path);
    ck.model.latent_dim = lc.header.at("latent_dim").get<std::size_t>();
    ck.model.frame_size = lc.header.at("frame_size").get<std::size_t>();
    ck.config = train_config_from_json(lc.header.at("config"));
    ck.epochs_completed = lc.header.at("epochs_completed").get<std::size_t>();
    ck.clamp_events = lc.header.value("clamp_events", std::uint64_t{0});
    for (const auto& row : lc.header.at("loss_log")) {
      ck.loss_log.push_back({row.at(0).get<double>(), row.at(1).get<double>(), row.at(2).get<double>(),
                             row.at(3).get<double>()});
    }
    if (metadata) *metadata = lc.header.value("metadata", json::object());
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": malformed checkpoint header: " + e.what());
  }
  try {
    ck.model.validate();
  } catch (const std::exception& e) {
    throw FormatError(path.string() + ": inconsistent model: " + e.what());
  }
  return ck;
}

void write_head(const fs::path& path, const DownstreamHead& head, const json& metadata) {
  auto to_vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json header = {{"kind", "head"}, {"metadata", metadata}};
  write_checkpoint_file(path, std::move(header), {{"head", &head.net}},
                        {{"input_shift", to_vec(head.input_shift)}, {"input_scale", to_vec(head.input_scale)}});
}

DownstreamHead read_head(const fs::path& path, json* metadata) {
  const LoadedCheckpoint lc = load_checkpoint_file(path);
  expect_kind(lc.header, "head", path);
  DownstreamHead head;
  head.net = find_net(lc, "head", path);
  const auto& shift = find_buffer(lc, "input_shift", path);
  const auto& scale = find_buffer(lc, "input_scale", path);
  if (shift.size() != head.net.input_dim() || scale.size() != head.net.input_dim()) {
    throw FormatError(path.string() + ": standardization buffers do not match the head input");
  }
  head.input_shift = Eigen::Map<const Eigen::VectorXd>(shift.data(), static_cast<Eigen::Index>(shift.size()));
  head.input_scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
  if (metadata) *metadata = lc.header.value("metadata", json::object());
  return head;
}

json read_checkpoint_header(const fs::path& path) {
  auto in = open_in(path);
  return read_header(in, path);
}

void atomic_write(const fs::path& path, const std::function<void(std::ostream&)>& writer) {
  static std::atomic<std::uint64_t> counter{0};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter.fetch_add(1));
  try {
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
      writer(out);
      out.flush();
      if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
}

void atomic_write_text(const fs::path& path, std::string_view text) {
  atomic_write(path, [&](std::ostream& out) { out.write(text.data(), static_cast<std::streamsize>(text.size())); });
}

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      EVP_MD_CTX_free(ctx_);
      throw std::runtime_error("SHA-256 initialization failed");
    }
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_, data, n) != 1) throw std::runtime_error("SHA-256 update failed");
  }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_, md, &len) != 1) throw std::runtime_error("SHA-256 finalization failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string file_sha256(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  Sha256 h;
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string loss_log_csv(const std::vector<LossBreakdown>& log) {
  std::ostringstream os;
  os << "epoch,reconstruction,kl_prior,kl_similarity,total\n" << std::setprecision(17);
  for (std::size_t e = 0; e < log.size(); ++e) {
    os << e + 1 << ',' << log[e].reconstruction << ',' << log[e].kl_prior << ',' << log[e].kl_similarity << ','
       << log[e].total << '\n';
  }
  return os.str();
}

}  // namespace svae::io
