#include <cstring>
#include <filesystem>
#include <fstream>

#include "masstool/errors.hpp"
#include "masstool/trainer.hpp"

namespace masstool {

namespace {

constexpr char kMagic[4] = {'M', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;
constexpr char kTensorMagic[4] = {'E', 'M', 'B', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  write_u32(os, static_cast<std::uint32_t>(v));
  write_u32(os, static_cast<std::uint32_t>(v >> 32));
}

std::uint32_t read_u32(std::istream& is, const char* what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    raise(Errc::corrupt_file, std::string("checkpoint truncated at ") + what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t read_u64(std::istream& is, const char* what) {
  std::uint64_t lo = read_u32(is, what);
  std::uint64_t hi = read_u32(is, what);
  return lo | (hi << 32);
}

void write_tensor(std::ostream& os, const std::string& name, const Tensor& t) {
  write_u32(os, static_cast<std::uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  os.write(kTensorMagic, 4);
  std::uint32_t rows = t.is_matrix() ? static_cast<std::uint32_t>(t.rows()) : 1u;
  std::uint32_t cols =
      t.is_matrix() ? static_cast<std::uint32_t>(t.cols()) : static_cast<std::uint32_t>(t.size());
  write_u32(os, rows);
  write_u32(os, cols);
  for (double v : t.data) {
    float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_u32(os, bits);
  }
}

struct RawTensor {
  std::string name;
  std::uint32_t rows = 0, cols = 0;
  std::vector<double> data;
};

RawTensor read_tensor(std::istream& is) {
  RawTensor t;
  std::uint32_t name_len = read_u32(is, "tensor name length");
  if (name_len > 4096) raise(Errc::corrupt_file, "unreasonable tensor name length");
  t.name.resize(name_len);
  if (!is.read(t.name.data(), name_len)) raise(Errc::corrupt_file, "checkpoint truncated at name");
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kTensorMagic, 4) != 0)
    raise(Errc::corrupt_file, "tensor block for " + t.name + " lacks EMB1 magic");
  t.rows = read_u32(is, "tensor rows");
  t.cols = read_u32(is, "tensor cols");
  std::size_t n = static_cast<std::size_t>(t.rows) * t.cols;
  t.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = read_u32(is, "tensor data");
    float f;
    std::memcpy(&f, &bits, 4);
    t.data[i] = static_cast<double>(f);
  }
  return t;
}

}  // namespace

void save_checkpoint(const Model& model, std::uint64_t step, const std::string& path) {
  namespace fs = std::filesystem;
  std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) raise(Errc::io_error, "cannot write " + tmp);
    os.write(kMagic, 4);
    write_u32(os, kVersion);
    write_u64(os, step);
    auto params = model.named_params();
    write_u32(os, static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, p] : params) write_tensor(os, name, *p);
    std::string cfg = model.cfg.to_text();
    write_u32(os, static_cast<std::uint32_t>(cfg.size()));
    os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    if (!os) raise(Errc::io_error, "write failed for " + tmp);
  }
  // atomic publish
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) raise(Errc::io_error, "cannot rename " + tmp + " to " + path + ": " + ec.message());
}

LoadedCheckpoint load_checkpoint(const std::string& path, const TrainConfig* expected) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(Errc::io_error, "cannot open " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    raise(Errc::corrupt_file, path + ": bad magic, expected MTCK");
  std::uint32_t version = read_u32(is, "version");
  if (version != kVersion)
    raise(Errc::version_mismatch,
          path + ": version " + std::to_string(version) + ", expected " + std::to_string(kVersion));

  LoadedCheckpoint out;
  out.step = read_u64(is, "step");
  std::uint32_t count = read_u32(is, "tensor count");
  std::vector<RawTensor> tensors;
  tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) tensors.push_back(read_tensor(is));

  std::uint32_t cfg_len = read_u32(is, "config length");
  std::string cfg_text(cfg_len, '\0');
  if (!is.read(cfg_text.data(), cfg_len))
    raise(Errc::corrupt_file, "checkpoint truncated at config");
  TrainConfig cfg = TrainConfig::parse(cfg_text);

  if (expected != nullptr) {
    bool ok = expected->transfer_fn == cfg.transfer_fn &&
              expected->hidden_dim == cfg.hidden_dim &&
              expected->trainable_embeddings == cfg.trainable_embeddings &&
              expected->ablation.no_adakt == cfg.ablation.no_adakt &&
              expected->ablation.no_suim == cfg.ablation.no_suim;
    if (!ok)
      raise(Errc::config_error,
            path + ": checkpoint config does not match the expected model variant");
  }

  if (tensors.size() < 4 || tensors[0].name != "det.proj_w")
    raise(Errc::corrupt_file, path + ": unexpected tensor layout");
  std::size_t hidden = tensors[0].rows;
  std::size_t in_dim = tensors[0].cols;

  Model m;
  m.cfg = cfg;
  m.embed_dim = in_dim;
  m.hidden_dim = hidden;

  std::size_t i = 0;
  auto take = [&](const std::string& name) -> RawTensor& {
    if (i >= tensors.size() || tensors[i].name != name)
      raise(Errc::corrupt_file, path + ": expected tensor '" + name + "' at position " +
                                    std::to_string(i));
    return tensors[i++];
  };
  auto as_matrix = [&](RawTensor& t) {
    return parameter_matrix(t.rows, t.cols, std::move(t.data));
  };
  auto as_vector = [&](RawTensor& t) {
    if (t.rows != 1)
      raise(Errc::corrupt_file, path + ": tensor '" + t.name + "' should be a vector");
    return parameter(std::move(t.data));
  };

  m.detection.proj_w = as_matrix(take("det.proj_w"));
  m.detection.proj_b = as_vector(take("det.proj_b"));
  m.detection.head_w = as_vector(take("det.head_w"));
  m.detection.head_b = as_vector(take("det.head_b"));
  if (!cfg.ablation.no_suim) m.suim_w = as_matrix(take("suim.attn_w"));
  if (!cfg.ablation.no_adakt) {
    m.transfer.kind = cfg.transfer_fn;
    switch (cfg.transfer_fn) {
      case TransferKind::gating:
        m.transfer.gate_w = as_matrix(take("adakt.gate_w"));
        m.transfer.gate_b = as_vector(take("adakt.gate_b"));
        break;
      case TransferKind::attention:
        m.transfer.attn_proj = as_matrix(take("adakt.attn_proj"));
        m.transfer.attn_q = as_matrix(take("adakt.attn_q"));
        m.transfer.attn_k = as_matrix(take("adakt.attn_k"));
        m.transfer.attn_v = as_matrix(take("adakt.attn_v"));
        break;
      case TransferKind::concatenation:
        m.transfer.mlp_w1 = as_matrix(take("adakt.mlp_w1"));
        m.transfer.mlp_b1 = as_vector(take("adakt.mlp_b1"));
        m.transfer.mlp_w2 = as_matrix(take("adakt.mlp_w2"));
        m.transfer.mlp_b2 = as_vector(take("adakt.mlp_b2"));
        break;
      case TransferKind::addition:
        break;
    }
  }
  if (cfg.trainable_embeddings) {
    m.q_nodes = as_matrix(take("graph.q_nodes"));
    m.t_nodes = as_matrix(take("graph.t_nodes"));
  }
  if (i != tensors.size())
    raise(Errc::corrupt_file, path + ": " + std::to_string(tensors.size() - i) +
                                  " unexpected trailing tensors");

  // shape sanity against the config
  if (m.detection.proj_b->size() != hidden || m.detection.head_w->size() != hidden)
    raise(Errc::corrupt_file, path + ": detection tensor shapes disagree");
  if (m.suim_w && (m.suim_w->rows() != in_dim || m.suim_w->cols() != in_dim))
    raise(Errc::corrupt_file, path + ": suim.attn_w shape disagrees with the embedding dim");

  out.model = std::move(m);
  return out;
}

}  // namespace masstool
