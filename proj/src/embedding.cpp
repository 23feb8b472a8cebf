#include "masstool/embedding.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "masstool/errors.hpp"
#include "masstool/rng.hpp"

namespace masstool {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is, const std::string& what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    raise(Errc::corrupt_file, "truncated " + what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32(os, bits);
}

}  // namespace

Vec EmbeddingMatrix::row_vec(std::size_t i) const {
  Vec v(dim);
  auto r = row(i);
  for (std::size_t j = 0; j < dim; ++j) v[j] = static_cast<double>(r[j]);
  return v;
}

std::size_t EmbeddingMatrix::row_of(const std::string& id) const {
  auto it = index.find(id);
  if (it == index.end()) raise(Errc::id_mismatch, "missing embedding for id: " + id);
  return it->second;
}

EmbeddingMatrix EmbeddingMatrix::from_rows(std::vector<std::string> ids, std::size_t dim,
                                           std::vector<float> rows) {
  EmbeddingMatrix m;
  m.ids = std::move(ids);
  m.dim = dim;
  m.rows = std::move(rows);
  if (m.rows.size() != m.ids.size() * dim)
    raise(Errc::dim_mismatch, "embedding row data does not match id count");
  for (std::size_t i = 0; i < m.ids.size(); ++i) {
    if (!m.index.emplace(m.ids[i], i).second)
      raise(Errc::parse_error, "duplicate embedding id: " + m.ids[i]);
  }
  for (float v : m.rows)
    if (!std::isfinite(v)) raise(Errc::non_finite, "embedding matrix contains NaN/Inf");
  return m;
}

EmbeddingMatrix load_embeddings(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) raise(Errc::io_error, "cannot open " + path);
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    raise(Errc::corrupt_file, path + ": bad magic, expected EMB1");
  std::uint32_t count = read_u32(f, path);
  std::uint32_t dim = read_u32(f, path);
  std::vector<float> rows(static_cast<std::size_t>(count) * dim);
  if (!rows.empty() &&
      !f.read(reinterpret_cast<char*>(rows.data()),
              static_cast<std::streamsize>(rows.size() * sizeof(float))))
    raise(Errc::corrupt_file, path + ": truncated row data");

  std::ifstream idf(path + ".ids");
  if (!idf) raise(Errc::io_error, "cannot open " + path + ".ids");
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(idf, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  if (ids.size() != count)
    raise(Errc::corrupt_file, path + ".ids: id count " + std::to_string(ids.size()) +
                                  " does not match header count " + std::to_string(count));
  return EmbeddingMatrix::from_rows(std::move(ids), dim, std::move(rows));
}

void save_embeddings(const EmbeddingMatrix& m, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) raise(Errc::io_error, "cannot write " + path);
  f.write(kMagic, 4);
  write_u32(f, static_cast<std::uint32_t>(m.count()));
  write_u32(f, static_cast<std::uint32_t>(m.dim));
  for (float v : m.rows) write_f32(f, v);
  if (!f) raise(Errc::io_error, "write failed for " + path);

  std::ofstream idf(path + ".ids");
  if (!idf) raise(Errc::io_error, "cannot write " + path + ".ids");
  for (const auto& id : m.ids) idf << id << "\n";
}

Vec hash_embed(const std::string& text, std::size_t dim, std::uint64_t seed) {
  if (dim < 8) raise(Errc::dim_mismatch, "hash_embed: dim must be >= 8");
  Vec v(dim, 0.0);
  std::istringstream ss(text);
  std::string token;
  bool any = false;
  while (ss >> token) {
    any = true;
    std::uint64_t h = fnv1a64(token) ^ (seed * 0x9e3779b97f4a7c15ull);
    v[h % dim] += 1.0;
  }
  if (!any) raise(Errc::zero_norm, "hash_embed: empty text");
  return l2_normalize(v);
}

std::vector<std::string> tooldet_filter(const EmbeddingMatrix& candidates,
                                        const EmbeddingMatrix& tool_dependent,
                                        double lo, double hi) {
  if (candidates.dim != tool_dependent.dim)
    raise(Errc::dim_mismatch, "tooldet_filter: embedding dims differ");
  std::vector<std::string> retained;
  for (std::size_t i = 0; i < candidates.count(); ++i) {
    Vec c = candidates.row_vec(i);
    double best = -1.0;
    for (std::size_t j = 0; j < tool_dependent.count(); ++j) {
      best = std::max(best, cosine(c, tool_dependent.row_vec(j)));
    }
    if (best >= lo && best <= hi) retained.push_back(candidates.ids[i]);
  }
  return retained;
}

}  // namespace masstool
