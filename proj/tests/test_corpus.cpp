#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "masstool/corpus.hpp"
#include "masstool/embedding.hpp"
#include "masstool/rng.hpp"

using namespace masstool;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("masstool_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  f << content;
}

}  // namespace

TEST_CASE("load_corpus: partition follows the usage labels") {
  TempDir dir;
  write_file(dir.file("tools.jsonl"),
             R"({"tool_id": "t1", "description": "weather lookup"})"
             "\n"
             R"({"tool_id": "t2", "description": "stock prices"})"
             "\n");
  write_file(dir.file("queries.jsonl"),
             R"({"query_id": "q1", "text": "check the weather", "label": 1, "golden_tools": ["t1"]})"
             "\n"
             R"({"query_id": "q2", "text": "hello there", "label": 0, "golden_tools": []})"
             "\n");
  Corpus c = load_corpus(dir.file("tools.jsonl"), dir.file("queries.jsonl"));
  CHECK(c.ret_indices.size() == 1);
  CHECK(c.det_indices.size() == 1);
  CHECK(c.queries[c.ret_indices[0]].query_id == "q1");
}

TEST_CASE("load_corpus: label 0 with golden tools is a LabelMismatch") {
  TempDir dir;
  write_file(dir.file("tools.jsonl"), R"({"tool_id": "t1", "description": "d"})"
                                      "\n");
  write_file(dir.file("queries.jsonl"),
             R"({"query_id": "q1", "text": "x", "label": 0, "golden_tools": ["t1"]})"
             "\n");
  try {
    load_corpus(dir.file("tools.jsonl"), dir.file("queries.jsonl"));
    FAIL("expected LabelMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::label_mismatch);
  }
}

TEST_CASE("load_corpus: unknown golden tool is a DanglingTool") {
  TempDir dir;
  write_file(dir.file("tools.jsonl"), R"({"tool_id": "t1", "description": "d"})"
                                      "\n");
  write_file(dir.file("queries.jsonl"),
             R"({"query_id": "q1", "text": "x", "label": 1, "golden_tools": ["missing"]})"
             "\n");
  try {
    load_corpus(dir.file("tools.jsonl"), dir.file("queries.jsonl"));
    FAIL("expected DanglingTool");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::dangling_tool);
  }
}

TEST_CASE("load_corpus: parse error reports the line number") {
  TempDir dir;
  write_file(dir.file("tools.jsonl"), R"({"tool_id": "t1", "description": "d"})"
                                      "\nnot json\n");
  write_file(dir.file("queries.jsonl"), "");
  try {
    load_corpus(dir.file("tools.jsonl"), dir.file("queries.jsonl"));
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::parse_error);
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("corpus round-trips through save/load") {
  std::vector<ToolRecord> tools = {{"t1", "alpha"}, {"t2", "beta"}};
  std::vector<QueryRecord> queries = {{"q1", "uses tools", 1, {"t1", "t2"}},
                                      {"q2", "chit chat", 0, {}}};
  Corpus c = make_corpus(tools, queries);
  TempDir dir;
  save_corpus(c, dir.file("t.jsonl"), dir.file("q.jsonl"));
  Corpus back = load_corpus(dir.file("t.jsonl"), dir.file("q.jsonl"));
  CHECK(back.tools.size() == 2);
  CHECK(back.queries.size() == 2);
  CHECK(back.query("q1").golden_tools == std::vector<std::string>{"t1", "t2"});
}

TEST_CASE("ToolLens-shaped corpus passes validation") {
  // 18,770 queries over 464 tools, 1-3 golden per query
  std::vector<ToolRecord> tools;
  for (int i = 0; i < 464; ++i)
    tools.push_back({"tool" + std::to_string(i), "description " + std::to_string(i)});
  std::vector<QueryRecord> queries;
  Rng rng(99);
  for (int i = 0; i < 18770; ++i) {
    QueryRecord q;
    q.query_id = "q" + std::to_string(i);
    q.text = "query text " + std::to_string(i);
    q.usage_label = 1;
    std::size_t n = 1 + rng.below(3);
    std::set<std::string> golden;
    while (golden.size() < n) golden.insert("tool" + std::to_string(rng.below(464)));
    q.golden_tools.assign(golden.begin(), golden.end());
    queries.push_back(std::move(q));
  }
  Corpus c = make_corpus(std::move(tools), std::move(queries));
  CHECK(c.ret_indices.size() == 18770);
  CHECK(c.tools.size() == 464);
}

TEST_CASE("split_train_test: 90/10 in each stratum, deterministic, exhaustive") {
  std::vector<ToolRecord> tools = {{"t1", "d"}};
  std::vector<QueryRecord> queries;
  for (int i = 0; i < 100; ++i)
    queries.push_back({"r" + std::to_string(i), "x", 1, {"t1"}});
  for (int i = 0; i < 100; ++i)
    queries.push_back({"d" + std::to_string(i), "x", 0, {}});
  Corpus c = make_corpus(tools, queries);

  Split s = split_train_test(c, 17);
  CHECK(s.train.size() == 180);
  CHECK(s.test.size() == 20);
  std::size_t ret_test = 0, det_test = 0;
  for (std::size_t i : s.test)
    (c.queries[i].usage_label == 1 ? ret_test : det_test) += 1;
  CHECK(ret_test == 10);
  CHECK(det_test == 10);

  // determinism
  Split s2 = split_train_test(c, 17);
  CHECK(s.train == s2.train);
  CHECK(s.test == s2.test);

  // different seed moves things around
  Split s3 = split_train_test(c, 18);
  CHECK(s3.test != s.test);

  // disjoint and exhaustive
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  for (std::size_t i : s.test) CHECK(all.insert(i).second);
  CHECK(all.size() == c.queries.size());
}

TEST_CASE("split_train_test: below 10 retrieval queries raises TooSmall") {
  std::vector<ToolRecord> tools = {{"t1", "d"}};
  std::vector<QueryRecord> queries;
  for (int i = 0; i < 9; ++i)
    queries.push_back({"r" + std::to_string(i), "x", 1, {"t1"}});
  Corpus c = make_corpus(tools, queries);
  CHECK_THROWS_AS(split_train_test(c, 1), Error);
}

TEST_CASE("EMB1 file round-trip is bit exact") {
  Rng rng(41);
  std::vector<std::string> ids = {"a", "b", "c"};
  std::vector<float> rows(3 * 5);
  for (auto& v : rows) v = static_cast<float>(rng.uniform(-2, 2));
  EmbeddingMatrix m = EmbeddingMatrix::from_rows(ids, 5, rows);
  TempDir dir;
  save_embeddings(m, dir.file("e.emb"));
  EmbeddingMatrix back = load_embeddings(dir.file("e.emb"));
  CHECK(back.ids == ids);
  CHECK(back.dim == 5);
  CHECK(back.rows == rows);
}

TEST_CASE("EMB1 loader rejects bad magic and truncation") {
  TempDir dir;
  write_file(dir.file("bad.emb"), "NOPE");
  write_file(dir.file("bad.emb.ids"), "a\n");
  CHECK_THROWS_AS(load_embeddings(dir.file("bad.emb")), Error);

  // valid file, then truncate the row data
  EmbeddingMatrix m = EmbeddingMatrix::from_rows({"a", "b"}, 4, std::vector<float>(8, 1.0f));
  save_embeddings(m, dir.file("t.emb"));
  fs::resize_file(dir.file("t.emb"), 4 + 4 + 4 + 5);
  try {
    load_embeddings(dir.file("t.emb"));
    FAIL("expected CorruptFile");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::corrupt_file);
  }
}

TEST_CASE("EmbeddingMatrix rejects NaN rows and duplicate ids") {
  std::vector<float> bad = {1.0f, std::numeric_limits<float>::quiet_NaN()};
  CHECK_THROWS_AS(EmbeddingMatrix::from_rows({"a"}, 2, bad), Error);
  CHECK_THROWS_AS(EmbeddingMatrix::from_rows({"a", "a"}, 1, {1.0f, 2.0f}), Error);
}

TEST_CASE("hash_embed: deterministic, unit norm, dim guard") {
  Vec a = hash_embed("stock price today", 64, 7);
  Vec b = hash_embed("stock price today", 64, 7);
  CHECK(a == b);
  CHECK(norm2(a) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(hash_embed("text", 4, 7), Error);
  CHECK_THROWS_AS(hash_embed("   ", 64, 7), Error);
}

TEST_CASE("hash_embed: shared tokens raise cosine similarity") {
  // one shared token out of two vs zero shared tokens
  Vec a = hash_embed("stock price", 64, 7);
  Vec b = hash_embed("stock prices", 64, 7);
  Vec c = hash_embed("weather", 64, 7);
  CHECK(cosine(a, b) > cosine(a, c));
  CHECK(cosine(a, b) > 0.4);  // one of two tokens shared
}

TEST_CASE("hash_embed: different seeds give different spaces") {
  Vec a = hash_embed("alpha beta gamma", 64, 1);
  Vec b = hash_embed("alpha beta gamma", 64, 2);
  CHECK(a != b);
}

TEST_CASE("tooldet_filter: boundary semantics are inclusive") {
  // candidate0 has max cosine exactly in range, candidate1 is identical to a
  // reference row (cosine 1.0, rejected), candidate2 is orthogonal (0.0).
  std::vector<float> ref = {1.0f, 0.0f};
  EmbeddingMatrix reference = EmbeddingMatrix::from_rows({"r1"}, 2, ref);
  float half = 0.5f, rt = std::sqrt(3.0f) / 2.0f;
  EmbeddingMatrix cands = EmbeddingMatrix::from_rows(
      {"mid", "same", "orth"}, 2, {half, rt, 1.0f, 0.0f, 0.0f, 1.0f});
  auto kept = tooldet_filter(cands, reference);
  CHECK(kept == std::vector<std::string>{"mid"});
}

TEST_CASE("tooldet_filter matches the exhaustive max-cosine oracle") {
  Rng rng(43);
  std::size_t dim = 8;
  std::vector<std::string> cand_ids, ref_ids;
  std::vector<float> cand_rows, ref_rows;
  for (int i = 0; i < 50; ++i) {
    cand_ids.push_back("c" + std::to_string(i));
    for (std::size_t j = 0; j < dim; ++j)
      cand_rows.push_back(static_cast<float>(rng.uniform(-1, 1)));
  }
  for (int i = 0; i < 30; ++i) {
    ref_ids.push_back("r" + std::to_string(i));
    for (std::size_t j = 0; j < dim; ++j)
      ref_rows.push_back(static_cast<float>(rng.uniform(-1, 1)));
  }
  EmbeddingMatrix cands = EmbeddingMatrix::from_rows(cand_ids, dim, cand_rows);
  EmbeddingMatrix refs = EmbeddingMatrix::from_rows(ref_ids, dim, ref_rows);

  auto kept = tooldet_filter(cands, refs);

  // brute-force scan from the definition
  std::vector<std::string> expect;
  for (std::size_t i = 0; i < cands.count(); ++i) {
    double best = -1.0;
    for (std::size_t j = 0; j < refs.count(); ++j)
      best = std::max(best, cosine(cands.row_vec(i), refs.row_vec(j)));
    if (best >= 0.4 && best <= 0.6) expect.push_back(cands.ids[i]);
  }
  CHECK(kept == expect);
}

TEST_CASE("tooldet_filter is invariant to row order") {
  Rng rng(44);
  std::size_t dim = 8;
  std::vector<std::string> ids;
  std::vector<float> rows;
  for (int i = 0; i < 20; ++i) {
    ids.push_back("c" + std::to_string(i));
    for (std::size_t j = 0; j < dim; ++j) rows.push_back(static_cast<float>(rng.uniform(-1, 1)));
  }
  EmbeddingMatrix refs = EmbeddingMatrix::from_rows({"r0"}, dim, std::vector<float>(dim, 0.3f));
  EmbeddingMatrix a = EmbeddingMatrix::from_rows(ids, dim, rows);

  // reversed candidate order
  std::vector<std::string> rids(ids.rbegin(), ids.rend());
  std::vector<float> rrows;
  for (int i = 19; i >= 0; --i)
    for (std::size_t j = 0; j < dim; ++j) rrows.push_back(rows[i * dim + j]);
  EmbeddingMatrix b = EmbeddingMatrix::from_rows(rids, dim, rrows);

  auto ka = tooldet_filter(a, refs);
  auto kb = tooldet_filter(b, refs);
  CHECK(std::set<std::string>(ka.begin(), ka.end()) ==
        std::set<std::string>(kb.begin(), kb.end()));
}

TEST_CASE("tooldet_filter: dimension mismatch raises") {
  EmbeddingMatrix a = EmbeddingMatrix::from_rows({"a"}, 2, {1.0f, 0.0f});
  EmbeddingMatrix b = EmbeddingMatrix::from_rows({"b"}, 3, {1.0f, 0.0f, 0.0f});
  CHECK_THROWS_AS(tooldet_filter(a, b), Error);
}
