#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "masstool/corpus.hpp"
#include "masstool/embedding.hpp"
#include "masstool/gradcheck.hpp"
#include "masstool/graph.hpp"
#include "masstool/rng.hpp"
#include "oracles.hpp"

using namespace masstool;

namespace {

EmbeddingMatrix hash_matrix(const std::vector<std::pair<std::string, std::string>>& id_texts,
                            std::size_t dim, std::uint64_t seed) {
  std::vector<std::string> ids;
  std::vector<float> rows;
  for (const auto& [id, text] : id_texts) {
    ids.push_back(id);
    Vec v = hash_embed(text, dim, seed);
    for (double x : v) rows.push_back(static_cast<float>(x));
  }
  return EmbeddingMatrix::from_rows(std::move(ids), dim, std::move(rows));
}

struct Fixture {
  Corpus corpus;
  EmbeddingMatrix qemb, temb;
  Fixture() {
    std::vector<ToolRecord> tools = {
        {"t1", "alpha tool"}, {"t2", "beta tool"}, {"t3", "gamma tool"}, {"t4", "delta tool"}};
    std::vector<QueryRecord> queries = {
        {"q1", "alpha beta", 1, {"t1", "t2"}},
        {"q2", "beta alpha", 1, {"t2", "t1"}},
        {"q3", "gamma only", 1, {"t3"}},
    };
    corpus = make_corpus(tools, queries);
    qemb = hash_matrix({{"q1", "alpha beta"}, {"q2", "beta alpha"}, {"q3", "gamma only"}}, 16, 5);
    temb = hash_matrix(
        {{"t1", "alpha tool"}, {"t2", "beta tool"}, {"t3", "gamma tool"}, {"t4", "delta tool"}},
        16, 5);
  }
};

}  // namespace

TEST_CASE("build_graphs: identical golden sets share one scene") {
  Fixture fx;
  GraphBundle b = build_graphs(fx.corpus, fx.corpus.ret_indices, fx.qemb, fx.temb);
  // q1 and q2 share {t1,t2}; q3 has {t3}
  CHECK(b.scenes.scene_count() == 2);
  CHECK(b.scenes.query_scene.at("q1") == b.scenes.query_scene.at("q2"));
  CHECK(b.scenes.query_scene.at("q1") != b.scenes.query_scene.at("q3"));

  std::size_t shared = b.scenes.query_scene.at("q1");
  std::uint32_t deg = b.query_scene.right_degree[shared];
  CHECK(deg == 2);

  // every query links to exactly one scene
  for (std::uint32_t d : b.query_scene.left_degree) CHECK(d == 1);
}

TEST_CASE("build_graphs: scene layer-0 embedding is the mean of its tools") {
  Fixture fx;
  GraphBundle b = build_graphs(fx.corpus, fx.corpus.ret_indices, fx.qemb, fx.temb);
  std::size_t s12 = b.scenes.query_scene.at("q1");
  Vec t1 = fx.temb.row_vec(fx.temb.row_of("t1"));
  Vec t2 = fx.temb.row_vec(fx.temb.row_of("t2"));
  for (std::size_t j = 0; j < fx.temb.dim; ++j)
    CHECK(b.s0.row(s12)[j] == doctest::Approx(0.5 * (t1[j] + t2[j])).epsilon(1e-12));
}

TEST_CASE("build_graphs: distinct golden sets give a perfect matching") {
  std::vector<ToolRecord> tools = {{"t1", "a"}, {"t2", "b"}, {"t3", "c"}};
  std::vector<QueryRecord> queries = {{"q1", "x", 1, {"t1"}},
                                      {"q2", "y", 1, {"t2"}},
                                      {"q3", "z", 1, {"t3"}}};
  Corpus c = make_corpus(tools, queries);
  auto qemb = hash_matrix({{"q1", "x"}, {"q2", "y"}, {"q3", "z"}}, 8, 1);
  auto temb = hash_matrix({{"t1", "a"}, {"t2", "b"}, {"t3", "c"}}, 8, 1);
  GraphBundle b = build_graphs(c, c.ret_indices, qemb, temb);
  CHECK(b.scenes.scene_count() == 3);
  CHECK(b.query_scene.edges.size() == 3);
  for (std::uint32_t d : b.query_scene.left_degree) CHECK(d == 1);
  for (std::uint32_t d : b.query_scene.right_degree) CHECK(d == 1);
}

TEST_CASE("propagate: zero layers returns the initial embeddings") {
  Rng rng(100);
  auto g = oracles::random_graph(rng);
  auto [l, r] = propagate(g.graph, g.left0, g.right0, 0);
  CHECK(l.a == g.left0.a);
  CHECK(r.a == g.right0.a);
}

TEST_CASE("propagate: single edge, one layer, degrees 1") {
  auto g = BipartiteGraph::build({"q1"}, {"t1"}, {{0, 0}});
  Matrix l0(1, 3), r0(1, 3);
  l0.a = {1, 2, 3};
  r0.a = {-1, 0.5, 2};
  auto [l, r] = propagate(g, l0, r0, 1);
  // e_q = e_q^0 + e_t^0, e_t = e_t^0 + e_q^0
  for (int j = 0; j < 3; ++j) {
    CHECK(l.a[j] == doctest::Approx(l0.a[j] + r0.a[j]).epsilon(1e-15));
    CHECK(r.a[j] == doctest::Approx(r0.a[j] + l0.a[j]).epsilon(1e-15));
  }
}

TEST_CASE("propagate matches the dense normalized-adjacency oracle") {
  Rng rng(7);
  for (int t = 0; t < 30; ++t) {
    auto g = oracles::random_graph(rng);
    int layers = static_cast<int>(rng.below(4));
    auto [l, r] = propagate(g.graph, g.left0, g.right0, layers);
    auto [dl, dr] = oracles::dense_propagate(g.graph, g.left0, g.right0, layers);
    for (std::size_t i = 0; i < l.a.size(); ++i) CHECK(std::abs(l.a[i] - dl.a[i]) < 1e-10);
    for (std::size_t i = 0; i < r.a.size(); ++i) CHECK(std::abs(r.a[i] - dr.a[i]) < 1e-10);
  }
}

TEST_CASE("propagate: degree-0 nodes keep their layer-0 embedding exactly") {
  auto g = BipartiteGraph::build({"q1", "q2"}, {"t1", "t2"}, {{0, 0}});
  Matrix l0(2, 2), r0(2, 2);
  l0.a = {1, 2, 3, 4};
  r0.a = {5, 6, 7, 8};
  auto [l, r] = propagate(g, l0, r0, 3);
  CHECK(l.row(1)[0] == 3.0);  // q2 untouched
  CHECK(l.row(1)[1] == 4.0);
  CHECK(r.row(1)[0] == 7.0);  // t2 untouched
  CHECK(r.row(1)[1] == 8.0);
}

TEST_CASE("propagate is linear in the embeddings") {
  Rng rng(13);
  for (int t = 0; t < 10; ++t) {
    auto g = oracles::random_graph(rng);
    double alpha = rng.uniform(-2, 2);
    Matrix sl = g.left0, sr = g.right0;
    for (double& v : sl.a) v *= alpha;
    for (double& v : sr.a) v *= alpha;
    auto [l1, r1] = propagate(g.graph, g.left0, g.right0, 2);
    auto [l2, r2] = propagate(g.graph, sl, sr, 2);
    for (std::size_t i = 0; i < l1.a.size(); ++i)
      CHECK(l2.a[i] == doctest::Approx(alpha * l1.a[i]).epsilon(1e-10));
    for (std::size_t i = 0; i < r1.a.size(); ++i)
      CHECK(r2.a[i] == doctest::Approx(alpha * r1.a[i]).epsilon(1e-10));
  }
}

TEST_CASE("propagate is equivariant under node relabeling") {
  Rng rng(29);
  for (int t = 0; t < 10; ++t) {
    auto g = oracles::random_graph(rng, 6);
    std::size_t nl = g.graph.left_ids.size(), nr = g.graph.right_ids.size();
    std::vector<std::uint32_t> lperm(nl), rperm(nr);
    for (std::uint32_t i = 0; i < nl; ++i) lperm[i] = i;
    for (std::uint32_t i = 0; i < nr; ++i) rperm[i] = i;
    rng.shuffle(lperm);
    rng.shuffle(rperm);

    std::vector<std::string> lids(nl), rids(nr);
    Matrix pl0(nl, g.left0.cols), pr0(nr, g.right0.cols);
    for (std::uint32_t i = 0; i < nl; ++i) {
      lids[lperm[i]] = g.graph.left_ids[i];
      for (std::size_t j = 0; j < pl0.cols; ++j) pl0.row(lperm[i])[j] = g.left0.row(i)[j];
    }
    for (std::uint32_t i = 0; i < nr; ++i) {
      rids[rperm[i]] = g.graph.right_ids[i];
      for (std::size_t j = 0; j < pr0.cols; ++j) pr0.row(rperm[i])[j] = g.right0.row(i)[j];
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pedges;
    for (auto [l, r] : g.graph.edges) pedges.push_back({lperm[l], rperm[r]});
    auto pg = BipartiteGraph::build(lids, rids, pedges);

    auto [l1, r1] = propagate(g.graph, g.left0, g.right0, 2);
    auto [l2, r2] = propagate(pg, pl0, pr0, 2);
    for (std::uint32_t i = 0; i < nl; ++i)
      for (std::size_t j = 0; j < l1.cols; ++j)
        CHECK(l2.row(lperm[i])[j] == doctest::Approx(l1.row(i)[j]).epsilon(1e-10));
    for (std::uint32_t i = 0; i < nr; ++i)
      for (std::size_t j = 0; j < r1.cols; ++j)
        CHECK(r2.row(rperm[i])[j] == doctest::Approx(r1.row(i)[j]).epsilon(1e-10));
  }
}

TEST_CASE("propagate_tape agrees with the plain path and is differentiable") {
  Rng rng(31);
  auto g = oracles::random_graph(rng, 5, 3);
  std::size_t nl = g.graph.left_ids.size(), nr = g.graph.right_ids.size();
  std::vector<TensorPtr> l0, r0;
  for (std::size_t i = 0; i < nl; ++i) l0.push_back(parameter(g.left0.row_vec(i)));
  for (std::size_t i = 0; i < nr; ++i) r0.push_back(parameter(g.right0.row_vec(i)));

  auto [pl, pr] = propagate(g.graph, g.left0, g.right0, 2);
  auto [tl, tr] = propagate_tape(g.graph, l0, r0, 2);
  for (std::size_t i = 0; i < nl; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(tl[i]->data[j] == doctest::Approx(pl.row(i)[j]).epsilon(1e-12));
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(tr[i]->data[j] == doctest::Approx(pr.row(i)[j]).epsilon(1e-12));

  std::vector<TensorPtr> params = l0;
  params.insert(params.end(), r0.begin(), r0.end());
  auto loss_fn = [&] {
    auto [a, b] = propagate_tape(g.graph, l0, r0, 2);
    TensorPtr s = constant(0.0);
    for (const auto& t : a) s = ops::add(s, ops::dot(t, t));
    for (const auto& t : b) s = ops::add(s, ops::dot(t, t));
    return s;
  };
  CHECK(grad_check(loss_fn, params) < 1e-6);
}

TEST_CASE("graph_reps: fusion follows e_q_graph = e_q_qt + e_q_qs") {
  Fixture fx;
  GraphBundle b = build_graphs(fx.corpus, fx.corpus.ret_indices, fx.qemb, fx.temb);
  auto [q_qt, t_qt] = propagate(b.query_tool, b.q0, b.t0, 2);
  auto [q_qs, s_qs] = propagate(b.query_scene, b.q0, b.s0, 2);
  GraphReps r = graph_reps(b, q_qt, t_qt, q_qs, s_qs);
  for (std::size_t i = 0; i < r.q_graph.a.size(); ++i)
    CHECK(r.q_graph.a[i] == q_qt.a[i] + q_qs.a[i]);
  CHECK(r.t_graph.a == t_qt.a);  // bit-identical
}

TEST_CASE("scene_rep_from_tools: average pooling over the scene's tools") {
  Fixture fx;
  GraphBundle b = build_graphs(fx.corpus, fx.corpus.ret_indices, fx.qemb, fx.temb);
  auto [q_qt, t_qt] = propagate(b.query_tool, b.q0, b.t0, 2);
  std::unordered_map<std::string, std::size_t> tool_row;
  for (std::size_t i = 0; i < b.query_tool.right_ids.size(); ++i)
    tool_row[b.query_tool.right_ids[i]] = i;

  // single-tool scene equals that tool's representation
  std::size_t s3 = b.scenes.query_scene.at("q3");
  Vec rep = scene_rep_from_tools(b.scenes, s3, t_qt, tool_row);
  for (std::size_t j = 0; j < t_qt.cols; ++j)
    CHECK(rep[j] == doctest::Approx(t_qt.row(tool_row.at("t3"))[j]).epsilon(1e-15));

  // two-tool scene: explicit mean
  std::size_t s12 = b.scenes.query_scene.at("q1");
  Vec rep12 = scene_rep_from_tools(b.scenes, s12, t_qt, tool_row);
  for (std::size_t j = 0; j < t_qt.cols; ++j) {
    double expect = 0.5 * (t_qt.row(tool_row.at("t1"))[j] + t_qt.row(tool_row.at("t2"))[j]);
    CHECK(rep12[j] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("scene_rep_from_tools: opposite reps cancel") {
  SceneTable scenes;
  scenes.scene_tools.push_back({"a", "b"});
  Matrix t_qt(2, 2);
  t_qt.a = {1.0, -2.0, -1.0, 2.0};
  std::unordered_map<std::string, std::size_t> rows{{"a", 0}, {"b", 1}};
  Vec rep = scene_rep_from_tools(scenes, 0, t_qt, rows);
  CHECK(rep[0] == 0.0);
  CHECK(rep[1] == 0.0);
}
