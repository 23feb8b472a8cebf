#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "masstool/gradcheck.hpp"
#include "masstool/rng.hpp"
#include "masstool/suim.hpp"

using namespace masstool;

namespace {

QueryPool random_pool(Rng& rng, std::size_t n, std::size_t dim) {
  QueryPool pool;
  for (std::size_t i = 0; i < n; ++i) pool.ids.push_back("q" + std::to_string(1000 + i));
  std::sort(pool.ids.begin(), pool.ids.end());
  pool.sem = Matrix(n, dim);
  pool.graph = Matrix(n, dim);
  for (double& v : pool.sem.a) v = rng.uniform(-1, 1);
  for (double& v : pool.graph.a) v = rng.uniform(-1, 1);
  for (std::size_t i = 0; i < n; ++i) pool.index[pool.ids[i]] = i;
  return pool;
}

}  // namespace

TEST_CASE("knn_search: identical entry ranks first with score 1") {
  Rng rng(1);
  QueryPool pool = random_pool(rng, 20, 8);
  Vec target = pool.sem.row_vec(7);
  NeighborSet ns = knn_search(pool, target, 5);
  CHECK(ns.items.size() == 5);
  CHECK(ns.items[0].pool_index == 7);
  CHECK(ns.items[0].score == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 1; i < ns.items.size(); ++i)
    CHECK(ns.items[i - 1].score >= ns.items[i].score);
}

TEST_CASE("knn_search: orthogonal target scores zero everywhere") {
  QueryPool pool;
  pool.ids = {"a", "b"};
  pool.index = {{"a", 0}, {"b", 1}};
  pool.sem = Matrix(2, 4);
  pool.sem.a = {1, 0, 0, 0, 0, 1, 0, 0};
  pool.graph = Matrix(2, 4);
  Vec target = {0, 0, 1, 0};
  NeighborSet ns = knn_search(pool, target, 2);
  for (const auto& n : ns.items) CHECK(n.score == 0.0);
}

TEST_CASE("knn_search: exclusion removes the target id") {
  Rng rng(2);
  QueryPool pool = random_pool(rng, 10, 6);
  Vec target = pool.sem.row_vec(3);
  std::string self = pool.ids[3];
  NeighborSet ns = knn_search(pool, target, 9, &self);
  for (const auto& n : ns.items) CHECK(n.pool_index != 3);
  CHECK(ns.items.size() == 9);
}

TEST_CASE("knn_search matches exhaustive scan on random pools") {
  Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    QueryPool pool = random_pool(rng, 200, 12);
    Vec target(12);
    for (auto& v : target) v = rng.uniform(-1, 1);
    NeighborSet ns = knn_search(pool, target, 25);

    // brute-force oracle: full stable sort by (score desc, index asc)
    std::vector<std::pair<double, std::uint32_t>> all;
    for (std::uint32_t i = 0; i < pool.size(); ++i)
      all.push_back({cosine(target, pool.sem.row_span(i)), i});
    std::sort(all.begin(), all.end(), [](auto& a, auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    REQUIRE(ns.items.size() == 25);
    for (std::size_t i = 0; i < 25; ++i) {
      CHECK(ns.items[i].pool_index == all[i].second);
      CHECK(ns.items[i].score == all[i].first);
    }
  }
}

TEST_CASE("knn_search: empty pool raises") {
  QueryPool pool;
  pool.sem = Matrix(0, 4);
  Vec target = {1, 0, 0, 0};
  CHECK_THROWS_AS(knn_search(pool, target, 3), Error);
}

TEST_CASE("dynamic_filter: strict threshold") {
  NeighborSet ns;
  ns.k_requested = 3;
  ns.items = {{0, 0.95}, {1, 0.82}, {2, 0.61}};
  NeighborSet out = dynamic_filter(ns, 0.7);
  REQUIRE(out.items.size() == 2);
  CHECK(out.items[0].pool_index == 0);
  CHECK(out.items[1].pool_index == 1);

  // boundary is strict: score == epsilon is dropped
  NeighborSet boundary = dynamic_filter(ns, 0.82);
  CHECK(boundary.items.size() == 1);
}

TEST_CASE("dynamic_filter: epsilon 1.0 keeps all K (sentinel)") {
  NeighborSet ns;
  ns.k_requested = 3;
  ns.items = {{0, 0.95}, {1, 0.5}, {2, -0.2}};
  NeighborSet out = dynamic_filter(ns, 1.0);
  CHECK(out.items.size() == 3);
}

TEST_CASE("dynamic_filter is monotone in epsilon") {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    NeighborSet ns;
    ns.k_requested = 10;
    for (std::uint32_t i = 0; i < 10; ++i) ns.items.push_back({i, rng.uniform(-1, 1)});
    std::sort(ns.items.begin(), ns.items.end(),
              [](auto& a, auto& b) { return a.score > b.score; });
    double e1 = rng.uniform(0.0, 0.99);
    double e2 = rng.uniform(e1, 0.99);
    auto r1 = dynamic_filter(ns, e1);
    auto r2 = dynamic_filter(ns, e2);
    // result(e2) is a subset of result(e1)
    for (const auto& n : r2.items) {
      bool found = false;
      for (const auto& m : r1.items) found = found || m.pool_index == n.pool_index;
      CHECK(found);
    }
  }
}

TEST_CASE("intent_attention: single neighbor gets weight 1") {
  Rng rng(8);
  QueryPool pool = random_pool(rng, 4, 5);
  auto W = parameter_matrix(5, 5, std::vector<double>(25, 0.1));
  auto target = constant(pool.graph.row_vec(0));
  NeighborSet ns;
  ns.items = {{2, 0.9}};
  TensorPtr out = intent_attention(target, ns, pool, W);
  Vec expect = pool.graph.row_vec(2);
  for (std::size_t j = 0; j < 5; ++j)
    CHECK(out->data[j] == doctest::Approx(expect[j]).epsilon(1e-12));
}

TEST_CASE("intent_attention: identical neighbors average to that representation") {
  QueryPool pool;
  pool.ids = {"a", "b", "c"};
  pool.index = {{"a", 0}, {"b", 1}, {"c", 2}};
  pool.sem = Matrix(3, 3);
  pool.graph = Matrix(3, 3);
  Vec rep = {0.4, -0.2, 0.8};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) pool.graph.row(i)[j] = rep[j];
  auto W = parameter_matrix(3, 3, std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1});
  auto target = constant({1.0, 1.0, 1.0});
  NeighborSet ns;
  ns.items = {{0, 0.9}, {1, 0.8}};
  TensorPtr out = intent_attention(target, ns, pool, W);
  for (int j = 0; j < 3; ++j) CHECK(out->data[j] == doctest::Approx(rep[j]).epsilon(1e-12));
}

TEST_CASE("intent_attention matches the explicit exp/sum computation") {
  Rng rng(9);
  QueryPool pool = random_pool(rng, 6, 4);
  std::vector<double> wdata(16);
  for (auto& v : wdata) v = rng.uniform(-0.5, 0.5);
  auto W = parameter_matrix(4, 4, wdata);
  Vec tvec(4);
  for (auto& v : tvec) v = rng.uniform(-1, 1);
  auto target = constant(tvec);
  NeighborSet ns;
  ns.items = {{1, 0.9}, {3, 0.7}, {4, 0.5}};
  TensorPtr out = intent_attention(target, ns, pool, W);

  // direct evaluation of the attention equation
  std::vector<double> logits;
  for (const auto& n : ns.items) {
    Vec rep = pool.graph.row_vec(n.pool_index);
    double l = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) l += tvec[i] * wdata[i * 4 + j] * rep[j];
    logits.push_back(l);
  }
  double z = 0.0;
  for (double l : logits) z += std::exp(l);
  Vec expect(4, 0.0);
  for (std::size_t n = 0; n < ns.items.size(); ++n) {
    Vec rep = pool.graph.row_vec(ns.items[n].pool_index);
    double alpha = std::exp(logits[n]) / z;
    for (int j = 0; j < 4; ++j) expect[j] += alpha * rep[j];
  }
  for (int j = 0; j < 4; ++j)
    CHECK(out->data[j] == doctest::Approx(expect[j]).epsilon(1e-10));
}

TEST_CASE("intent_attention: empty filtered set falls back to the target rep") {
  Rng rng(10);
  QueryPool pool = random_pool(rng, 3, 4);
  auto W = parameter_matrix(4, 4, std::vector<double>(16, 0.0));
  auto target = constant({1.0, 2.0, 3.0, 4.0});
  NeighborSet empty;
  TensorPtr out = intent_attention(target, empty, pool, W);
  CHECK(out.get() == target.get());
}

TEST_CASE("intent_attention: weights sum to 1 and output stays in the convex hull") {
  Rng rng(11);
  QueryPool pool = random_pool(rng, 8, 3);
  std::vector<double> wdata(9);
  for (auto& v : wdata) v = rng.uniform(-1, 1);
  auto W = parameter_matrix(3, 3, wdata);
  auto target = constant({0.3, -0.4, 0.9});
  NeighborSet ns;
  ns.items = {{0, 0.9}, {2, 0.8}, {5, 0.7}, {6, 0.6}};
  TensorPtr out = intent_attention(target, ns, pool, W);
  // convex hull membership per coordinate: min <= out <= max
  for (int j = 0; j < 3; ++j) {
    double lo = 1e18, hi = -1e18;
    for (const auto& n : ns.items) {
      lo = std::min(lo, pool.graph.row(n.pool_index)[j]);
      hi = std::max(hi, pool.graph.row(n.pool_index)[j]);
    }
    CHECK(out->data[j] >= lo - 1e-12);
    CHECK(out->data[j] <= hi + 1e-12);
  }
}

TEST_CASE("intent_attention: gradient w.r.t. W passes grad_check") {
  Rng rng(12);
  QueryPool pool = random_pool(rng, 6, 4);
  std::vector<double> wdata(16);
  for (auto& v : wdata) v = rng.uniform(-0.3, 0.3);
  auto W = parameter_matrix(4, 4, wdata);
  auto target = constant({0.5, -0.2, 0.7, 0.1});
  NeighborSet ns;
  ns.items = {{0, 0.9}, {1, 0.8}, {4, 0.7}};
  auto probe = constant({0.2, 0.4, -0.6, 0.8});
  auto loss_fn = [&] {
    TensorPtr e = intent_attention(target, ns, pool, W);
    return ops::dot(e, probe);
  };
  CHECK(grad_check(loss_fn, {W}) < 1e-4);
}
