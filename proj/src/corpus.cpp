#include "masstool/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "masstool/errors.hpp"
#include "masstool/rng.hpp"

namespace masstool {

using nlohmann::json;

const ToolRecord& Corpus::tool(const std::string& id) const {
  auto it = tool_index.find(id);
  if (it == tool_index.end()) raise(Errc::dangling_tool, "unknown tool id: " + id);
  return tools[it->second];
}

const QueryRecord& Corpus::query(const std::string& id) const {
  auto it = query_index.find(id);
  if (it == query_index.end()) raise(Errc::id_mismatch, "unknown query id: " + id);
  return queries[it->second];
}

Corpus make_corpus(std::vector<ToolRecord> tools, std::vector<QueryRecord> queries) {
  Corpus c;
  c.tools = std::move(tools);
  c.queries = std::move(queries);
  for (std::size_t i = 0; i < c.tools.size(); ++i) {
    const auto& t = c.tools[i];
    if (t.tool_id.empty()) raise(Errc::parse_error, "tool with empty id");
    if (t.description.empty()) raise(Errc::parse_error, "tool " + t.tool_id + ": empty description");
    if (!c.tool_index.emplace(t.tool_id, i).second)
      raise(Errc::parse_error, "duplicate tool id: " + t.tool_id);
  }
  for (std::size_t i = 0; i < c.queries.size(); ++i) {
    auto& q = c.queries[i];
    if (q.query_id.empty()) raise(Errc::parse_error, "query with empty id");
    if (!c.query_index.emplace(q.query_id, i).second)
      raise(Errc::parse_error, "duplicate query id: " + q.query_id);
    if (q.usage_label != 0 && q.usage_label != 1)
      raise(Errc::parse_error, "query " + q.query_id + ": label must be 0 or 1");
    std::sort(q.golden_tools.begin(), q.golden_tools.end());
    q.golden_tools.erase(std::unique(q.golden_tools.begin(), q.golden_tools.end()),
                         q.golden_tools.end());
    // y = 0 <=> empty golden set
    if (q.usage_label == 0 && !q.golden_tools.empty())
      raise(Errc::label_mismatch, "query " + q.query_id + ": y=0 with nonempty golden set");
    if (q.usage_label == 1 && q.golden_tools.empty())
      raise(Errc::label_mismatch, "query " + q.query_id + ": y=1 with empty golden set");
    for (const auto& tid : q.golden_tools)
      if (!c.tool_index.contains(tid))
        raise(Errc::dangling_tool, "query " + q.query_id + ": unknown golden tool " + tid);
    (q.usage_label == 0 ? c.det_indices : c.ret_indices).push_back(i);
  }
  return c;
}

namespace {

json parse_line(const std::string& line, const std::string& path, std::size_t lineno) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    raise(Errc::parse_error, path + ":" + std::to_string(lineno) + ": invalid JSON object");
  return j;
}

std::string require_string(const json& j, const char* key, const std::string& path,
                           std::size_t lineno) {
  if (!j.contains(key) || !j[key].is_string())
    raise(Errc::parse_error,
          path + ":" + std::to_string(lineno) + ": missing string field '" + key + "'");
  return j[key].get<std::string>();
}

}  // namespace

Corpus load_corpus(const std::string& tools_path, const std::string& queries_path) {
  std::ifstream tf(tools_path);
  if (!tf) raise(Errc::io_error, "cannot open " + tools_path);
  std::vector<ToolRecord> tools;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(tf, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = parse_line(line, tools_path, lineno);
    tools.push_back({require_string(j, "tool_id", tools_path, lineno),
                     require_string(j, "description", tools_path, lineno)});
  }

  std::ifstream qf(queries_path);
  if (!qf) raise(Errc::io_error, "cannot open " + queries_path);
  std::vector<QueryRecord> queries;
  lineno = 0;
  while (std::getline(qf, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = parse_line(line, queries_path, lineno);
    QueryRecord q;
    q.query_id = require_string(j, "query_id", queries_path, lineno);
    q.text = require_string(j, "text", queries_path, lineno);
    if (!j.contains("label") || !j["label"].is_number_integer())
      raise(Errc::parse_error,
            queries_path + ":" + std::to_string(lineno) + ": missing integer field 'label'");
    q.usage_label = j["label"].get<int>();
    if (!j.contains("golden_tools") || !j["golden_tools"].is_array())
      raise(Errc::parse_error,
            queries_path + ":" + std::to_string(lineno) + ": missing array field 'golden_tools'");
    for (const auto& e : j["golden_tools"]) {
      if (!e.is_string())
        raise(Errc::parse_error,
              queries_path + ":" + std::to_string(lineno) + ": golden_tools must hold strings");
      q.golden_tools.push_back(e.get<std::string>());
    }
    queries.push_back(std::move(q));
  }
  return make_corpus(std::move(tools), std::move(queries));
}

void save_corpus(const Corpus& corpus, const std::string& tools_path,
                 const std::string& queries_path) {
  std::ofstream tf(tools_path);
  if (!tf) raise(Errc::io_error, "cannot write " + tools_path);
  for (const auto& t : corpus.tools) {
    json j{{"tool_id", t.tool_id}, {"description", t.description}};
    tf << j.dump() << "\n";
  }
  std::ofstream qf(queries_path);
  if (!qf) raise(Errc::io_error, "cannot write " + queries_path);
  for (const auto& q : corpus.queries) {
    json j{{"query_id", q.query_id},
           {"text", q.text},
           {"label", q.usage_label},
           {"golden_tools", q.golden_tools}};
    qf << j.dump() << "\n";
  }
}

Corpus subset_corpus(const Corpus& corpus, const std::vector<std::size_t>& query_indices) {
  std::vector<QueryRecord> qs;
  qs.reserve(query_indices.size());
  for (std::size_t i : query_indices) qs.push_back(corpus.queries[i]);
  return make_corpus(corpus.tools, std::move(qs));
}

Split split_train_test(const Corpus& corpus, std::uint64_t seed, double test_fraction) {
  if (corpus.ret_indices.size() < 10)
    raise(Errc::too_small, "split requires at least 10 retrieval queries");
  Rng rng = Rng(seed).split("train-test-split");
  Split s;
  auto split_stratum = [&](std::vector<std::size_t> stratum) {
    std::sort(stratum.begin(), stratum.end());
    rng.shuffle(stratum);
    auto n_test = static_cast<std::size_t>(
        std::llround(static_cast<double>(stratum.size()) * test_fraction));
    if (test_fraction > 0.0 && stratum.size() >= 2 && n_test == 0) n_test = 1;
    if (n_test >= stratum.size() && !stratum.empty()) n_test = stratum.size() - 1;
    for (std::size_t i = 0; i < stratum.size(); ++i)
      (i < n_test ? s.test : s.train).push_back(stratum[i]);
  };
  split_stratum(corpus.det_indices);
  split_stratum(corpus.ret_indices);
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

}  // namespace masstool
