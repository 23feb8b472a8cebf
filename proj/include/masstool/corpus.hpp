#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace masstool {

struct ToolRecord {
  std::string tool_id;
  std::string description;
};

struct QueryRecord {
  std::string query_id;
  std::string text;
  int usage_label = 0;                    // y in {0,1}
  std::vector<std::string> golden_tools;  // sorted, unique; empty iff y == 0
};

/// Immutable after construction; detection/retrieval partition is derived
/// from the usage labels (y=0 -> detection subset, y=1 -> retrieval subset).
struct Corpus {
  std::vector<ToolRecord> tools;
  std::vector<QueryRecord> queries;
  std::unordered_map<std::string, std::size_t> tool_index;
  std::unordered_map<std::string, std::size_t> query_index;
  std::vector<std::size_t> det_indices;  // y == 0
  std::vector<std::size_t> ret_indices;  // y == 1

  const ToolRecord& tool(const std::string& id) const;
  const QueryRecord& query(const std::string& id) const;
};

/// Validates records and builds the partition. Throws LabelMismatch when a
/// label contradicts the golden set, DanglingTool for unknown golden ids,
/// ParseError for structural problems (duplicates, empty fields).
Corpus make_corpus(std::vector<ToolRecord> tools, std::vector<QueryRecord> queries);

/// JSON-lines loaders; ParseError carries the offending line number.
Corpus load_corpus(const std::string& tools_path, const std::string& queries_path);

void save_corpus(const Corpus& corpus, const std::string& tools_path,
                 const std::string& queries_path);

/// Keeps all tools, restricts queries to the given indices.
Corpus subset_corpus(const Corpus& corpus, const std::vector<std::size_t>& query_indices);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Deterministic 90/10 split, stratified over the detection and retrieval
/// subsets separately. Throws TooSmall below 10 retrieval queries.
Split split_train_test(const Corpus& corpus, std::uint64_t seed, double test_fraction = 0.1);

}  // namespace masstool
