#pragma once

#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace taskspec {

// One collected <input, output> pair. `true_label` is the generating-domain
// id when known (synthetic corpora, ablations); `explicit_tag` is a
// user-supplied task tag that bypasses the classifier during routing.
struct PromptRecord {
  std::string input;
  std::optional<std::string> output;
  std::optional<int> true_label;
  std::optional<std::string> explicit_tag;

  bool operator==(const PromptRecord&) const = default;
};

inline nlohmann::json to_json(const PromptRecord& r) {
  nlohmann::json j{{"input", r.input}};
  if (r.output) j["output"] = *r.output;
  if (r.true_label) j["label"] = *r.true_label;
  if (r.explicit_tag) j["tag"] = *r.explicit_tag;
  return j;
}

inline PromptRecord record_from_json(const nlohmann::json& j) {
  PromptRecord r;
  r.input = j.at("input").get<std::string>();
  if (r.input.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw std::runtime_error("prompt record: empty input");
  }
  if (j.contains("output") && !j["output"].is_null()) {
    r.output = j["output"].get<std::string>();
  }
  if (j.contains("label") && !j["label"].is_null()) {
    r.true_label = j["label"].get<int>();
  }
  if (j.contains("tag") && !j["tag"].is_null()) {
    r.explicit_tag = j["tag"].get<std::string>();
  }
  return r;
}

inline void write_jsonl(std::ostream& os, const std::vector<PromptRecord>& records) {
  for (const auto& r : records) os << to_json(r).dump() << '\n';
}

inline std::vector<PromptRecord> read_jsonl(std::istream& is) {
  std::vector<PromptRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(record_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

inline void write_jsonl_file(const std::string& path,
                             const std::vector<PromptRecord>& records) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_jsonl(os, records);
}

inline std::vector<PromptRecord> read_jsonl_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return read_jsonl(is);
}

}  // namespace taskspec
