#include "tagctd/corpus.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tagctd/util.hpp"

namespace tagctd {

using ordered_json = nlohmann::ordered_json;

namespace {

std::optional<std::string> opt_string(const nlohmann::json& j, const char* field) {
  if (!j.contains(field) || j[field].is_null()) return std::nullopt;
  if (!j[field].is_string()) fail(Errc::CorpusParse, std::string(field) + " must be a string or null");
  return j[field].get<std::string>();
}

InputPair parse_line(const std::string& line, const std::string& origin, std::size_t line_no) {
  auto where = [&] { return origin + " line " + std::to_string(line_no); };
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    fail(Errc::CorpusParse, "invalid JSON object at " + where());
  try {
    InputPair s;
    if (!j.contains("id") || !j["id"].is_string())
      fail(Errc::CorpusParse, "missing string id at " + where());
    s.id = j["id"].get<std::string>();
    s.image_path = opt_string(j, "image");
    s.caption = opt_string(j, "caption");
    if (!j.contains("text") || !j["text"].is_string())
      fail(Errc::CorpusParse, "missing string text at " + where());
    s.text = j["text"].get<std::string>();
    if (j.contains("label") && !j["label"].is_null()) {
      if (!j["label"].is_number_integer())
        fail(Errc::CorpusParse, "label must be 0 or 1 at " + where());
      int label = j["label"].get<int>();
      if (label != 0 && label != 1) fail(Errc::CorpusParse, "label must be 0 or 1 at " + where());
      s.label = label;
    }
    s.category = opt_string(j, "category");
    s.erasure_reason = opt_string(j, "erasure_reason");
    bool has_visual = (s.caption && !s.caption->empty()) || (s.image_path && !s.image_path->empty());
    if (!has_visual && s.text.empty())
      fail(Errc::CorpusParse, "sample with no content at " + where());
    return s;
  } catch (const nlohmann::json::exception&) {
    fail(Errc::CorpusParse, "invalid field types at " + where());
  }
}

}  // namespace

std::vector<InputPair> parse_corpus(const std::string& jsonl, const std::string& origin) {
  std::vector<InputPair> out;
  std::istringstream in(jsonl);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    out.push_back(parse_line(line, origin, line_no));
  }
  if (out.empty()) fail(Errc::CorpusParse, origin + " holds no samples");
  return out;
}

std::vector<InputPair> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open corpus " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_corpus(ss.str(), path);
}

std::string corpus_line_json(const InputPair& sample) {
  ordered_json j;
  j["id"] = sample.id;
  j["image"] = sample.image_path ? ordered_json(*sample.image_path) : ordered_json(nullptr);
  j["caption"] = sample.caption ? ordered_json(*sample.caption) : ordered_json(nullptr);
  j["text"] = sample.text;
  j["label"] = sample.label ? ordered_json(*sample.label) : ordered_json(nullptr);
  j["category"] = sample.category ? ordered_json(*sample.category) : ordered_json(nullptr);
  j["erasure_reason"] =
      sample.erasure_reason ? ordered_json(*sample.erasure_reason) : ordered_json(nullptr);
  return j.dump();
}

void append_corpus_line(const std::string& path, const InputPair& sample) {
  std::ofstream out(path, std::ios::app);
  if (!out) fail(Errc::IoError, "cannot open corpus for append: " + path);
  out << corpus_line_json(sample) << "\n";
}

}  // namespace tagctd
