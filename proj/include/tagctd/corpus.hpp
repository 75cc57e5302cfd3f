#pragma once

#include <string>
#include <vector>

#include "tagctd/graph.hpp"

namespace tagctd {

// JSON-lines corpus: one object per line with fields id, image, caption,
// text, label, category, erasure_reason. Parse failures throw CorpusParse
// naming the 1-based line number; an empty corpus is a parse error.
std::vector<InputPair> load_corpus(const std::string& path);
std::vector<InputPair> parse_corpus(const std::string& jsonl, const std::string& origin);

std::string corpus_line_json(const InputPair& sample);
void append_corpus_line(const std::string& path, const InputPair& sample);

}  // namespace tagctd
