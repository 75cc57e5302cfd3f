#include "tagctd/util.hpp"

#include <cctype>

#include <nlohmann/json.hpp>

#include "tagctd/errors.hpp"

namespace tagctd {

const char* to_string(Errc c) {
  switch (c) {
    case Errc::UnknownParent: return "UnknownParent";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::DepthExceeded: return "DepthExceeded";
    case Errc::InvalidProbability: return "InvalidProbability";
    case Errc::EmptyLabel: return "EmptyLabel";
    case Errc::EmptyTree: return "EmptyTree";
    case Errc::MalformedDocument: return "MalformedDocument";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::ProviderUnavailable: return "ProviderUnavailable";
    case Errc::AuthFailure: return "AuthFailure";
    case Errc::MalformedProviderOutput: return "MalformedProviderOutput";
    case Errc::EmptyExtraction: return "EmptyExtraction";
    case Errc::EmptyCandidateList: return "EmptyCandidateList";
    case Errc::NonPositiveProbability: return "NonPositiveProbability";
    case Errc::ExtractionFailed: return "ExtractionFailed";
    case Errc::UndefinedMetric: return "UndefinedMetric";
    case Errc::EmptyEvaluation: return "EmptyEvaluation";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::UnlabeledSample: return "UnlabeledSample";
    case Errc::CorpusParse: return "CorpusParse";
    case Errc::NotToxic: return "NotToxic";
    case Errc::WrongPanelShape: return "WrongPanelShape";
    case Errc::PatternViolation: return "PatternViolation";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
  }
  return "UnknownError";
}

std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string normalize_label(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char ch : s) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::string format_double(double v) {
  // nlohmann emits the shortest representation that round-trips exactly.
  return nlohmann::json(v).dump();
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace tagctd
