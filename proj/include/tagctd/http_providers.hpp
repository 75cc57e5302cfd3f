#pragma once

#include <string>

#include "tagctd/chat_client.hpp"
#include "tagctd/datagen.hpp"
#include "tagctd/provider.hpp"

namespace tagctd {

// Model-backed implementations of every provider role. Replies must be the
// exact JSON shapes requested by the prompt registry; anything that cannot
// be aligned to its request is a MalformedProviderOutput, never a default.
// All of them are safe for concurrent calls (the chat client opens one
// connection per request and the cache serializes writes).

class HttpExtractor : public Extractor {
 public:
  HttpExtractor(ChatClient& client, std::string model)
      : client_(client), model_(std::move(model)) {}
  std::vector<std::string> extract_roots(const InputPair& input, Modality modality, int r_max,
                                         CallStats& stats) override;

 private:
  ChatClient& client_;
  std::string model_;
};

class HttpExpander : public Expander {
 public:
  HttpExpander(ChatClient& client, std::string model)
      : client_(client), model_(std::move(model)) {}
  std::vector<ExpansionCandidate> expand(const std::string& node_label,
                                         const ExpansionContext& context, int k,
                                         CallStats& stats) override;

 private:
  ChatClient& client_;
  std::string model_;
};

class HttpAdjudicator : public Adjudicator {
 public:
  HttpAdjudicator(ChatClient& client, std::string model)
      : client_(client), model_(std::move(model)) {}
  std::vector<PairVerdict> adjudicate_pairs(std::span<const LabelPair> pairs,
                                            const PairContext& context, int batch_size,
                                            CallStats& stats) override;

 private:
  ChatClient& client_;
  std::string model_;
};

class HttpPrefilter : public Prefilter {
 public:
  HttpPrefilter(ChatClient& client, std::string model)
      : client_(client), model_(std::move(model)) {}
  std::vector<NodePair> nominate(const TagGraph& g, CallStats& stats) override;

 private:
  ChatClient& client_;
  std::string model_;
};

class HttpExplainer : public Explainer {
 public:
  HttpExplainer(ChatClient& client, std::string model)
      : client_(client), model_(std::move(model)) {}
  std::string elaborate(const std::string& detection_summary, CallStats& stats) override;

 private:
  ChatClient& client_;
  std::string model_;
};

class HttpArchitect : public ArchitectAgent {
 public:
  HttpArchitect(ChatClient& client, std::string model)
      : client_(client), model_(std::move(model)) {}
  Scene architect(const SceneSpec& spec, CallStats& stats) override;

 private:
  ChatClient& client_;
  std::string model_;
};

class HttpEraser : public EraserAgent {
 public:
  HttpEraser(ChatClient& client, std::string model)
      : client_(client), model_(std::move(model)) {}
  CandidateSample erase(const Scene& scene, const std::optional<std::string>& feedback,
                        int iteration, CallStats& stats) override;

 private:
  ChatClient& client_;
  std::string model_;
};

class HttpJudge : public JudgeAgent {
 public:
  HttpJudge(ChatClient& client, std::string model)
      : client_(client), model_(std::move(model)) {}
  Verdict judge(const CandidateSample& sample, JudgeProtocol protocol, int judge_id,
                CallStats& stats) override;

 private:
  ChatClient& client_;
  std::string model_;
};

}  // namespace tagctd
