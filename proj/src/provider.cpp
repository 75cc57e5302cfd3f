#include "tagctd/provider.hpp"

#include <cmath>

#include "tagctd/util.hpp"

namespace tagctd {

std::vector<ExpansionCandidate> normalize_probs(std::vector<ExpansionCandidate> cands) {
  if (cands.empty()) fail(Errc::EmptyCandidateList, "nothing to normalize");
  double sum = 0.0;
  for (const ExpansionCandidate& c : cands) {
    if (!(c.prob > 0.0) || !std::isfinite(c.prob))
      fail(Errc::NonPositiveProbability,
           "candidate '" + c.label + "' has probability " + format_double(c.prob));
    sum += c.prob;
  }
  for (ExpansionCandidate& c : cands) c.prob /= sum;
  return cands;
}

}  // namespace tagctd
