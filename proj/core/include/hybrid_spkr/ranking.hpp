#pragma once

#include <cstddef>
#include <vector>

namespace hybrid_spkr {

struct RankedSpeaker {
  std::size_t index = 0;
  double score = 0.0;

  friend bool operator==(const RankedSpeaker&, const RankedSpeaker&) = default;
};

enum class RankOrder { kAscending, kDescending };

// Orders every index by score; ties go to the lower index.
std::vector<RankedSpeaker> rank_scores(const std::vector<double>& scores, RankOrder order);

}  // namespace hybrid_spkr
