#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"

namespace unidial {

struct RankingResult {
  std::vector<std::size_t> permutation;  // candidate indices, best first
  std::size_t gt_index = 0;
  std::optional<std::vector<double>> relevance;  // one score per candidate
  std::string kind;  // optional question tag for per-subset reporting
};

struct RankMetrics {
  double r_at_1 = 0.0;
  double r_at_5 = 0.0;
  double r_at_10 = 0.0;
  double mrr = 0.0;
  double mean_rank = 0.0;
  std::optional<double> ndcg;
  std::size_t count = 0;
};

// 1-based position of the ground truth in the permutation.
std::size_t gt_rank(const RankingResult& result);

double recall_at_k(const std::vector<RankingResult>& results, std::size_t k);
double mrr(const std::vector<RankingResult>& results);
double mean_rank(const std::vector<RankingResult>& results);

// VisDial convention: truncate at k = |{relevance > 0}| with a log2(i+1)
// discount; vacuous relevance (k = 0) scores 1.
double ndcg(const RankingResult& result);

// All aggregates at once; ndcg present iff any result carries relevance
// (vacuous-relevance instances count into the mean).
RankMetrics aggregate_metrics(const std::vector<RankingResult>& results);

// Overall metrics plus one bucket per distinct non-empty kind tag.
struct SplitReport {
  RankMetrics overall;
  std::map<std::string, RankMetrics> by_kind;
};

SplitReport aggregate_split(const std::vector<RankingResult>& results);

}  // namespace unidial
