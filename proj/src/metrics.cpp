#include "metrics.hpp"

#include <algorithm>
#include <cmath>

namespace unidial {

std::size_t gt_rank(const RankingResult& result) {
  for (std::size_t i = 0; i < result.permutation.size(); ++i) {
    if (result.permutation[i] == result.gt_index) return i + 1;
  }
  throw DataError("gt_rank: ground-truth index " +
                  std::to_string(result.gt_index) +
                  " absent from the permutation");
}

double recall_at_k(const std::vector<RankingResult>& results, std::size_t k) {
  if (k == 0) throw ParamError("recall_at_k: k must be >= 1");
  if (results.empty()) throw ContractError("recall_at_k: empty result set");
  std::size_t hits = 0;
  for (const auto& r : results)
    if (gt_rank(r) <= k) ++hits;
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

double mrr(const std::vector<RankingResult>& results) {
  if (results.empty()) throw ContractError("mrr: empty result set");
  double s = 0.0;
  for (const auto& r : results) s += 1.0 / static_cast<double>(gt_rank(r));
  return s / static_cast<double>(results.size());
}

double mean_rank(const std::vector<RankingResult>& results) {
  if (results.empty()) throw ContractError("mean_rank: empty result set");
  double s = 0.0;
  for (const auto& r : results) s += static_cast<double>(gt_rank(r));
  return s / static_cast<double>(results.size());
}

double ndcg(const RankingResult& result) {
  if (!result.relevance.has_value()) {
    throw ContractError("ndcg: result has no relevance vector");
  }
  const auto& rel = *result.relevance;
  if (rel.size() != result.permutation.size()) {
    throw DataError("ndcg: relevance length " + std::to_string(rel.size()) +
                    " does not match " +
                    std::to_string(result.permutation.size()) + " candidates");
  }
  std::size_t k = 0;
  for (double v : rel)
    if (v > 0.0) ++k;
  if (k == 0) return 1.0;

  double dcg = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    dcg += rel[result.permutation[i]] /
           std::log2(static_cast<double>(i) + 2.0);
  }
  std::vector<double> sorted(rel);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    idcg += sorted[i] / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / idcg;
}

RankMetrics aggregate_metrics(const std::vector<RankingResult>& results) {
  RankMetrics m;
  m.count = results.size();
  if (results.empty()) return m;
  m.r_at_1 = recall_at_k(results, 1);
  m.r_at_5 = recall_at_k(results, 5);
  m.r_at_10 = recall_at_k(results, 10);
  m.mrr = mrr(results);
  m.mean_rank = mean_rank(results);
  double nd = 0.0;
  std::size_t with_rel = 0;
  for (const auto& r : results) {
    if (r.relevance.has_value()) {
      nd += ndcg(r);
      ++with_rel;
    }
  }
  if (with_rel > 0) m.ndcg = nd / static_cast<double>(with_rel);
  return m;
}

SplitReport aggregate_split(const std::vector<RankingResult>& results) {
  SplitReport report;
  report.overall = aggregate_metrics(results);
  std::map<std::string, std::vector<RankingResult>> buckets;
  for (const auto& r : results) {
    if (!r.kind.empty()) buckets[r.kind].push_back(r);
  }
  for (auto& [kind, rs] : buckets)
    report.by_kind[kind] = aggregate_metrics(rs);
  return report;
}

}  // namespace unidial
