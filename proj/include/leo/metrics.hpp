#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace leo::metrics {

/// Outlier scores of in-distribution and OOD test samples; OOD is the positive class.
struct ScoreSet {
  std::vector<double> id_scores;
  std::vector<double> ood_scores;
};

/// The ceil(q * n)-th smallest value (nearest rank, no interpolation).
double nearest_rank_quantile(std::span<const double> values, double q);

/// Fraction of OOD scores at or below the nearest-rank `tpr` quantile of the ID scores.
double fpr_at_tpr(const ScoreSet& s, double tpr = 0.95);
/// P(OOD score > ID score), ties counted 1/2.
double auroc(const ScoreSet& s);
/// Step-wise average precision over the descending ranking; tied scores form one step.
double aupr(const ScoreSet& s);

struct ScoreRecord {
  std::string id;
  std::string population;  // "id" or "ood"
  double score = 0.0;
  bool ood = false;
};

struct EvalReport {
  double fpr_at_tpr95 = 0.0;
  double auroc = 0.0;
  double aupr = 0.0;
  std::size_t n_id = 0;
  std::size_t n_ood = 0;
  std::vector<std::pair<std::string, std::string>> fingerprint;
  std::vector<ScoreRecord> scores;
};

EvalReport build_report(const ScoreSet& s, std::vector<std::pair<std::string, std::string>> fingerprint = {});

/// `metric,value` table: the three metrics, the counts, then fingerprint entries.
std::string report_table(const EvalReport& r);
/// `id,population,score,decision` rows.
std::string score_dump(const EvalReport& r);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

}  // namespace leo::metrics
