#include "leo/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>

#include "leo/errors.hpp"

namespace leo::metrics {

namespace {
void require_nonempty(const ScoreSet& s) {
  if (s.id_scores.empty() || s.ood_scores.empty()) {
    throw UsageError("metrics need non-empty ID and OOD score lists");
  }
}
}  // namespace

double nearest_rank_quantile(std::span<const double> values, double q) {
  if (values.empty()) throw UsageError("quantile of an empty list");
  if (!(q > 0.0 && q <= 1.0)) throw UsageError("quantile must be in (0, 1]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double rank = std::ceil(q * static_cast<double>(v.size()) - 1e-9);
  const std::size_t idx = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(rank, 1.0)), 1, v.size());
  return v[idx - 1];
}

double fpr_at_tpr(const ScoreSet& s, double tpr) {
  require_nonempty(s);
  const double t = nearest_rank_quantile(s.id_scores, tpr);
  const auto accepted = std::count_if(s.ood_scores.begin(), s.ood_scores.end(), [t](double x) { return x <= t; });
  return static_cast<double>(accepted) / static_cast<double>(s.ood_scores.size());
}

double auroc(const ScoreSet& s) {
  require_nonempty(s);
  std::vector<double> id = s.id_scores;
  std::sort(id.begin(), id.end());
  std::uint64_t twice_wins = 0;  // 2 per win, 1 per tie
  for (double o : s.ood_scores) {
    const auto lo = std::lower_bound(id.begin(), id.end(), o);
    const auto hi = std::upper_bound(lo, id.end(), o);
    twice_wins += 2 * static_cast<std::uint64_t>(lo - id.begin()) + static_cast<std::uint64_t>(hi - lo);
  }
  return static_cast<double>(twice_wins) / 2.0 /
         (static_cast<double>(id.size()) * static_cast<double>(s.ood_scores.size()));
}

double aupr(const ScoreSet& s) {
  require_nonempty(s);
  std::vector<std::pair<double, bool>> all;  // (score, is_ood)
  for (double v : s.id_scores) all.emplace_back(v, false);
  for (double v : s.ood_scores) all.emplace_back(v, true);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  const double n_pos = static_cast<double>(s.ood_scores.size());
  std::size_t tp = 0, fp = 0;
  double ap = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i, new_tp = 0;
    while (j < all.size() && all[j].first == all[i].first) {
      if (all[j].second) ++new_tp; else ++fp;
      ++j;
    }
    tp += new_tp;
    if (new_tp > 0) {
      ap += (static_cast<double>(new_tp) / n_pos) * (static_cast<double>(tp) / static_cast<double>(tp + fp));
    }
    i = j;
  }
  return ap;
}

EvalReport build_report(const ScoreSet& s, std::vector<std::pair<std::string, std::string>> fingerprint) {
  EvalReport r;
  r.fpr_at_tpr95 = fpr_at_tpr(s, 0.95);
  r.auroc = auroc(s);
  r.aupr = aupr(s);
  r.n_id = s.id_scores.size();
  r.n_ood = s.ood_scores.size();
  r.fingerprint = std::move(fingerprint);
  return r;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_field(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) return v;
  std::string q = "\"";
  for (char c : v) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace

std::string report_table(const EvalReport& r) {
  std::string out = "metric,value\n";
  out += "fpr_at_tpr95," + format_double(r.fpr_at_tpr95) + "\n";
  out += "auroc," + format_double(r.auroc) + "\n";
  out += "aupr," + format_double(r.aupr) + "\n";
  out += "n_id," + std::to_string(r.n_id) + "\n";
  out += "n_ood," + std::to_string(r.n_ood) + "\n";
  for (const auto& [k, v] : r.fingerprint) out += "config." + k + "," + csv_field(v) + "\n";
  return out;
}

std::string score_dump(const EvalReport& r) {
  std::string out = "id,population,score,decision\n";
  for (const auto& s : r.scores) {
    out += csv_field(s.id) + "," + s.population + "," + format_double(s.score) + "," + (s.ood ? "ood" : "id") + "\n";
  }
  return out;
}

}  // namespace leo::metrics
