#include <doctest.h>

#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "leo/errors.hpp"
#include "leo/metrics.hpp"
#include "leo/rng.hpp"
#include "support.hpp"

using namespace leo;
using namespace leo::metrics;

namespace {

std::vector<double> one_to(int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 1.0);
  return v;
}

ScoreSet random_set(Rng& rng, bool ties) {
  ScoreSet s;
  s.id_scores.resize(1 + rng.below(50));
  s.ood_scores.resize(1 + rng.below(50));
  auto draw = [&] { return ties ? static_cast<double>(rng.below(6)) : rng.normal(); };
  for (auto& v : s.id_scores) v = draw();
  for (auto& v : s.ood_scores) v = draw() + 0.5;
  return s;
}

}  // namespace

TEST_CASE("FPR at TPR 95") {
  CHECK(fpr_at_tpr({one_to(20), {10, 25}}) == 0.5);
  CHECK(fpr_at_tpr({one_to(20), {21, 30}}) == 0.0);
  CHECK(fpr_at_tpr({one_to(20), one_to(20)}) == doctest::Approx(0.95).epsilon(1e-15));
  CHECK_THROWS_AS(fpr_at_tpr({{}, {1}}), UsageError);
  CHECK_THROWS_AS(fpr_at_tpr({{1}, {}}), UsageError);
  // Direct enumeration on a shuffled copy.
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    ScoreSet s = random_set(rng, t % 2);
    auto sorted = s.id_scores;
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(sorted.size()) - 1e-9));
    const double th = sorted[std::max<std::size_t>(rank, 1) - 1];
    double below = 0;
    for (double o : s.ood_scores) below += o <= th;
    CHECK(fpr_at_tpr(s) == below / static_cast<double>(s.ood_scores.size()));
  }
}

TEST_CASE("AUROC and AUPR examples") {
  CHECK(auroc({{0.1, 0.2}, {0.8, 0.9}}) == 1.0);
  CHECK(auroc({{0.3, 0.3}, {0.3, 0.3, 0.3}}) == 0.5);
  CHECK(auroc({{0.1, 0.7}, {0.5, 0.9}}) == 0.75);
  CHECK(aupr({{0.1, 0.2}, {0.8, 0.9}}) == 1.0);
  CHECK(aupr({{0.1, 0.2, 0.3}, {0.9}}) == 1.0);
  CHECK(aupr({{0.1, 0.7}, {0.5, 0.9}}) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("property: AUROC and AUPR match brute force") {
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    const ScoreSet s = random_set(rng, t % 3 == 0);
    CHECK(std::abs(auroc(s) - testing::brute_auroc(s.id_scores, s.ood_scores)) < 1e-12);
    CHECK(std::abs(aupr(s) - testing::brute_aupr(s.id_scores, s.ood_scores)) < 1e-12);
  }
}

TEST_CASE("property: AUROC invariances") {
  Rng rng(3);
  for (int t = 0; t < 300; ++t) {
    const ScoreSet s = random_set(rng, false);
    ScoreSet m = s;
    for (auto* v : {&m.id_scores, &m.ood_scores})
      for (auto& x : *v) x = std::exp(2.0 * x) + 3.0;
    CHECK(auroc(m) == auroc(s));
    const ScoreSet swapped{s.ood_scores, s.id_scores};
    CHECK(auroc(swapped) == doctest::Approx(1.0 - auroc(s)).epsilon(1e-14));
  }
}

TEST_CASE("property: raising OOD scores never raises FPR") {
  Rng rng(4);
  for (int t = 0; t < 300; ++t) {
    ScoreSet s = random_set(rng, t % 2);
    const double before = fpr_at_tpr(s);
    for (auto& o : s.ood_scores) o += rng.uniform();
    CHECK(fpr_at_tpr(s) <= before);
  }
}

TEST_CASE("reports") {
  SUBCASE("perfect separation") {
    const auto r = build_report({{0.1, 0.2}, {0.8, 0.9}});
    CHECK(r.fpr_at_tpr95 == 0.0);
    CHECK(r.auroc == 1.0);
    CHECK(r.aupr == 1.0);
    CHECK(r.n_id == 2);
    CHECK(r.n_ood == 2);
  }
  SUBCASE("identical distributions") {
    Rng rng(5);
    ScoreSet s;
    for (int i = 0; i < 2000; ++i) s.id_scores.push_back(rng.normal()), s.ood_scores.push_back(rng.normal());
    CHECK(std::abs(build_report(s).auroc - 0.5) < 0.05);
  }
  SUBCASE("serialization is deterministic and round-trips the values") {
    Rng rng(6);
    const ScoreSet s = random_set(rng, false);
    auto r = build_report(s, {{"seed", "7"}, {"k", "3"}});
    r.scores.push_back({"f1", "id", 0.1 + 0.2, false});
    r.scores.push_back({"f2", "ood", 12.5, true});
    const std::string table = report_table(r);
    CHECK(table == report_table(build_report(s, {{"seed", "7"}, {"k", "3"}})));
    std::istringstream in(table);
    std::string line;
    std::getline(in, line);
    CHECK(line == "metric,value");
    std::vector<double> parsed;
    for (int i = 0; i < 3 && std::getline(in, line); ++i) {
      const auto v = line.substr(line.find(',') + 1);
      double d = 0;
      std::from_chars(v.data(), v.data() + v.size(), d);
      parsed.push_back(d);
    }
    CHECK(parsed == std::vector<double>{r.fpr_at_tpr95, r.auroc, r.aupr});
    CHECK(table.find("config.seed,7\n") != std::string::npos);
    const auto quoted = report_table(build_report(s, {{"hidden", "100,100"}, {"note", "say \"hi\""}}));
    CHECK(quoted.find("config.hidden,\"100,100\"\n") != std::string::npos);
    CHECK(quoted.find("config.note,\"say \"\"hi\"\"\"\n") != std::string::npos);
    CHECK(score_dump(r) == "id,population,score,decision\nf1,id,0.30000000000000004,id\nf2,ood,12.5,ood\n");
  }
}
