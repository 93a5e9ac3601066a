#pragma once

// Helpers shared by the unit tests and the acceptance binary: a fuzz corpus
// for the normalizer and independent reference implementations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "leo/normalizer.hpp"
#include "leo/rng.hpp"
#include "leo/synth.hpp"

namespace leo::testing {

// C-like functions with comments, literals, preprocessor lines, non-ASCII
// bytes, odd spacing and random identifiers mixed in.
inline std::vector<std::string> fuzz_corpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const char* idents[] = {"alpha", "beta", "count", "ptr", "len", "buf_2", "_tmp", "Node", "x", "yy"};
  const char* extras[] = {
      "/* block\n comment */",
      "// line comment \xc3\xa9",
      "char c = 'q';",
      "const char *s = \"text with \\\"quotes\\\" and \xe2\x82\xac\";",
      "#define LIMIT 16",
      "#include <stdio.h>",
      "x = y\n  + 1;",
      "if (a) { b = 2; }",
      "while (i < n) i++;",
      "\t\t  ",
      "\xef\xbb\xbf",
      "arr[i] = {1, 2, 3};",
      "p->next = q;",
      "return a ? b : c;",
  };
  std::vector<std::string> out;
  const pipeline::Family fams[] = {pipeline::Family::bounds, pipeline::Family::copy, pipeline::Family::auth};
  for (std::size_t i = 0; i < n; ++i) {
    auto pair = pipeline::generate_pair(fams[i % 3], rng, "f");
    std::string src = rng.bernoulli(0.5) ? pair.benign.source_text : pair.vulnerable.source_text;
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < src.size()) {
      auto nl = src.find('\n', start);
      if (nl == std::string::npos) nl = src.size();
      lines.push_back(src.substr(start, nl - start));
      start = nl + 1;
    }
    const auto inserts = rng.below(5);
    for (std::size_t k = 0; k < inserts; ++k) {
      const auto at = 1 + rng.below(lines.size() - 1);
      std::string extra = extras[rng.below(std::size(extras))];
      if (rng.bernoulli(0.3)) extra = std::string(idents[rng.below(std::size(idents))]) + " = " + extra;
      if (extra.front() != '#' && extra.front() != '/' && extra.back() != ';' && extra.back() != '}' &&
          extra.find_first_not_of(" \t") != std::string::npos && static_cast<unsigned char>(extra[0]) < 0x80) {
        extra += ";";
      }
      lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(at), extra);
    }
    std::string text;
    for (const auto& l : lines) text += l + (rng.bernoulli(0.1) ? "\r\n" : "\n");
    out.push_back(text);
  }
  return out;
}

// Exhaustive pairwise AUROC.
inline double brute_auroc(const std::vector<double>& id, const std::vector<double>& ood) {
  double wins = 0.0;
  for (double o : ood)
    for (double i : id) wins += o > i ? 1.0 : (o == i ? 0.5 : 0.0);
  return wins / (static_cast<double>(id.size()) * static_cast<double>(ood.size()));
}

// Average precision by walking every distinct threshold from the top.
inline double brute_aupr(const std::vector<double>& id, const std::vector<double>& ood) {
  std::set<double, std::greater<>> thresholds(id.begin(), id.end());
  thresholds.insert(ood.begin(), ood.end());
  double ap = 0.0, prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0, fp = 0;
    for (double o : ood) tp += o >= t;
    for (double i : id) fp += i >= t;
    const double recall = tp / static_cast<double>(ood.size());
    if (tp > 0) ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
  }
  return ap;
}

// (x - mu)^T inverse(S) (x - mu), with the inverse from Gauss-Jordan elimination.
inline std::vector<std::vector<double>> gauss_jordan_inverse(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    std::swap(inv[c], inv[piv]);
    const double d = a[c][c];
    for (std::size_t j = 0; j < n; ++j) {
      a[c][j] /= d;
      inv[c][j] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[c][j];
        inv[r][j] -= f * inv[c][j];
      }
    }
  }
  return inv;
}

inline double quadratic_form(const std::vector<double>& x, const std::vector<double>& mu,
                             const std::vector<std::vector<double>>& inv) {
  double q = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a)
    for (std::size_t b = 0; b < x.size(); ++b) q += (x[a] - mu[a]) * inv[a][b] * (x[b] - mu[b]);
  return q;
}

// The contrastive loss written as the plain double sum over anchors.
inline double direct_contrastive(const std::vector<std::vector<double>>& reps, const std::vector<int>& y,
                                 const std::vector<int>& cluster, double tau) {
  auto sim = [&](std::size_t i, std::size_t j) {
    double uv = 0, uu = 0, vv = 0;
    for (std::size_t k = 0; k < reps[i].size(); ++k) {
      uv += reps[i][k] * reps[j][k];
      uu += reps[i][k] * reps[i][k];
      vv += reps[j][k] * reps[j][k];
    }
    if (std::sqrt(uu) < 1e-12 || std::sqrt(vv) < 1e-12) return 0.0;
    return uv / (std::sqrt(uu) * std::sqrt(vv));
  };
  const std::size_t m = reps.size();
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (y[i] != 1) continue;
    std::vector<std::size_t> pos;
    for (std::size_t c = 0; c < m; ++c)
      if (c != i && y[c] == 1 && cluster[c] == cluster[i]) pos.push_back(c);
    if (pos.empty()) continue;
    double denom = 0.0;
    for (std::size_t a = 0; a < m; ++a)
      if (a != i) denom += std::exp(sim(i, a) / tau);
    double s = 0.0;
    for (std::size_t c : pos) s += std::log(std::exp(sim(i, c) / tau) / denom);
    total += -s / static_cast<double>(pos.size());
  }
  return total;
}

}  // namespace leo::testing
