#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "leo/normalizer.hpp"
#include "leo/rng.hpp"

namespace leo::pipeline {

/// bounds: index checked against a length (CWE-125);
/// copy: allocation followed by a length-limited copy (CWE-787);
/// auth: privilege or permission check before a privileged action (CWE-285).
enum class Family { bounds, copy, auth };

std::string family_name(Family f);

/// A function and its vulnerable twin, which is the same text with the
/// guard line removed.
struct SynthPair {
  code::RawFunction benign;
  code::RawFunction vulnerable;
  std::string guard;
};

SynthPair generate_pair(Family f, Rng& rng, const std::string& id);

/// n functions of one family, alternating benign / vulnerable.
std::vector<code::RawFunction> generate_family(Family f, std::size_t n, Rng& rng, const std::string& id_prefix);

struct SynthOptions {
  std::size_t train_per_family = 1000;  // bounds and copy, in D_in
  std::size_t test_per_family = 250;    // bounds and copy, ID test set
  std::size_t ood = 500;                // auth
  std::uint64_t seed = 1;
};

struct SynthCorpus {
  std::vector<code::RawFunction> d_in;
  std::vector<code::RawFunction> id_test;
  std::vector<code::RawFunction> ood_test;
};

SynthCorpus generate_synthetic(const SynthOptions& opts);

/// Writes d_in.jsonl, id_test.jsonl and ood_test.jsonl into `dir`.
void write_synthetic(const SynthCorpus& corpus, const std::string& dir);

}  // namespace leo::pipeline
