#include "leo/vocabulary.hpp"

#include <algorithm>
#include <map>

#include "leo/errors.hpp"

namespace leo::code {

Vocabulary::Vocabulary()
    : tokens_{std::string(kPadToken), std::string(kUnkToken)},
      ids_{{std::string(kPadToken), kPad}, {std::string(kUnkToken), kUnk}} {}

Vocabulary Vocabulary::build(std::span<const NormalizedFunction> corpus, std::size_t max_size) {
  if (max_size < 2) throw UsageError("vocabulary max_size must be at least 2");
  std::map<std::string, std::size_t, std::less<>> counts;
  for (const auto& fn : corpus)
    for (const auto& st : fn.statements)
      for (const auto& tok : st) ++counts[tok];

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> tokens{std::string(kPadToken), std::string(kUnkToken)};
  for (const auto& [tok, n] : ranked) {
    if (tokens.size() >= max_size) break;
    tokens.push_back(tok);
  }
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 2 || tokens[0] != kPadToken || tokens[1] != kUnkToken) {
    throw UsageError("vocabulary must start with the PAD and UNK tokens");
  }
  Vocabulary v;
  v.ids_.clear();
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.ids_.emplace(v.tokens_[i], static_cast<int>(i)).second) {
      throw UsageError("duplicate vocabulary token '" + v.tokens_[i] + "'");
    }
  }
  return v;
}

int Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> encode_tokens(const Statement& statement, const Vocabulary& vocab) {
  std::vector<int> ids;
  ids.reserve(statement.size());
  for (const auto& tok : statement) ids.push_back(vocab.id(tok));
  return ids;
}

}  // namespace leo::code
