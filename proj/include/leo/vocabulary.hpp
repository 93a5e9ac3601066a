#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "leo/normalizer.hpp"

namespace leo::code {

// Token -> dense id map. Id 0 is PAD and id 1 is UNK; the remaining ids are
// assigned by descending corpus frequency, ties broken lexicographically.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();

  static Vocabulary build(std::span<const NormalizedFunction> corpus, std::size_t max_size);
  /// Rebuilds a vocabulary from its id-ordered token list (as serialized).
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  int id(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

/// Maps tokens to ids; anything outside the vocabulary becomes UNK.
std::vector<int> encode_tokens(const Statement& statement, const Vocabulary& vocab);

}  // namespace leo::code
