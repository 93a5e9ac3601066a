#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace leo::code {

/// One function as it comes out of a dataset file.
struct RawFunction {
  std::string source_text;
  int label = 0;  // 0 non-vulnerable, 1 vulnerable
  std::optional<std::string> cwe;
  std::string id;
};

using Statement = std::vector<std::string>;

struct NormalizedFunction {
  std::vector<Statement> statements;
  /// original identifier -> symbolic name, in order of first appearance.
  std::vector<std::pair<std::string, std::string>> rename_map;
};

enum class TokenKind { identifier, number, literal, punct };

struct Token {
  std::string text;
  TokenKind kind = TokenKind::punct;
  std::size_t line = 0;       // physical line in the ASCII-filtered text
  std::size_t offset = 0;     // byte offset in the original input
  bool directive = false;     // part of a preprocessor line
  std::size_t directive_id = 0;
};

/// Placeholder emitted for every string and character literal.
inline constexpr std::string_view kLiteralToken = "str";

/// Lexes C/C++ text: drops non-ASCII bytes and comments, replaces string and
/// character literals with `str`. Throws NormalizationError on an
/// unterminated comment or literal.
std::vector<Token> lex(std::string_view source);

/// Keywords, common libc/STL names and the literal placeholder; these are
/// never renamed.
bool is_reserved_identifier(std::string_view ident);

/// Renames user identifiers in place to var1.. / func1.. by first appearance.
/// Identifiers directly followed by '(' are functions. Preprocessor lines are
/// left untouched. Returns the rename map.
std::vector<std::pair<std::string, std::string>> rename_identifiers(std::vector<Token>& tokens);

/// Groups a token stream into statements. Boundaries: after a ';' outside
/// parentheses, after block braces, after the closing ')' of an
/// if/for/while/switch/catch header unless ';' follows, and at a line break
/// outside parentheses. Each preprocessor line is one statement.
std::vector<Statement> split_statements(std::span<const Token> tokens);

NormalizedFunction normalize_source(std::string_view source);
inline NormalizedFunction normalize_source(const RawFunction& raw) { return normalize_source(raw.source_text); }

/// One statement per line, tokens separated by single spaces.
std::string render(const NormalizedFunction& fn);

}  // namespace leo::code
