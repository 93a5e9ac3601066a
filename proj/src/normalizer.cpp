#include "leo/normalizer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <unordered_set>

#include "leo/errors.hpp"

namespace leo::code {
namespace {

// C and C++ keywords.
constexpr std::array kKeywords = {
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else", "enum",
    "extern", "float", "for", "goto", "if", "inline", "int", "long", "register", "restrict", "return",
    "short", "signed", "sizeof", "static", "struct", "switch", "typedef", "union", "unsigned", "void",
    "volatile", "while", "_Bool", "_Complex", "_Imaginary", "_Alignas", "_Alignof", "_Atomic",
    "_Generic", "_Noreturn", "_Static_assert", "_Thread_local", "alignas", "alignof", "and", "and_eq",
    "asm", "bitand", "bitor", "bool", "catch", "char8_t", "char16_t", "char32_t", "class", "compl",
    "concept", "const_cast", "consteval", "constexpr", "constinit", "co_await", "co_return", "co_yield",
    "decltype", "delete", "dynamic_cast", "explicit", "export", "false", "friend", "mutable",
    "namespace", "new", "noexcept", "not", "not_eq", "nullptr", "operator", "or", "or_eq", "private",
    "protected", "public", "reinterpret_cast", "requires", "static_assert", "static_cast", "template",
    "this", "thread_local", "throw", "true", "try", "typeid", "typename", "using", "virtual", "wchar_t",
    "xor", "xor_eq", "override", "final",
};

// Common libc / POSIX / STL names treated as non-user-defined.
constexpr std::array kLibraryNames = {
    "main", "printf", "fprintf", "sprintf", "snprintf", "vprintf", "vfprintf", "vsnprintf", "scanf",
    "sscanf", "fscanf", "puts", "fputs", "gets", "fgets", "putchar", "getchar", "fgetc", "fputc",
    "fopen", "fclose", "fread", "fwrite", "fseek", "ftell", "fflush", "feof", "ferror", "perror",
    "remove", "rename", "tmpfile", "malloc", "calloc", "realloc", "free", "alloca", "memcpy", "memmove",
    "memset", "memcmp", "memchr", "strcpy", "strncpy", "strcat", "strncat", "strcmp", "strncmp",
    "strlen", "strnlen", "strchr", "strrchr", "strstr", "strtok", "strdup", "strndup", "strerror",
    "strtol", "strtoul", "strtod", "atoi", "atol", "atof", "abs", "labs", "exit", "abort", "atexit",
    "getenv", "system", "qsort", "bsearch", "rand", "srand", "time", "clock", "assert", "isalpha",
    "isdigit", "isalnum", "isspace", "isupper", "islower", "toupper", "tolower", "open", "close",
    "read", "write", "lseek", "ioctl", "fork", "execve", "execl", "pipe", "dup", "dup2", "getpid",
    "getuid", "geteuid", "getgid", "getegid", "setuid", "setgid", "seteuid", "chmod", "chown",
    "access", "stat", "fstat", "unlink", "mkdir", "chdir", "socket", "bind", "listen", "accept",
    "connect", "send", "recv", "sendto", "recvfrom", "htons", "ntohs", "htonl", "ntohl",
    "pthread_create", "pthread_join", "pthread_mutex_lock", "pthread_mutex_unlock", "sleep", "usleep",
    "kmalloc", "kfree", "kzalloc", "copy_from_user", "copy_to_user", "capable", "NULL", "EOF", "stdin",
    "stdout", "stderr", "errno", "size_t", "ssize_t", "FILE", "int8_t", "int16_t", "int32_t",
    "int64_t", "uint8_t", "uint16_t", "uint32_t", "uint64_t", "uintptr_t", "intptr_t", "ptrdiff_t",
    "off_t", "pid_t", "uid_t", "gid_t", "std", "cout", "cin", "cerr", "endl", "string", "vector",
    "map", "set", "unordered_map", "unordered_set", "pair", "make_pair", "move", "swap", "min", "max",
    "sort", "find", "begin", "end", "push_back", "size", "length", "c_str", "unique_ptr",
    "shared_ptr", "make_unique", "make_shared",
};

const std::unordered_set<std::string_view>& reserved_set() {
  static const std::unordered_set<std::string_view> set = [] {
    std::unordered_set<std::string_view> s(kKeywords.begin(), kKeywords.end());
    s.insert(kLibraryNames.begin(), kLibraryNames.end());
    s.insert(kLiteralToken);
    return s;
  }();
  return set;
}

constexpr std::array<std::string_view, 5> kPunct3 = {">>=", "<<=", "...", "->*", "<=>"};
constexpr std::array<std::string_view, 22> kPunct2 = {"->", "++", "--", "<<", ">>", "<=", ">=", "==",
                                                      "!=", "&&", "||", "+=", "-=", "*=", "/=", "%=",
                                                      "&=", "|=", "^=", "::", "##", ".*"};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

class Lexer {
 public:
  explicit Lexer(std::string_view source) {
    text_.reserve(source.size());
    orig_.reserve(source.size() + 1);
    for (std::size_t i = 0; i < source.size(); ++i) {
      const auto c = static_cast<unsigned char>(source[i]);
      if (c >= 0x80) continue;  // non-ASCII bytes are dropped
      const bool ws = c == '\n' || c == '\t' || c == '\r' || c == '\v' || c == '\f';
      text_.push_back((c < 0x20 && !ws) || c == 0x7f ? ' ' : static_cast<char>(c));
      orig_.push_back(i);
    }
    orig_.push_back(source.size());
  }

  std::vector<Token> run() {
    while (pos_ < text_.size()) step();
    return std::move(out_);
  }

 private:
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }

  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw NormalizationError(what, orig_[at]);
  }

  void emit(std::string text, TokenKind kind, std::size_t start) {
    Token t;
    t.text = std::move(text);
    t.kind = kind;
    t.line = line_;
    t.offset = orig_[start];
    t.directive = in_directive_;
    t.directive_id = directive_id_;
    out_.push_back(std::move(t));
    at_line_start_ = false;
  }

  void newline() {
    ++line_;
    at_line_start_ = true;
    in_directive_ = false;
  }

  void step() {
    const char c = peek();
    if (c == '\n') {
      ++pos_;
      newline();
      return;
    }
    if (c == '\\' && (peek(1) == '\n' || (peek(1) == '\r' && peek(2) == '\n'))) {
      pos_ += peek(1) == '\n' ? 2 : 3;  // line splice: no logical line break
      return;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f') {
      ++pos_;
      return;
    }
    if (c == '/' && peek(1) == '/') {
      while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      return;
    }
    if (c == '/' && peek(1) == '*') {
      block_comment();
      return;
    }
    if (c == '#' && at_line_start_) {
      in_directive_ = true;
      ++directive_id_;
      emit("#", TokenKind::punct, pos_);
      ++pos_;
      return;
    }
    if (ident_start(c)) {
      identifier();
      return;
    }
    if (digit(c) || (c == '.' && digit(peek(1)))) {
      number();
      return;
    }
    if (c == '"') {
      quoted('"', pos_, pos_);
      return;
    }
    if (c == '\'') {
      quoted('\'', pos_, pos_);
      return;
    }
    punct();
  }

  void block_comment() {
    const std::size_t start = pos_;
    pos_ += 2;
    while (pos_ + 1 < text_.size() && !(text_[pos_] == '*' && text_[pos_ + 1] == '/')) {
      if (text_[pos_] == '\n') {
        ++line_;
        in_directive_ = false;
      }
      ++pos_;
    }
    if (pos_ + 1 >= text_.size()) fail("unterminated block comment", start);
    pos_ += 2;
  }

  void identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    std::string_view word(text_.data() + start, pos_ - start);
    const char next = peek();
    if (next == '"') {
      if (word == "R" || word == "LR" || word == "uR" || word == "UR" || word == "u8R") {
        raw_string(start);
        return;
      }
      if (word == "L" || word == "u" || word == "U" || word == "u8") {
        quoted('"', pos_, start);
        return;
      }
    }
    if (next == '\'' && (word == "L" || word == "u" || word == "U" || word == "u8")) {
      quoted('\'', pos_, start);
      return;
    }
    emit(std::string(word), TokenKind::identifier, start);
  }

  void number() {
    const std::size_t start = pos_;
    ++pos_;
    while (pos_ < text_.size()) {
      const char ch = text_[pos_];
      if ((ch == 'e' || ch == 'E' || ch == 'p' || ch == 'P') && (peek(1) == '+' || peek(1) == '-')) {
        pos_ += 2;
      } else if (ident_char(ch) || ch == '.') {
        ++pos_;
      } else if (ch == '\'' && std::isalnum(static_cast<unsigned char>(peek(1)))) {
        pos_ += 2;  // digit separator
      } else {
        break;
      }
    }
    emit(text_.substr(start, pos_ - start), TokenKind::number, start);
  }

  // pos_ sits on the opening quote; token_start includes any encoding prefix.
  void quoted(char quote, std::size_t open, std::size_t token_start) {
    pos_ = open + 1;
    while (true) {
      if (pos_ >= text_.size() || text_[pos_] == '\n') {
        fail(quote == '"' ? "unterminated string literal" : "unterminated character literal", token_start);
      }
      const char ch = text_[pos_];
      if (ch == '\\') {
        if (peek(1) == '\n') ++line_;
        pos_ += 2;
        continue;
      }
      ++pos_;
      if (ch == quote) break;
    }
    emit(std::string(kLiteralToken), TokenKind::literal, token_start);
  }

  void raw_string(std::size_t token_start) {
    std::size_t p = pos_ + 1;  // after the opening quote
    std::string delim;
    while (p < text_.size() && text_[p] != '(' && delim.size() <= 16) delim.push_back(text_[p++]);
    if (p >= text_.size() || text_[p] != '(') fail("malformed raw string literal", token_start);
    const std::string close = ")" + delim + "\"";
    const std::size_t end = text_.find(close, p + 1);
    if (end == std::string::npos) fail("unterminated raw string literal", token_start);
    line_ += static_cast<std::size_t>(std::count(text_.begin() + static_cast<std::ptrdiff_t>(p),
                                                 text_.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
    pos_ = end + close.size();
    emit(std::string(kLiteralToken), TokenKind::literal, token_start);
  }

  void punct() {
    const std::string_view rest(text_.data() + pos_, text_.size() - pos_);
    for (std::string_view p : kPunct3) {
      if (rest.starts_with(p)) {
        emit(std::string(p), TokenKind::punct, pos_);
        pos_ += 3;
        return;
      }
    }
    for (std::string_view p : kPunct2) {
      if (rest.starts_with(p)) {
        emit(std::string(p), TokenKind::punct, pos_);
        pos_ += 2;
        return;
      }
    }
    emit(std::string(1, text_[pos_]), TokenKind::punct, pos_);
    ++pos_;
  }

  std::string text_;
  std::vector<std::size_t> orig_;
  std::vector<Token> out_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
  std::size_t directive_id_ = 0;
  bool at_line_start_ = true;
  bool in_directive_ = false;
};

bool is_control_keyword(const Token& t) {
  return t.kind == TokenKind::identifier &&
         (t.text == "if" || t.text == "for" || t.text == "while" || t.text == "switch" || t.text == "catch");
}

// A '{' that opens an initializer list rather than a block.
bool opens_initializer(const std::vector<std::string>& cur) {
  if (cur.size() < 2) return false;
  const std::string& prev = cur[cur.size() - 2];
  return prev == "=" || prev == "," || prev == "(" || prev == "return" || prev == "[";
}

}  // namespace

bool is_reserved_identifier(std::string_view ident) { return reserved_set().count(ident) > 0; }

std::vector<Token> lex(std::string_view source) { return Lexer(source).run(); }

std::vector<std::pair<std::string, std::string>> rename_identifiers(std::vector<Token>& tokens) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::string, std::string, std::less<>> names;
  std::size_t vars = 0, funcs = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    Token& t = tokens[i];
    if (t.kind != TokenKind::identifier || t.directive || is_reserved_identifier(t.text)) continue;
    auto it = names.find(t.text);
    if (it == names.end()) {
      const bool is_call = i + 1 < tokens.size() && tokens[i + 1].text == "(" && !tokens[i + 1].directive;
      std::string sym = is_call ? "func" + std::to_string(++funcs) : "var" + std::to_string(++vars);
      it = names.emplace(t.text, sym).first;
      order.emplace_back(t.text, std::move(sym));
    }
    t.text = it->second;
  }
  return order;
}

std::vector<Statement> split_statements(std::span<const Token> tokens) {
  std::vector<Statement> out;
  Statement cur;
  std::size_t depth = 0;              // parentheses, brackets and initializer braces
  std::vector<bool> brace_is_init;    // open braces, innermost last
  bool header_pending = false;        // saw a control keyword, waiting for '('
  bool header_open = false;
  std::size_t header_depth = 0;
  std::size_t prev_line = 0;

  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& t = tokens[i];
    if (t.directive) {
      flush();
      const std::size_t id = t.directive_id;
      while (i < tokens.size() && tokens[i].directive && tokens[i].directive_id == id) {
        cur.push_back(tokens[i].text);
        ++i;
      }
      --i;
      flush();
      prev_line = tokens[i].line;
      continue;
    }
    if (!cur.empty() && t.line != prev_line && depth == 0) flush();
    prev_line = t.line;
    cur.push_back(t.text);

    const std::string& s = t.text;
    if (t.kind == TokenKind::identifier && is_control_keyword(t)) {
      header_pending = true;
      continue;
    }
    if (s == "(" || s == "[") {
      if (s == "(" && header_pending && !header_open) {
        header_open = true;
        header_depth = depth;
      }
      header_pending = false;
      ++depth;
      continue;
    }
    header_pending = false;
    if (s == ")" || s == "]") {
      if (depth > 0) --depth;
      if (s == ")" && header_open && depth == header_depth) {
        header_open = false;
        const bool semicolon_next = i + 1 < tokens.size() && tokens[i + 1].text == ";";
        if (!semicolon_next) flush();
      }
      continue;
    }
    if (s == "{") {
      const bool init = opens_initializer(cur);
      brace_is_init.push_back(init);
      if (init) {
        ++depth;
      } else {
        flush();
      }
      continue;
    }
    if (s == "}") {
      const bool init = !brace_is_init.empty() && brace_is_init.back();
      if (!brace_is_init.empty()) brace_is_init.pop_back();
      if (init) {
        if (depth > 0) --depth;
        continue;
      }
      const bool joins_next = i + 1 < tokens.size() && tokens[i + 1].line == t.line &&
                              (tokens[i + 1].text == ";" || tokens[i + 1].text == ",");
      if (!joins_next) flush();
      continue;
    }
    if (s == ";" && depth == 0) flush();
  }
  flush();
  return out;
}

NormalizedFunction normalize_source(std::string_view source) {
  std::vector<Token> tokens = lex(source);
  NormalizedFunction fn;
  fn.rename_map = rename_identifiers(tokens);
  fn.statements = split_statements(tokens);
  return fn;
}

std::string render(const NormalizedFunction& fn) {
  std::string s;
  for (const auto& st : fn.statements) {
    for (std::size_t i = 0; i < st.size(); ++i) {
      if (i) s.push_back(' ');
      s += st[i];
    }
    s.push_back('\n');
  }
  return s;
}

}  // namespace leo::code
