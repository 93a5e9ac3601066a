#include <doctest.h>

#include <set>

#include "leo/errors.hpp"
#include "leo/normalizer.hpp"
#include "leo/vocabulary.hpp"
#include "support.hpp"

using namespace leo;
using namespace leo::code;

namespace {
std::vector<std::string> flat(const NormalizedFunction& f) {
  std::vector<std::string> out;
  for (const auto& s : f.statements) out.insert(out.end(), s.begin(), s.end());
  return out;
}
using Toks = std::vector<std::string>;
}  // namespace

TEST_CASE("tokenization of a for header") {
  const auto f = normalize_source("for(var1=0;var1<10;var1++)");
  CHECK(flat(f) == Toks{"for", "(", "var1", "=", "0", ";", "var1", "<", "10", ";", "var1", "++", ")"});
}

TEST_CASE("comment removal and renaming") {
  const auto f = normalize_source("int count = 0; // init");
  REQUIRE(f.statements.size() == 1);
  CHECK(f.statements[0] == Toks{"int", "var1", "=", "0", ";"});
  REQUIRE(f.rename_map.size() == 1);
  CHECK(f.rename_map[0] == std::pair<std::string, std::string>{"count", "var1"});
}

TEST_CASE("library calls are kept and literals collapse") {
  const auto f = normalize_source("printf(\"abc\");");
  CHECK(flat(f) == Toks{"printf", "(", "str", ")", ";"});
  CHECK(flat(normalize_source("c = 'x';")) == Toks{"var1", "=", "str", ";"});
}

TEST_CASE("functions and variables are numbered separately") {
  const auto f = normalize_source("int a = helper(b); other(a, b);");
  CHECK(flat(f) == Toks{"int", "var1", "=", "func1", "(", "var2", ")", ";", "func2", "(", "var1", ",", "var2", ")",
                        ";"});
}

TEST_CASE("statement splitting") {
  CHECK(normalize_source("a=1;b=2;").statements.size() == 2);
  const auto f = normalize_source("if(x){y=1;}");
  REQUIRE(f.statements.size() == 4);
  CHECK(f.statements[0] == Toks{"if", "(", "var1", ")"});
  CHECK(f.statements[1] == Toks{"{"});
  CHECK(f.statements[2] == Toks{"var2", "=", "1", ";"});
  CHECK(f.statements[3] == Toks{"}"});
  CHECK(normalize_source("").statements.empty());
  CHECK(normalize_source("   \n\n  // only a comment\n").statements.empty());
}

TEST_CASE("a for header keeps its semicolons") {
  const auto f = normalize_source("for (i = 0; i < n; i++) total += i;");
  REQUIRE(f.statements.size() == 2);
  CHECK(f.statements[1] == Toks{"var3", "+=", "var1", ";"});
}

TEST_CASE("preprocessor lines are single untouched statements") {
  const auto f = normalize_source("#define LIMIT 16\nint x = LIMIT;");
  REQUIRE(f.statements.size() == 2);
  CHECK(f.statements[0] == Toks{"#", "define", "LIMIT", "16"});
  CHECK(f.statements[1] == Toks{"int", "var1", "=", "var2", ";"});
}

TEST_CASE("non-ASCII bytes are dropped") {
  const auto f = normalize_source("int caf\xc3\xa9 = 1;");
  CHECK(flat(f) == Toks{"int", "var1", "=", "1", ";"});
}

TEST_CASE("unterminated constructs report their byte offset") {
  try {
    normalize_source("int a; /* never closed");
    FAIL("expected NormalizationError");
  } catch (const NormalizationError& e) {
    CHECK(e.offset() == 7);
  }
  try {
    normalize_source("x = \"abc");
    FAIL("expected NormalizationError");
  } catch (const NormalizationError& e) {
    CHECK(e.offset() == 4);
  }
}

TEST_CASE("vocabulary") {
  const std::vector<NormalizedFunction> corpus{{{{"a", "a", "b"}}, {}}};
  SUBCASE("frequency order") {
    const auto v = Vocabulary::build(corpus, 4);
    CHECK(v.size() == 4);
    CHECK(v.id("<pad>") == 0);
    CHECK(v.id("<unk>") == 1);
    CHECK(v.id("a") == 2);
    CHECK(v.id("b") == 3);
    CHECK(encode_tokens({"a", "b"}, v) == std::vector<int>{2, 3});
    CHECK(encode_tokens({"zzz"}, v) == std::vector<int>{1});
    CHECK(encode_tokens({}, v).empty());
  }
  SUBCASE("capacity") {
    const auto v = Vocabulary::build(corpus, 3);
    CHECK(v.size() == 3);
    CHECK(encode_tokens({"b"}, v) == std::vector<int>{Vocabulary::kUnk});
  }
  SUBCASE("lexicographic tiebreak") {
    const std::vector<NormalizedFunction> tie{{{{"b", "a"}}, {}}};
    const auto v = Vocabulary::build(tie, 10);
    CHECK(v.id("a") == 2);
    CHECK(v.id("b") == 3);
  }
  SUBCASE("invalid capacity") { CHECK_THROWS_AS(Vocabulary::build(corpus, 1), UsageError); }
  SUBCASE("round trip through the token list") {
    const auto v = Vocabulary::build(corpus, 4);
    const auto w = Vocabulary::from_tokens(v.tokens());
    CHECK(w.tokens() == v.tokens());
    CHECK(w.id("b") == 3);
  }
}

TEST_CASE("property: normalizer invariants over a fuzz corpus") {
  const auto corpus = testing::fuzz_corpus(300, 99);
  for (const auto& src : corpus) {
    const auto f = normalize_source(src);
    // ASCII, printable, no whitespace, no empty statement
    for (const auto& st : f.statements) {
      CHECK_FALSE(st.empty());
      for (const auto& t : st) {
        CHECK_FALSE(t.empty());
        for (unsigned char c : t) CHECK((c > 0x20 && c < 0x7f));
      }
    }
    // idempotence
    const auto again = normalize_source(render(f));
    CHECK(again.statements == f.statements);
    // bijective renaming in first-appearance order
    std::set<std::string> originals, symbols;
    std::size_t vars = 0, funcs = 0;
    for (const auto& [orig, sym] : f.rename_map) {
      CHECK(originals.insert(orig).second);
      CHECK(symbols.insert(sym).second);
      if (sym.rfind("var", 0) == 0) CHECK(sym == "var" + std::to_string(++vars));
      else CHECK(sym == "func" + std::to_string(++funcs));
    }
    // determinism
    CHECK(normalize_source(src).statements == f.statements);
  }
}
