#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "leo/config.hpp"
#include "leo/dataset.hpp"
#include "leo/errors.hpp"
#include "leo/model_io.hpp"
#include "leo/synth.hpp"
#include "leo/trainer.hpp"

using namespace leo;
using namespace leo::pipeline;

namespace {

std::vector<DatasetRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_dataset(in, "mem.jsonl");
}

std::vector<DatasetRecord> as_records(const std::vector<code::RawFunction>& fns) {
  std::vector<DatasetRecord> out;
  for (const auto& f : fns) out.push_back({f, Role::unassigned});
  return out;
}

TrainConfig tiny_config(std::uint64_t seed = 3) {
  TrainConfig c;
  c.off_grid = true;
  c.L = 12;
  c.d = 16;
  c.selector_hidden = {16, 16, 16};
  c.classifier_hidden = {16, 16};
  c.batch = 16;
  c.epochs = 2;
  c.lr = 3e-3;
  c.k = 3;
  c.seed = seed;
  return c;
}

// 32 pairs from the two in-distribution families: 64 functions.
std::vector<DatasetRecord> tiny_corpus(std::uint64_t seed = 1) {
  SynthOptions o;
  o.train_per_family = 32;
  o.test_per_family = 10;
  o.ood = 10;
  o.seed = seed;
  return as_records(generate_synthetic(o).d_in);
}

const TrainResult& tiny_run() {
  static const TrainResult r = train(tiny_config(), tiny_corpus());
  return r;
}

}  // namespace

TEST_CASE("dataset parsing") {
  SUBCASE("two valid lines") {
    const auto r = parse(R"({"code": "int f() { return 0; }", "label": 0, "id": "a"})"
                         "\n"
                         R"({"code": "int g() { return 1; }", "label": 1, "cwe": "CWE-125", "id": 7})"
                         "\n");
    REQUIRE(r.size() == 2);
    CHECK(r[0].fn.id == "a");
    CHECK(r[1].fn.id == "7");
    CHECK(r[1].fn.label == 1);
    CHECK(r[1].fn.cwe == std::optional<std::string>("CWE-125"));
  }
  SUBCASE("label outside {0, 1} names the line") {
    try {
      parse("{\"code\": \"x;\", \"label\": 0}\n{\"code\": \"y;\", \"label\": 2}\n");
      FAIL("expected an error");
    } catch (const DatasetError& e) {
      CHECK(std::string(e.what()).find("mem.jsonl:2") != std::string::npos);
    }
  }
  SUBCASE("malformed line") {
    CHECK_THROWS_AS(parse("{\"code\": \"x;\", \"label\": 0\n"), DatasetError);
    CHECK_THROWS_AS(parse("{\"label\": 0}\n"), DatasetError);
  }
  SUBCASE("duplicate ids") {
    CHECK_THROWS_AS(parse("{\"code\": \"x;\", \"label\": 0, \"id\": \"a\"}\n{\"code\": \"y;\", \"label\": 0, \"id\": \"a\"}\n"),
                    DatasetError);
  }
  SUBCASE("missing ids come from line numbers; blank lines skipped") {
    const auto r = parse("\n{\"code\": \"x;\", \"label\": 0}\n");
    REQUIRE(r.size() == 1);
    CHECK(r[0].fn.id == "line2");
  }
  SUBCASE("empty input") { CHECK(parse("").empty()); }
  SUBCASE("write and read back") {
    const auto dir = std::filesystem::temp_directory_path() / "leo_test_dataset";
    std::filesystem::create_directories(dir);
    std::vector<code::RawFunction> fns{{"int f(char *s) {\n  return s[0] == '\"';\n}\n", 1, "CWE-787", "q\"1"}};
    write_dataset((dir / "d.jsonl").string(), fns);
    const auto back = load_dataset((dir / "d.jsonl").string());
    REQUIRE(back.size() == 1);
    CHECK(back[0].fn.source_text == fns[0].source_text);
    CHECK(back[0].fn.id == fns[0].id);
    CHECK_THROWS_AS(load_dataset((dir / "missing.jsonl").string()), Error);
  }
}

TEST_CASE("split") {
  std::vector<DatasetRecord> recs;
  for (int i = 0; i < 10; ++i) recs.push_back({{"x;", i % 2, std::nullopt, "r" + std::to_string(i)}, Role::unassigned});
  const auto s = split_dataset(recs, 5);
  CHECK(s.train.size() == 8);
  CHECK(s.val.size() == 2);
  auto ids = [](const Split& sp) {
    std::vector<std::string> v;
    for (const auto& r : sp.train) v.push_back(r.fn.id);
    for (const auto& r : sp.val) v.push_back(r.fn.id);
    return v;
  };
  CHECK(ids(split_dataset(recs, 5)) == ids(s));
  // Input order does not matter, only ids and seed.
  auto reversed = recs;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(ids(split_dataset(reversed, 5)) == ids(s));
  std::set<std::vector<std::string>> distinct;
  for (std::uint64_t seed = 0; seed < 100; ++seed) distinct.insert(ids(split_dataset(recs, seed)));
  CHECK(distinct.size() >= 90);
  CHECK_THROWS_AS(split_dataset(std::span(recs).first(4), 1), DatasetError);
}

TEST_CASE("configuration") {
  TrainConfig c;
  apply_config_text(c, "# comment\nk = 5\nlambda = 1\n\nvariant = supervised-class\nscoring = concat-diagonal\nseed = 11\n");
  CHECK(c.k == 5);
  CHECK(c.lambda == 1.0);
  CHECK(c.variant == objective::ContrastiveVariant::supervised_class);
  CHECK(c.scoring == scoring::ScoringMode::concat_diagonal);
  CHECK(c.seed == std::optional<std::uint64_t>(11));
  CHECK_NOTHROW(validate(c));
  CHECK_THROWS_AS(apply_config_text(c, "nonsense = 1\n"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(c, "k 3\n"), ConfigError);
  CHECK_THROWS_AS(set_value(c, "k", "three"), ConfigError);

  SUBCASE("grid and required seed") {
    TrainConfig d;
    CHECK_THROWS_AS(validate(d), ConfigError);
    d.seed = 1;
    CHECK_NOTHROW(validate(d));
    for (auto [key, value] : std::vector<std::pair<std::string, std::string>>{
             {"k", "4"}, {"lambda", "0.5"}, {"tau", "0.7"}, {"nu", "2"}, {"selector_hidden", "100,200,100"}}) {
      TrainConfig e = d;
      set_value(e, key, value);
      CHECK_THROWS_AS(validate(e), ConfigError);
      e.off_grid = true;
      CHECK_NOTHROW(validate(e));
    }
  }
  SUBCASE("text round trip") {
    TrainConfig back;
    apply_config_text(back, config_to_text(c));
    CHECK(config_to_text(back) == config_to_text(c));
  }
}

TEST_CASE("synthetic generator") {
  SynthOptions o;
  o.train_per_family = 100;
  o.test_per_family = 10;
  o.ood = 100;
  o.seed = 4;
  const auto corpus = generate_synthetic(o);
  const std::size_t total = corpus.d_in.size() + corpus.ood_test.size();
  CHECK(total == 300);
  auto count_vuln = [](const std::vector<code::RawFunction>& v, const std::string& cwe) {
    std::size_t n = 0, all = 0;
    for (const auto& f : v)
      if (f.cwe == cwe) ++all, n += f.label;
    return std::pair{n, all};
  };
  for (const std::string cwe : {"CWE-125", "CWE-787"}) {
    const auto [n, all] = count_vuln(corpus.d_in, cwe);
    CHECK(all == 100);
    CHECK(n == 50);
  }
  CHECK(count_vuln(corpus.ood_test, "CWE-285") == std::pair<std::size_t, std::size_t>{50, 100});

  Rng rng(5);
  for (auto f : {Family::bounds, Family::copy, Family::auth}) {
    for (int t = 0; t < 20; ++t) {
      const auto p = generate_pair(f, rng, "p");
      CHECK(p.benign.label == 0);
      CHECK(p.vulnerable.label == 1);
      // Removing the guard line from the benign text gives the vulnerable text.
      std::istringstream in(p.benign.source_text);
      std::string line, expect;
      int removed = 0;
      while (std::getline(in, line)) {
        if (line.find_first_not_of(' ') != std::string::npos && line.substr(line.find_first_not_of(' ')) == p.guard) {
          ++removed;
          continue;
        }
        expect += line + "\n";
      }
      CHECK(removed == 1);
      CHECK(expect == p.vulnerable.source_text);
    }
  }
  const auto again = generate_synthetic(o);
  CHECK(again.d_in.size() == corpus.d_in.size());
  for (std::size_t i = 0; i < corpus.d_in.size(); ++i) CHECK(again.d_in[i].source_text == corpus.d_in[i].source_text);
}

TEST_CASE("training on a small separable set") {
  const auto& r = tiny_run();
  REQUIRE(r.epochs.size() == 2);
  CHECK(r.epochs.back().joint_ce < r.epochs.front().joint_ce);
  CHECK(r.artifact.log.size() == 2);
  CHECK(r.artifact.log[0].rfind("epoch=1 data_ce=", 0) == 0);
  CHECK(std::isfinite(r.artifact.threshold));
  CHECK_FALSE(r.artifact.stats.clusters.empty());
}

TEST_CASE("determinism and persistence") {
  const auto& r = tiny_run();
  const std::string bytes = serialize_model(r.artifact);
  CHECK(bytes == serialize_model(train(tiny_config(), tiny_corpus()).artifact));
  CHECK(bytes.substr(0, 4) == "LEO1");

  SUBCASE("save and load preserve scores") {
    auto loaded = deserialize_model(bytes);
    CHECK(serialize_model(loaded) == bytes);
    auto original = r.artifact;
    const auto probe = tiny_corpus(9);
    const auto a = score_records(original, std::span(probe).first(20));
    const auto b = score_records(loaded, std::span(probe).first(20));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i].score - b[i].score) <= 1e-5 * std::max(1.0, std::abs(a[i].score)));
    CHECK(loaded.threshold == r.artifact.threshold);
    CHECK(loaded.vocab.tokens() == r.artifact.vocab.tokens());
  }
  SUBCASE("corruption") {
    CHECK_THROWS_WITH_AS(deserialize_model(std::string_view(bytes).substr(0, bytes.size() - 9)),
                         doctest::Contains("checksum"), FormatError);
    std::string bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_WITH_AS(deserialize_model(bad), doctest::Contains("magic"), FormatError);
    std::string flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x20;
    CHECK_THROWS_AS(deserialize_model(flipped), FormatError);
    CHECK_THROWS_AS(deserialize_model("LE"), FormatError);
  }
  SUBCASE("file round trip") {
    const auto path = (std::filesystem::temp_directory_path() / "leo_test_model.bin").string();
    save_model(r.artifact, path);
    CHECK(serialize_model(load_model(path)) == bytes);
  }
  SUBCASE("recalibration reproduces the stored threshold") {
    auto copy = deserialize_model(bytes);
    const auto recs = tiny_corpus();
    const auto split = split_dataset(recs, *copy.config.seed, copy.config.val_fraction);
    CHECK(recalibrate(copy, split.val) == r.artifact.threshold);
  }
}

TEST_CASE("step 1 leaves the selector untouched") {
  std::vector<num::Tensor> before;
  std::size_t checked = 0;
  auto cfg = tiny_config();
  cfg.epochs = 1;
  train(cfg, tiny_corpus(), [&](std::size_t, std::size_t, int step, const num::ParameterStore& store) {
    std::vector<num::Tensor> now;
    for (const auto& p : store)
      if (p.group == num::ParamGroup::selector) now.push_back(p.value);
    if (step == 1 && !before.empty()) {
      CHECK(now == before);
      ++checked;
    }
    before = now;
  });
  CHECK(checked >= 2);
}

TEST_CASE("ablation bookkeeping") {
  auto cfg = tiny_config();
  cfg.epochs = 1;
  cfg.ablate_cd = true;
  int step1 = 0;
  const auto r = train(cfg, tiny_corpus(), [&](std::size_t, std::size_t, int step, const num::ParameterStore&) { step1 += step == 1; });
  CHECK(step1 == 0);
  CHECK(r.artifact.config.lambda == 0.0);
  CHECK(r.artifact.config.ablate_cd);
  CHECK(r.epochs[0].data_ce == 0.0);
  CHECK(r.epochs[0].ccl == 0.0);
  CHECK(config_to_text(r.artifact.config).find("ablate_cd = true") != std::string::npos);
}

TEST_CASE("vocabulary ignores validation content") {
  auto cfg = tiny_config();
  cfg.epochs = 1;
  auto recs = tiny_corpus();
  const auto split = split_dataset(recs, *cfg.seed, cfg.val_fraction);
  const auto a = train(cfg, recs).artifact.vocab.tokens();
  for (auto& r : recs)
    for (const auto& v : split.val)
      if (r.fn.id == v.fn.id) r.fn.source_text += "\nint brand_new_token_zz = 77777;\n";
  CHECK(train(cfg, recs).artifact.vocab.tokens() == a);
}

TEST_CASE("evaluation") {
  auto artifact = tiny_run().artifact;
  SynthOptions o;
  o.train_per_family = 10;
  o.test_per_family = 210;
  o.ood = 10;
  o.seed = 12;
  const auto id = as_records(generate_synthetic(o).id_test);
  REQUIRE(id.size() >= 400);
  SUBCASE("self versus self is chance") {
    auto copy = id;
    for (auto& r : copy) r.fn.id += "-copy";
    const auto rep = evaluate(artifact, id, copy);
    CHECK(std::abs(rep.auroc - 0.5) <= 0.05);
    CHECK(rep.n_id == id.size());
    CHECK(rep.scores.size() == 2 * id.size());
  }
  SUBCASE("empty OOD set") { CHECK_THROWS_AS(evaluate(artifact, id, {}), UsageError); }
  SUBCASE("MSP scores") {
    const auto rep = evaluate(artifact, std::span(id).first(50), std::span(id).subspan(50, 50), ScoreKind::msp);
    for (const auto& s : rep.scores) {
      CHECK(s.score >= 0.0);
      CHECK(s.score <= 0.5);
    }
  }
}
