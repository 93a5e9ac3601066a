#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "leo/config.hpp"
#include "leo/dataset.hpp"
#include "leo/errors.hpp"
#include "leo/metrics.hpp"
#include "leo/model_io.hpp"
#include "leo/normalizer.hpp"
#include "leo/synth.hpp"
#include "leo/trainer.hpp"
#include "leo/vocabulary.hpp"

namespace {

using namespace leo;
using namespace leo::pipeline;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string data, id_test, ood_test, model, out;
  std::optional<std::size_t> k;
  std::optional<double> lambda, tau, nu;
  std::optional<std::string> variant;
  bool ablate_cd = false;
  std::size_t repeats = 1;
  std::string score_kind = "mahalanobis";
  std::string population = "id";
  std::size_t n_train = 1000, n_test = 250, n_ood = 500;
};

TrainConfig resolve_config(const Options& o) {
  TrainConfig cfg = o.config.empty() ? TrainConfig{} : load_config_file(o.config);
  if (o.seed) cfg.seed = o.seed;
  if (o.k) cfg.k = *o.k;
  if (o.lambda) cfg.lambda = *o.lambda;
  if (o.tau) cfg.tau = *o.tau;
  if (o.nu) cfg.nu = *o.nu;
  if (o.variant) set_value(cfg, "variant", *o.variant);
  if (o.ablate_cd) cfg.ablate_cd = true;
  return cfg;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

std::vector<DatasetRecord> read_sources(const std::string& path) {
  if (path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl") return load_dataset(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  DatasetRecord r;
  r.fn.source_text = ss.str();
  r.fn.id = path;
  return {r};
}

int cmd_normalize(const Options& o) {
  const auto records = read_sources(o.data);
  const auto norm = normalize_all(records);
  std::string text;
  for (std::size_t i = 0; i < norm.size(); ++i) {
    if (records.size() > 1) text += "# " + records[i].fn.id + "\n";
    text += code::render(norm[i]);
    if (records.size() > 1) text += "\n";
  }
  emit(o.out, text);
  return 0;
}

int cmd_vocab(const Options& o) {
  TrainConfig cfg = resolve_config(o);
  const auto records = load_dataset(o.data);
  const auto norm = normalize_all(records);
  const auto vocab = code::Vocabulary::build(norm, cfg.vocab_max);
  std::string text;
  for (std::size_t i = 0; i < vocab.size(); ++i) text += std::to_string(i) + "\t" + vocab.token(static_cast<int>(i)) + "\n";
  emit(o.out, text);
  return 0;
}

int cmd_train(const Options& o) {
  if (o.out.empty()) throw UsageError("train needs --out <model path>");
  const TrainConfig cfg = resolve_config(o);
  const auto data = load_dataset(o.data);
  auto res = train(cfg, data);
  save_model(res.artifact, o.out);
  std::cerr << "threshold " << metrics::format_double(res.artifact.threshold) << "\n";
  return 0;
}

std::string report_text(const metrics::EvalReport& r) { return metrics::report_table(r); }

int cmd_eval(const Options& o) {
  auto art = load_model(o.model);
  const auto id = load_dataset(o.id_test);
  const auto ood = load_dataset(o.ood_test);
  const auto kind = o.score_kind == "msp" ? ScoreKind::msp : ScoreKind::mahalanobis;
  const auto rep = evaluate(art, id, ood, kind);
  if (o.out.empty()) {
    std::cout << report_text(rep);
  } else {
    emit(o.out, report_text(rep));
    emit(o.out + ".scores.csv", metrics::score_dump(rep));
  }
  return 0;
}

int cmd_score(const Options& o) {
  auto art = load_model(o.model);
  const auto records = load_dataset(o.data);
  const auto scored = score_records(art, records);
  metrics::EvalReport rep;
  for (const auto& s : scored) {
    rep.scores.push_back({s.id, o.population, s.score, s.score > art.threshold});
  }
  emit(o.out, metrics::score_dump(rep));
  return 0;
}

int cmd_ablate(const Options& o) {
  const TrainConfig base = resolve_config(o);
  if (!base.seed) throw ConfigError("a seed is required");
  if (o.repeats == 0) throw UsageError("--repeats must be at least 1");
  const auto data = load_dataset(o.data);
  const auto id = load_dataset(o.id_test);
  const auto ood = load_dataset(o.ood_test);
  std::string text = "variant,fpr_at_tpr95,auroc,aupr\n";
  for (bool ablated : {false, true}) {
    double fpr = 0, auc = 0, ap = 0;
    for (std::size_t r = 0; r < o.repeats; ++r) {
      TrainConfig cfg = base;
      cfg.seed = *base.seed + r;
      cfg.ablate_cd = ablated;
      auto res = train(cfg, data);
      const auto rep = evaluate(res.artifact, id, ood);
      fpr += rep.fpr_at_tpr95;
      auc += rep.auroc;
      ap += rep.aupr;
    }
    const double n = static_cast<double>(o.repeats);
    text += std::string(ablated ? "leo-without-cd" : "leo") + "," + metrics::format_double(fpr / n) + "," +
            metrics::format_double(auc / n) + "," + metrics::format_double(ap / n) + "\n";
  }
  emit(o.out, text);
  return 0;
}

int cmd_synth(const Options& o) {
  if (o.out.empty()) throw UsageError("synth needs --out <directory>");
  SynthOptions so;
  so.seed = o.seed.value_or(1);
  so.train_per_family = o.n_train;
  so.test_per_family = o.n_test;
  so.ood = o.n_ood;
  write_synthetic(generate_synthetic(so), o.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Out-of-distribution detection for vulnerable source code"};
  app.require_subcommand(1);
  Options o;

  auto train_flags = [&](CLI::App* c) {
    c->add_option("--config", o.config, "key = value configuration file");
    c->add_option("--k", o.k, "number of clusters");
    c->add_option("--lambda", o.lambda, "weight of the contrastive term");
    c->add_option("--tau", o.tau, "contrastive temperature");
    c->add_option("--nu", o.nu, "gate relaxation temperature");
    c->add_option("--variant", o.variant, "cluster | supervised-class");
    c->add_flag("--ablate-cd", o.ablate_cd, "disable the data-distribution step and the contrastive term");
  };
  app.add_option("--seed", o.seed, "random seed");

  auto* normalize = app.add_subcommand("normalize", "print the normalized statements of a source or dataset file");
  normalize->add_option("--data", o.data, "C source file or .jsonl dataset")->required();
  normalize->add_option("--out", o.out, "output file (default stdout)");

  auto* vocab = app.add_subcommand("vocab", "build and print the vocabulary of a dataset");
  vocab->add_option("--data", o.data, "dataset (.jsonl)")->required();
  vocab->add_option("--config", o.config, "configuration file (vocab_max)");
  vocab->add_option("--out", o.out, "output file (default stdout)");

  auto* trn = app.add_subcommand("train", "train a model and save it");
  trn->add_option("--data", o.data, "in-distribution dataset (.jsonl)")->required();
  trn->add_option("--out", o.out, "model file to write")->required();
  trn->add_option("--seed", o.seed, "random seed");
  train_flags(trn);

  auto* ev = app.add_subcommand("eval", "evaluate a model on ID and OOD test sets");
  ev->add_option("--model", o.model, "model file")->required();
  ev->add_option("--id-test", o.id_test, "in-distribution test set")->required();
  ev->add_option("--ood-test", o.ood_test, "out-of-distribution test set")->required();
  ev->add_option("--out", o.out, "report path; the score dump goes to <out>.scores.csv");
  ev->add_option("--score", o.score_kind, "mahalanobis | msp")->check(CLI::IsMember({"mahalanobis", "msp"}));

  auto* sc = app.add_subcommand("score", "score every function of a dataset");
  sc->add_option("--model", o.model, "model file")->required();
  sc->add_option("--data", o.data, "dataset (.jsonl)")->required();
  sc->add_option("--out", o.out, "output file (default stdout)");
  sc->add_option("--population", o.population, "population column value")->check(CLI::IsMember({"id", "ood"}));

  auto* ab = app.add_subcommand("ablate", "compare the full model against the ablated one");
  ab->add_option("--data", o.data, "in-distribution dataset (.jsonl)")->required();
  ab->add_option("--id-test", o.id_test, "in-distribution test set")->required();
  ab->add_option("--ood-test", o.ood_test, "out-of-distribution test set")->required();
  ab->add_option("--repeats", o.repeats, "runs per variant with seeds seed, seed+1, ...");
  ab->add_option("--out", o.out, "output file (default stdout)");
  ab->add_option("--seed", o.seed, "random seed");
  train_flags(ab);

  auto* sy = app.add_subcommand("synth", "write the synthetic corpus");
  sy->add_option("--out", o.out, "output directory")->required();
  sy->add_option("--seed", o.seed, "random seed");
  sy->add_option("--n-train", o.n_train, "functions per ID family in d_in.jsonl");
  sy->add_option("--n-test", o.n_test, "functions per ID family in id_test.jsonl");
  sy->add_option("--n-ood", o.n_ood, "functions in ood_test.jsonl");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*normalize) return cmd_normalize(o);
    if (*vocab) return cmd_vocab(o);
    if (*trn) return cmd_train(o);
    if (*ev) return cmd_eval(o);
    if (*sc) return cmd_score(o);
    if (*ab) return cmd_ablate(o);
    if (*sy) return cmd_synth(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
