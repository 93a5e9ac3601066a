#include "leo/synth.hpp"

#include <array>
#include <filesystem>

#include "leo/dataset.hpp"
#include "leo/errors.hpp"

namespace leo::pipeline {

namespace {

template <std::size_t N>
std::string pick(Rng& rng, const std::array<const char*, N>& options) {
  return options[rng.below(N)];
}

std::string num(Rng& rng, int lo, int hi) { return std::to_string(lo + static_cast<int>(rng.below(hi - lo + 1))); }

constexpr std::array<const char*, 12> kFuncNames = {"process", "handle", "update", "parse_entry", "load_item",
                                                      "fetch", "store_value", "run_task", "do_work", "apply",
                                                      "read_record", "compute"};
constexpr std::array<const char*, 10> kTemps = {"tmp", "count", "total", "flags", "state",
                                                "acc", "result", "step", "mode", "level"};

// Statements shared by every family.
std::string filler(Rng& rng) {
  const std::string t = pick(rng, kTemps);
  switch (rng.below(8)) {
    case 0: return "int " + t + " = " + num(rng, 0, 64) + ";";
    case 1: return t + " = " + t + " + " + num(rng, 1, 9) + ";";
    case 2: return "printf(\"%d\\n\", " + t + ");";
    case 3: return "for (int i = 0; i < " + num(rng, 2, 16) + "; i++) " + t + " += i;";
    case 4: return "log_event(" + t + ");";
    case 5: return t + " ^= " + num(rng, 1, 255) + ";";
    case 6: return "unsigned int " + t + " = " + num(rng, 1, 32) + " * 2;";
    default: return "/* " + t + " */ " + t + "--;";
  }
}

void fillers(Rng& rng, std::vector<std::string>& lines, std::size_t lo, std::size_t hi) {
  const auto n = lo + rng.below(hi - lo + 1);
  for (std::size_t i = 0; i < n; ++i) lines.push_back("  " + filler(rng));
}

// Returns the lines and the index of the guard line.
std::pair<std::vector<std::string>, std::size_t> bounds_function(Rng& rng) {
  const std::string arr = pick(rng, std::array<const char*, 4>{"arr", "table", "values", "slots"});
  const std::string len = pick(rng, std::array<const char*, 4>{"len", "count_max", "n", "capacity"});
  const std::string idx = pick(rng, std::array<const char*, 4>{"idx", "pos", "i_req", "slot"});
  std::vector<std::string> l;
  l.push_back("int " + pick(rng, kFuncNames) + "(int *" + arr + ", int " + len + ", int " + idx + ") {");
  fillers(rng, l, 0, 3);
  std::string guard;
  switch (rng.below(3)) {
    case 0: guard = "if (" + idx + " >= " + len + ") return -1;"; break;
    case 1: guard = "if (" + idx + " < 0 || " + idx + " >= " + len + ") return -1;"; break;
    default: guard = "if (" + idx + " > " + len + " - 1) return 0;"; break;
  }
  const std::size_t g = l.size();
  l.push_back("  " + guard);
  if (rng.bernoulli(0.5)) {
    l.push_back("  int val = " + arr + "[" + idx + "];");
    fillers(rng, l, 0, 3);
    l.push_back("  return val;");
  } else {
    l.push_back("  " + arr + "[" + idx + "] = " + num(rng, 0, 100) + ";");
    fillers(rng, l, 0, 3);
    l.push_back("  return " + arr + "[0];");
  }
  l.push_back("}");
  return {l, g};
}

std::pair<std::vector<std::string>, std::size_t> copy_function(Rng& rng) {
  const std::string src = pick(rng, std::array<const char*, 4>{"src", "input", "data", "payload"});
  const std::string n = pick(rng, std::array<const char*, 4>{"n", "len", "size_in", "nbytes"});
  const std::string buf = pick(rng, std::array<const char*, 4>{"buf", "dst", "out", "copy"});
  const std::string cap = num(rng, 16, 256);
  std::vector<std::string> l;
  l.push_back("char *" + pick(rng, kFuncNames) + "(const char *" + src + ", size_t " + n + ") {");
  l.push_back("  char *" + buf + " = (char *)malloc(" + cap + ");");
  l.push_back("  if (" + buf + " == NULL) return NULL;");
  fillers(rng, l, 0, 3);
  std::string guard;
  switch (rng.below(3)) {
    case 0: guard = "if (" + n + " > " + cap + ") " + n + " = " + cap + ";"; break;
    case 1: guard = "if (" + n + " >= " + cap + ") return NULL;"; break;
    default: guard = "if (" + n + " > sizeof(" + buf + ")) " + n + " = " + cap + " - 1;"; break;
  }
  const std::size_t g = l.size();
  l.push_back("  " + guard);
  l.push_back(rng.bernoulli(0.5) ? "  memcpy(" + buf + ", " + src + ", " + n + ");"
                                 : "  strncpy(" + buf + ", " + src + ", " + n + ");");
  fillers(rng, l, 0, 3);
  l.push_back("  return " + buf + ";");
  l.push_back("}");
  return {l, g};
}

std::pair<std::vector<std::string>, std::size_t> auth_function(Rng& rng) {
  const std::string user = pick(rng, std::array<const char*, 3>{"user", "name", "account"});
  const std::string path = pick(rng, std::array<const char*, 3>{"path", "file_name", "target"});
  std::vector<std::string> l;
  l.push_back("int " + pick(rng, kFuncNames) + "(const char *" + user + ", const char *" + path + ") {");
  fillers(rng, l, 0, 3);
  std::string guard;
  switch (rng.below(3)) {
    case 0: guard = "if (getuid() != 0) return -1;"; break;
    case 1: guard = "if (strcmp(" + user + ", \"admin\") != 0) return -1;"; break;
    default: guard = "if (access(" + path + ", W_OK) != 0) return -1;"; break;
  }
  const std::size_t g = l.size();
  l.push_back("  " + guard);
  if (rng.bernoulli(0.5)) {
    l.push_back("  setuid(0);");
    l.push_back("  int fd = open(" + path + ", O_RDWR);");
    l.push_back("  write(fd, " + user + ", strlen(" + user + "));");
    l.push_back("  close(fd);");
  } else {
    l.push_back("  FILE *f = fopen(" + path + ", \"w\");");
    l.push_back("  fprintf(f, \"%s\\n\", " + user + ");");
    l.push_back("  fclose(f);");
  }
  fillers(rng, l, 0, 3);
  l.push_back("  return 0;");
  l.push_back("}");
  return {l, g};
}

std::string join_lines(const std::vector<std::string>& lines, std::size_t skip) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i == skip) continue;
    out += lines[i];
    out += '\n';
  }
  return out;
}

std::string cwe_of(Family f) {
  switch (f) {
    case Family::bounds: return "CWE-125";
    case Family::copy: return "CWE-787";
    default: return "CWE-285";
  }
}

}  // namespace

std::string family_name(Family f) {
  switch (f) {
    case Family::bounds: return "bounds";
    case Family::copy: return "copy";
    default: return "auth";
  }
}

SynthPair generate_pair(Family f, Rng& rng, const std::string& id) {
  auto [lines, guard] = f == Family::bounds ? bounds_function(rng)
                        : f == Family::copy ? copy_function(rng)
                                            : auth_function(rng);
  SynthPair p;
  p.guard = lines[guard].substr(2);
  p.benign = {join_lines(lines, lines.size()), 0, cwe_of(f), id};
  p.vulnerable = {join_lines(lines, guard), 1, cwe_of(f), id};
  return p;
}

std::vector<code::RawFunction> generate_family(Family f, std::size_t n, Rng& rng, const std::string& id_prefix) {
  std::vector<code::RawFunction> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto p = generate_pair(f, rng, id_prefix + std::to_string(i));
    out.push_back(i % 2 == 0 ? std::move(p.benign) : std::move(p.vulnerable));
  }
  return out;
}

SynthCorpus generate_synthetic(const SynthOptions& o) {
  SynthCorpus c;
  Rng a(derive_seed(o.seed, "synth.bounds"));
  Rng b(derive_seed(o.seed, "synth.copy"));
  Rng x(derive_seed(o.seed, "synth.auth"));
  auto append = [](std::vector<code::RawFunction>& dst, std::vector<code::RawFunction> src) {
    for (auto& f : src) dst.push_back(std::move(f));
  };
  append(c.d_in, generate_family(Family::bounds, o.train_per_family, a, "bounds-"));
  append(c.d_in, generate_family(Family::copy, o.train_per_family, b, "copy-"));
  append(c.id_test, generate_family(Family::bounds, o.test_per_family, a, "bounds-test-"));
  append(c.id_test, generate_family(Family::copy, o.test_per_family, b, "copy-test-"));
  append(c.ood_test, generate_family(Family::auth, o.ood, x, "auth-"));
  return c;
}

void write_synthetic(const SynthCorpus& c, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path d(dir);
  write_dataset((d / "d_in.jsonl").string(), c.d_in);
  write_dataset((d / "id_test.jsonl").string(), c.id_test);
  write_dataset((d / "ood_test.jsonl").string(), c.ood_test);
}

}  // namespace leo::pipeline
