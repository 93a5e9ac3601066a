#include "leo/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <set>
#include <thread>

#include "leo/errors.hpp"
#include "leo/log.hpp"
#include "leo/rng.hpp"

namespace leo::pipeline {

using nlohmann::json;

std::vector<DatasetRecord> parse_dataset(std::istream& in, const std::string& source_name) {
  std::vector<DatasetRecord> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) -> DatasetError {
    return DatasetError(source_name + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw fail(std::string("malformed record: ") + e.what());
    }
    if (!j.is_object()) throw fail("record is not an object");
    if (!j.contains("code") || !j["code"].is_string()) throw fail("missing string field 'code'");
    if (!j.contains("label") || !j["label"].is_number_integer()) throw fail("missing integer field 'label'");
    DatasetRecord r;
    r.fn.source_text = j["code"].get<std::string>();
    if (r.fn.source_text.empty()) throw fail("empty code");
    const auto label = j["label"].get<long long>();
    if (label != 0 && label != 1) throw fail("label must be 0 or 1, got " + std::to_string(label));
    r.fn.label = static_cast<int>(label);
    if (j.contains("cwe") && !j["cwe"].is_null()) {
      if (!j["cwe"].is_string()) throw fail("field 'cwe' must be a string");
      r.fn.cwe = j["cwe"].get<std::string>();
    }
    if (j.contains("id") && !j["id"].is_null()) {
      if (j["id"].is_string()) r.fn.id = j["id"].get<std::string>();
      else if (j["id"].is_number_integer()) r.fn.id = std::to_string(j["id"].get<long long>());
      else throw fail("field 'id' must be a string or integer");
    } else {
      r.fn.id = "line" + std::to_string(line_no);
    }
    if (!seen.insert(r.fn.id).second) throw fail("duplicate id '" + r.fn.id + "'");
    out.push_back(std::move(r));
  }
  if (out.empty()) log::warn(source_name + " contains no records");
  return out;
}

std::vector<DatasetRecord> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open dataset " + path);
  return parse_dataset(in, path);
}

std::string dataset_line(const code::RawFunction& fn) {
  json j;
  j["id"] = fn.id;
  j["code"] = fn.source_text;
  j["label"] = fn.label;
  if (fn.cwe) j["cwe"] = *fn.cwe;
  return j.dump();
}

void write_dataset(const std::string& path, std::span<const code::RawFunction> fns) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write " + path);
  for (const auto& fn : fns) out << dataset_line(fn) << '\n';
  if (!out) throw DatasetError("write failed for " + path);
}

Split split_dataset(std::span<const DatasetRecord> records, std::uint64_t seed, double val_fraction) {
  if (records.size() < 5) {
    throw DatasetError("need at least 5 records to split, got " + std::to_string(records.size()));
  }
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return records[a].fn.id < records[b].fn.id; });
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(order);
  const auto n = records.size();
  const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n))));
  Split s;
  for (std::size_t i = 0; i < n; ++i) {
    DatasetRecord r = records[order[i]];
    r.role = i < n_val ? Role::val : Role::train;
    (i < n_val ? s.val : s.train).push_back(std::move(r));
  }
  return s;
}

std::vector<code::NormalizedFunction> normalize_all(std::span<const DatasetRecord> records, unsigned threads) {
  std::vector<code::NormalizedFunction> out(records.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(records.size(), 1)));
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](unsigned t) {
    try {
      for (std::size_t i = t; i < records.size(); i += threads) {
        try {
          out[i] = code::normalize_source(records[i].fn);
        } catch (const NormalizationError& e) {
          throw DatasetError("record '" + records[i].fn.id + "': " + e.what());
        }
      }
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace leo::pipeline
