#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "leo/normalizer.hpp"

namespace leo::pipeline {

enum class Role { unassigned, train, val, test_id, test_ood };

struct DatasetRecord {
  code::RawFunction fn;
  Role role = Role::unassigned;
};

/// One JSON object per line: {"code": str, "label": 0|1, "cwe"?: str, "id"?: str|int}.
/// Blank lines are skipped; a missing id becomes "line<N>".
std::vector<DatasetRecord> parse_dataset(std::istream& in, const std::string& source_name);
std::vector<DatasetRecord> load_dataset(const std::string& path);

std::string dataset_line(const code::RawFunction& fn);
void write_dataset(const std::string& path, std::span<const code::RawFunction> fns);

struct Split {
  std::vector<DatasetRecord> train;
  std::vector<DatasetRecord> val;
};

/// Records are ordered by id, shuffled with the seed, and the first
/// max(1, round(val_fraction * n)) become validation. Needs at least 5 records.
Split split_dataset(std::span<const DatasetRecord> records, std::uint64_t seed, double val_fraction = 0.2);

/// normalize_source over every record, fanned out over `threads` workers;
/// results keep the input order.
std::vector<code::NormalizedFunction> normalize_all(std::span<const DatasetRecord> records, unsigned threads = 0);

}  // namespace leo::pipeline
