#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "leo/autograd.hpp"
#include "leo/config.hpp"
#include "leo/scorer.hpp"
#include "leo/vocabulary.hpp"

namespace leo::pipeline {

inline constexpr std::uint32_t kFormatVersion = 1;

struct ModelArtifact {
  code::Vocabulary vocab;
  TrainConfig config;
  num::ParameterStore params;
  scoring::ClusterStatistics stats;
  double threshold = 0.0;
  std::vector<std::string> log;  // one line per epoch
};

/// "LEO1" | u32 version | sections (4-byte tag, u64 length, payload) | u32 crc32.
/// Parameters are stored as 32-bit floats, everything else at full precision.
std::string serialize_model(const ModelArtifact& a);
ModelArtifact deserialize_model(std::string_view bytes);

void save_model(const ModelArtifact& a, const std::string& path);
ModelArtifact load_model(const std::string& path);

/// Rounds every parameter to the nearest 32-bit float.
void round_to_float(num::ParameterStore& params);

}  // namespace leo::pipeline
