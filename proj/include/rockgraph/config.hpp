#pragma once

#include <filesystem>
#include <string>

#include "rockgraph/effmed.hpp"

namespace rockgraph {

struct MineralConfig {
  std::string name;
  ElasticModuli moduli;
  std::string source;
};

// JSON object with "name", "k_gpa", "mu_gpa" and an optional "source".
// Throws FormatError on malformed input and InvalidArgument on non-positive
// or non-finite moduli.
MineralConfig load_mineral(const std::filesystem::path& path);

}  // namespace rockgraph
