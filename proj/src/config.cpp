#include "rockgraph/config.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

#include "rockgraph/errors.hpp"

namespace rockgraph {

MineralConfig load_mineral(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open mineral config " + path.string());
  MineralConfig cfg;
  try {
    const auto j = nlohmann::json::parse(in);
    cfg.name = j.at("name").get<std::string>();
    cfg.moduli = {j.at("k_gpa").get<double>(), j.at("mu_gpa").get<double>()};
    cfg.source = j.value("source", "");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed mineral config " + path.string() + ": " + e.what());
  }
  const auto [k, mu] = cfg.moduli;
  if (!(std::isfinite(k) && std::isfinite(mu) && k > 0.0 && mu > 0.0)) {
    throw InvalidArgument("mineral moduli must be positive and finite");
  }
  return cfg;
}

}  // namespace rockgraph
