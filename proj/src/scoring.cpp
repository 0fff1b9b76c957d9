#include "rockgraph/scoring.hpp"

#include <algorithm>
#include <numeric>

#include "rockgraph/errors.hpp"

namespace rockgraph {

namespace {

void check_pair(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw InvalidArgument("prediction and truth lengths differ");
  if (truth.empty()) throw InvalidArgument("scoring needs at least one value");
}

}  // namespace

bool is_constant(std::span<const double> values) {
  return std::adjacent_find(values.begin(), values.end(), std::not_equal_to<>()) == values.end();
}

double mse(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  double ss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    ss += d * d;
  }
  return ss / static_cast<double>(pred.size());
}

double r2(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  if (is_constant(truth)) throw InvalidArgument("R^2 is undefined for constant truth values");
  const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ss_res += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  return 1.0 - ss_res / ss_tot;
}

}  // namespace rockgraph
