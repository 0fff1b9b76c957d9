#pragma once

#include <span>

namespace rockgraph {

// Coefficient of determination 1 - SS_res / SS_tot (SS_tot about the mean of
// `truth`). Throws InvalidArgument on length mismatch, empty input or
// constant truth.
double r2(std::span<const double> pred, std::span<const double> truth);

double mse(std::span<const double> pred, std::span<const double> truth);

bool is_constant(std::span<const double> values);

}  // namespace rockgraph
