#pragma once

#include <utility>
#include <vector>

namespace fvortex::oracle {

/// Least-squares slope of log(error) against log(scale). Needs at least three
/// pairs with positive scales and nonnegative errors. Any zero error makes the
/// fit degenerate and the result is +infinity.
double order_fit(const std::vector<std::pair<double, double>>& pairs);

/// True when order_fit returned its degenerate-fit flag.
bool is_degenerate_fit(double p);

}  // namespace fvortex::oracle
