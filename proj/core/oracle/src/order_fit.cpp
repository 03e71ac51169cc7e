#include "fvortex/oracle/order_fit.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fvortex::oracle {

double order_fit(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 3) throw std::invalid_argument("order_fit needs at least three pairs");
  for (const auto& [s, e] : pairs) {
    if (!(s > 0.0) || !(e >= 0.0)) {
      throw std::invalid_argument("order_fit needs positive scales and nonnegative errors");
    }
  }
  for (const auto& pe : pairs) {
    if (pe.second == 0.0) return std::numeric_limits<double>::infinity();
  }
  double mx = 0.0, my = 0.0;
  for (const auto& [s, e] : pairs) {
    mx += std::log(s);
    my += std::log(e);
  }
  mx /= pairs.size();
  my /= pairs.size();
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [s, e] : pairs) {
    sxy += (std::log(s) - mx) * (std::log(e) - my);
    sxx += (std::log(s) - mx) * (std::log(s) - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("order_fit needs distinct scales");
  return sxy / sxx;
}

bool is_degenerate_fit(double p) { return std::isinf(p) && p > 0.0; }

}  // namespace fvortex::oracle
