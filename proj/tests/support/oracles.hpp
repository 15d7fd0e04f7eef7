// SPDX-License-Identifier: Apache-2.0
// High-precision reference implementations for closed-form statistics.
#pragma once

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <map>
#include <string>
#include <vector>

namespace ticl::testing {

using Big = boost::multiprecision::cpp_bin_float_50;

struct OracleScore {
  Big delta;
  Big z;
};

// Counts space-separated n-grams of whitespace tokens and applies the
// log-odds formula with a uniform prior in 50-digit arithmetic.
inline std::map<std::string, OracleScore> monroe_oracle(const std::vector<std::string>& a, const std::vector<std::string>& b,
                                                 double alpha_d, int min_n, int max_n) {
  auto count = [&](const std::vector<std::string>& docs, std::map<std::string, long>& out) {
    long total = 0;
    for (const auto& d : docs) {
      std::vector<std::string> toks;
      std::string cur;
      for (char c : d + " ") {
        if (c == ' ') {
          if (!cur.empty()) toks.push_back(cur);
          cur.clear();
        } else {
          cur += c;
        }
      }
      for (int n = min_n; n <= max_n; ++n) {
        for (std::size_t i = 0; i + n <= toks.size(); ++i) {
          std::string g = toks[i];
          for (int k = 1; k < n; ++k) g += " " + toks[i + k];
          ++out[g];
          ++total;
        }
      }
    }
    return total;
  };
  std::map<std::string, long> ca, cb;
  const long na = count(a, ca), nb = count(b, cb);
  std::map<std::string, OracleScore> res;
  std::map<std::string, int> vocab;
  for (auto& [g, _] : ca) vocab[g] = 1;
  for (auto& [g, _] : cb) vocab[g] = 1;
  const Big alpha = Big(alpha_d);
  const Big alpha0 = alpha * Big(static_cast<long>(vocab.size()));
  for (auto& [g, _] : vocab) {
    const Big ya = ca.count(g) ? Big(ca[g]) : Big(0);
    const Big yb = cb.count(g) ? Big(cb[g]) : Big(0);
    const Big la = log((ya + alpha) / (Big(na) + alpha0 - ya - alpha));
    const Big lb = log((yb + alpha) / (Big(nb) + alpha0 - yb - alpha));
    const Big delta = la - lb;
    const Big var = 1 / (ya + alpha) + 1 / (yb + alpha);
    res[g] = {delta, delta / sqrt(var)};
  }
  return res;
}


// Chi-squared test of independence on the 2x2 win/loss table; equals the
// two-sided p-value of the pooled two-proportion z-test.
inline double chi_square_oracle(long wa, long na, long wb, long nb) {
  const double a = wa, b = na - wa, c = wb, d = nb - wb;
  const double n = a + b + c + d;
  const double r1 = a + b, r2 = c + d, c1 = a + c, c2 = b + d;
  if (c1 == 0 || c2 == 0) return 1.0;
  const double chi2 = n * (a * d - b * c) * (a * d - b * c) / (r1 * r2 * c1 * c2);
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(1.0), chi2));
}

}  // namespace ticl::testing
