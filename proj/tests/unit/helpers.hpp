#pragma once

#include "scorecusum/estimation.hpp"
#include "scorecusum/models.hpp"
#include "scorecusum/rng.hpp"

#include <initializer_list>
#include <vector>

namespace testing {

inline scusum::Vec vec(std::initializer_list<double> xs) {
  scusum::Vec v(static_cast<scusum::Index>(xs.size()));
  scusum::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// Logistic data with z = (x_1..x_{q-1}, 1), x uniform on [-1, 1].
inline std::vector<scusum::Observation> logistic_data(const scusum::Vec& theta, long n, std::uint64_t seed,
                                                      long t0 = 1) {
  auto eng = scusum::make_engine(seed, {42});
  std::vector<scusum::Observation> out;
  out.reserve(static_cast<std::size_t>(n));
  const auto q = theta.size();
  for (long i = 0; i < n; ++i) {
    scusum::Vec z(q);
    for (scusum::Index k = 0; k + 1 < q; ++k) z[k] = scusum::uniform(eng, -1, 1);
    z[q - 1] = 1.0;
    const int y = scusum::bernoulli(eng, scusum::sigmoid(theta.dot(z)));
    out.push_back({z, y, t0 + i});
  }
  return out;
}

}  // namespace testing
