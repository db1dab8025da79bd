#include "scorecusum/chart.hpp"
#include "scorecusum/errors.hpp"
#include "scorecusum/models.hpp"
#include "scorecusum/rng.hpp"

#include <doctest.h>

#include "helpers.hpp"

#include <algorithm>
#include <cmath>

using namespace scusum;
using testing::vec;

namespace {

// Max over all (t', t = n) of the L1 norm of s_t' + ... + s_n, summed from scratch.
double brute_force(const std::vector<Vec>& s, Norm norm) {
  double best = 0.0;
  for (std::size_t a = 0; a < s.size(); ++a) {
    Vec sum = Vec::Zero(s[0].size());
    for (std::size_t i = a; i < s.size(); ++i) sum += s[i];
    best = std::max(best, vector_norm(sum, norm));
  }
  return best;
}

}  // namespace

TEST_CASE("append builds running sums") {
  ScorePrefix p;
  p = append_score(p, vec({1, -1}));
  REQUIRE(p.count() == 1);
  CHECK(p.prefix_sums()[0] == vec({1, -1}));
  p = append_score(p, vec({2, 0}));
  REQUIRE(p.count() == 2);
  CHECK(p.prefix_sums()[0] == vec({1, -1}));
  CHECK(p.prefix_sums()[1] == vec({3, -1}));
}

TEST_CASE("1000 appends agree with direct summation") {
  Engine eng = make_engine(2, {1});
  ScorePrefix p;
  Vec direct = Vec::Zero(3);
  for (int i = 0; i < 1000; ++i) {
    const Vec s = vec({uniform(eng, -5, 5), uniform(eng, -5, 5), uniform(eng, -5, 5)});
    direct += s;
    p.append(s);
  }
  CHECK((p.last() - direct).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("cusum_stat small cases") {
  ScorePrefix p;
  for (double s : {1.0, -2.0, 3.0}) p.append(vec({s}));
  CHECK(cusum_stat(p) == 3.0);
  ScorePrefix z;
  for (int i = 0; i < 5; ++i) z.append(Vec::Zero(2));
  CHECK(cusum_stat(z) == 0.0);
  CHECK_THROWS_AS(cusum_stat(ScorePrefix{}), Error);
}

TEST_CASE("cusum_stat equals brute force on random sequences") {
  Engine eng = make_engine(4, {2});
  for (int len : {1, 2, 17, 200, 500}) {
    std::vector<Vec> s;
    ScorePrefix p;
    for (int i = 0; i < len; ++i) {
      // Dyadic values keep every partial sum exact.
      Vec v(3);
      for (Index k = 0; k < 3; ++k) v[k] = std::floor(uniform(eng, -64, 64)) / 8.0;
      s.push_back(v);
      p.append(v);
    }
    CHECK(cusum_stat(p, Norm::L1) == brute_force(s, Norm::L1));
    CHECK(cusum_stat(p, Norm::L2) == doctest::Approx(brute_force(s, Norm::L2)).epsilon(1e-12));
    CHECK(cusum_stat(p) >= vector_norm(s.back(), Norm::L1));
  }
}

TEST_CASE("plugin and known scores delegate to score_delta") {
  const Observation obs{vec({1.0}), 1, 5};
  MleState prev;
  prev.theta_hat = vec({0.0});
  prev.max_index = 4;
  CHECK(plugin_score(obs, prev, ShiftKind::LogitShift)[0] == 0.5);
  CHECK(plugin_score(obs, prev, ShiftKind::RiskShift)[0] == 2.0);
  CHECK(known_score(obs, vec({0.0}), ShiftKind::LogitShift)[0] == 0.5);
  CHECK(known_score(obs, vec({0.0}), ShiftKind::RiskShift)[0] == 2.0);

  const Observation o2{vec({0.3, -1.2, 1.0}), 0, 9};
  MleState p2;
  p2.theta_hat = vec({0.5, 0.1, -0.2});
  p2.max_index = 8;
  for (ShiftKind k : {ShiftKind::LogitShift, ShiftKind::RiskShift}) {
    CHECK(plugin_score(o2, p2, k) == score_delta(p2.theta_hat, o2.z, o2.y, k));
    CHECK(known_score(o2, p2.theta_hat, k) == score_delta(p2.theta_hat, o2.z, o2.y, k));
  }
}

TEST_CASE("plugin_score refuses an estimate that has seen the scored observation") {
  const Observation obs{vec({1.0}), 1, 5};
  MleState prev;
  prev.theta_hat = vec({0.0});
  prev.max_index = 5;
  CHECK_THROWS_AS(plugin_score(obs, prev, ShiftKind::LogitShift), Error);
}
