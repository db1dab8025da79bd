#include "scorecusum/errors.hpp"
#include "scorecusum/estimation.hpp"
#include "scorecusum/models.hpp"

#include <doctest.h>

#include "helpers.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace scusum;
using testing::vec;

namespace {

std::vector<Observation> intercept_only(std::initializer_list<int> ys) {
  std::vector<Observation> out;
  long t = 1;
  for (int y : ys) out.push_back({vec({1.0}), y, t++});
  return out;
}

}  // namespace

TEST_CASE("intercept-only fits reduce to the empirical log odds") {
  CHECK(fit(intercept_only({1, 1, 1, 0}), vec({0})).theta_hat[0] == doctest::Approx(std::log(3.0)).epsilon(1e-9));
  CHECK(std::abs(fit(intercept_only({1, 0, 1, 0}), vec({0})).theta_hat[0]) < 1e-9);
}

TEST_CASE("MLE recovers the generating parameter at large n") {
  const auto data = testing::logistic_data(vec({2.0, 0.0}), 100000, 1);
  const MleState s = fit(data, Vec::Zero(2));
  CHECK(s.converged);
  CHECK(std::abs(s.theta_hat[0] - 2.0) < 0.05);
  CHECK(std::abs(s.theta_hat[1]) < 0.05);
}

TEST_CASE("estimating equation residual is below 1e-6 after a fit") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto data = testing::logistic_data(vec({0.7, -1.2, 0.3}), 400, seed);
    const MleState s = fit(data, Vec::Zero(3));
    CHECK(estimating_equation(data, s.theta_hat).norm() < 1e-6);
    CHECK(s.theta_hat.allFinite());
  }
}

TEST_CASE("sequential update matches a refit on the concatenated data") {
  const auto all = testing::logistic_data(vec({1.0, 0.5}), 600, 7);
  const std::span<const Observation> d1(all.data(), 250);
  const std::span<const Observation> d2(all.data() + 250, 350);
  const MleState seq = sequential_update(fit(d1, Vec::Zero(2)), d2);
  const MleState full = fit(all, Vec::Zero(2));
  CHECK((seq.theta_hat - full.theta_hat).norm() < 1e-8);
  CHECK(seq.data.size() == all.size());
  CHECK(seq.max_index == 600);
}

TEST_CASE("empty batch leaves the state unchanged") {
  const auto data = testing::logistic_data(vec({1.0, 0.5}), 100, 3);
  const MleState s = fit(data, Vec::Zero(2));
  const MleState u = sequential_update(s, {});
  CHECK(u.theta_hat == s.theta_hat);
  CHECK(u.data.size() == s.data.size());
  CHECK(u.max_index == s.max_index);
}

TEST_CASE("fit is invariant to observation order") {
  auto data = testing::logistic_data(vec({-0.4, 1.1, 0.2}), 500, 11);
  const MleState a = fit(data, Vec::Zero(3));
  std::mt19937 g(5);
  std::shuffle(data.begin(), data.end(), g);
  const MleState b = fit(data, Vec::Zero(3));
  CHECK((a.theta_hat - b.theta_hat).norm() < 1e-8);
}

TEST_CASE("single-class outcomes are a separation error") {
  CHECK_THROWS_AS(fit(intercept_only({1, 1, 1}), vec({0})), SeparationError);
  const MleState s = fit(intercept_only({0, 1}), vec({0}));
  std::vector<Observation> more = {{vec({1.0}), 1, 3}};
  // Still both classes: fine.
  CHECK_NOTHROW(sequential_update(s, more));
}

TEST_CASE("perfectly separable covariate data stays finite and reproduces the split") {
  std::vector<Observation> data;
  for (int i = 0; i < 20; ++i) {
    const double x = -1.0 + 0.1 * i;
    data.push_back({vec({x, 1.0}), x > 0 ? 1 : 0, i + 1});
  }
  const MleState s = fit(data, Vec::Zero(2));
  CHECK(s.theta_hat.allFinite());
  for (const auto& o : data) CHECK((sigmoid(s.theta_hat.dot(o.z)) > 0.5) == (o.y == 1));
}

TEST_CASE("ridge penalty leaves the trailing intercept free when asked") {
  const auto data = testing::logistic_data(vec({1.5, -0.3}), 2000, 9);
  Mat x(static_cast<Index>(data.size()), 2);
  Vec y(static_cast<Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    x.row(static_cast<Index>(i)) = data[i].z.transpose();
    y[static_cast<Index>(i)] = data[i].y;
  }
  NewtonOptions opts;
  opts.ridge = 1e9;
  opts.penalize_last = false;
  const LogisticFit f = fit_logistic(x, y, Vec::Zero(2), opts);
  CHECK(std::abs(f.beta[0]) < 1e-5);
  CHECK(sigmoid(f.beta[1]) == doctest::Approx(y.mean()).epsilon(1e-6));
}
