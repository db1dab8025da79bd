#include "scorecusum/errors.hpp"
#include "scorecusum/estimation.hpp"
#include "scorecusum/experiments.hpp"
#include "scorecusum/learners.hpp"
#include "scorecusum/models.hpp"
#include "scorecusum/rng.hpp"

#include <doctest.h>

#include "helpers.hpp"

#include <cmath>

using namespace scusum;
using testing::vec;

namespace {

TrainingSet draw(const Vec& beta, int n, std::uint64_t seed) {
  Engine eng = make_engine(seed, {1});
  const Index p = beta.size() - 1;
  TrainingSet ts;
  ts.x.resize(n, p);
  ts.y.resize(n);
  for (int i = 0; i < n; ++i) {
    Vec z(p + 1);
    for (Index k = 0; k < p; ++k) z[k] = uniform(eng, -1, 1);
    z[p] = 1.0;
    ts.x.row(i) = z.head(p).transpose();
    ts.y[i] = bernoulli(eng, sigmoid(beta.dot(z)));
  }
  return ts;
}

}  // namespace

TEST_CASE("locked model approaches the generating probabilities") {
  const Vec beta = vec({2, 1, 1, 0.5});
  const LinearLogistic f = train_locked(draw(beta, 50000, 2));
  Engine eng = make_engine(7, {2});
  double sq = 0.0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    const Vec x = vec({uniform(eng, -1, 1), uniform(eng, -1, 1), uniform(eng, -1, 1)});
    Vec z(4);
    z << x, 1.0;
    const double d = f.predict(x) - sigmoid(beta.dot(z));
    sq += d * d;
  }
  CHECK(std::sqrt(sq / n) < 0.03);
  CHECK(LinearLogistic{vec({0, 0, 0})}.predict(vec({0, 0})) == 0.5);
  const TrainingSet ts = draw(beta, 300, 3);
  CHECK(train_locked(ts).beta == train_locked(ts).beta);
}

TEST_CASE("ridge limits") {
  const TrainingSet ts = draw(vec({1.5, -1, 0.2}), 500, 4);
  const LinearLogistic huge = retrain_ridge(ts, 1e10);
  CHECK(huge.predict(vec({0.9, -0.9})) == doctest::Approx(ts.y.mean()).epsilon(1e-6));
  const LinearLogistic zero = retrain_ridge(ts, 0.0);
  CHECK((zero.beta - train_locked(ts).beta).norm() < 1e-6);
}

TEST_CASE("ewaf with identical experts") {
  EwafState s;
  const LinearLogistic e{vec({0.4, -0.2})};
  s.experts = {e, e, e};
  s.weights = Vec::Constant(3, 1.0 / 3);
  const Vec x = vec({0.7});
  CHECK(ewaf_predict(s, x) == doctest::Approx(e.predict(x)).epsilon(1e-14));
  s = ewaf_update(s, x, 1);
  for (Index k = 0; k < 3; ++k) CHECK(s.weights[k] == doctest::Approx(1.0 / 3).epsilon(1e-14));
}

TEST_CASE("ewaf multiplicative rule") {
  EwafState s;
  // Expert 0 predicts 1 with certainty (zero loss on y = 1); the others have log loss 1.
  const double p_one_nat = std::exp(-1.0);
  s.experts = {LinearLogistic{vec({40.0})}, LinearLogistic{vec({logit(p_one_nat)})},
               LinearLogistic{vec({logit(p_one_nat)})}};
  s.weights = Vec::Constant(3, 1.0 / 3);
  s.eta = std::log(2.0);
  const EwafState u = ewaf_update(s, Vec::Zero(0), 1);
  CHECK(u.weights[0] / u.weights[1] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(u.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(u.weights.minCoeff() >= 0.0);
}

TEST_CASE("platt scaling") {
  Engine eng = make_engine(3, {3});
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 0; i < 10000; ++i) {
    const double p = sigmoid(uniform(eng, -3, 3));
    s.push_back(p);
    y.push_back(bernoulli(eng, p));
  }
  const PlattParams pp = platt_fit(s, y);
  CHECK(std::abs(pp.a - 1.0) < 0.1);
  CHECK(std::abs(pp.b) < 0.1);

  std::vector<double> moved;
  const PlattParams sharp{2.5, -0.7};
  for (double v : s) moved.push_back(platt_apply(sharp, v));
  CHECK(auc(moved, y) == auc(s, y));

  const std::vector<double> flat(10, 0.4);
  const std::vector<int> mixed = {0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  CHECK_THROWS_AS(platt_fit(flat, mixed), SeparationError);
}

TEST_CASE("threshold classifier is strict") {
  CHECK(threshold_classify(0.71) == 1);
  CHECK(threshold_classify(0.7) == 0);
  CHECK(threshold_classify(0.0) == 0);
}

TEST_CASE("learner policies") {
  LearnerPolicy bad;
  bad.retrain_every = 0;
  CHECK_THROWS(validate(bad));
  bad = LearnerPolicy{};
  bad.ewaf_eta = 0.0;
  CHECK_THROWS(validate(bad));

  const TrainingSet pre = draw(vec({1, -1, 0}), 200, 5);
  Learner locked(LearnerPolicy{}, pre);
  const Vec x = vec({0.3, 0.2});
  const double before = locked.predict(x);
  for (int i = 0; i < 30; ++i) locked.observe(x, i % 2);
  CHECK(locked.predict(x) == before);
  CHECK(locked.retrain_count() == 0);

  LearnerPolicy ew;
  ew.kind = LearnerKind::Ewaf;
  Learner e(ew, pre);
  for (int i = 0; i < 30; ++i) {
    e.observe(x, i % 2);
    CHECK(e.ewaf().weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.ewaf().weights.minCoeff() >= 0.0);
  }
  CHECK(e.retrain_count() >= 1);
}

TEST_CASE("retrained ridge improves held-out log loss on a stationary stream") {
  // Mean over 50 replicates of held-out loss after 20 vs 400 update observations.
  const Vec beta = vec({1.2, -0.8, 0.6, 0.1});
  double early = 0.0, late = 0.0;
  const TrainingSet test = draw(beta, 2000, 999);
  auto loss = [&](const Learner& l) {
    double s = 0.0;
    for (Index i = 0; i < test.x.rows(); ++i) {
      const double p = std::clamp(l.predict(test.x.row(i).transpose()), 1e-12, 1 - 1e-12);
      s -= test.y[i] > 0.5 ? std::log(p) : std::log(1 - p);
    }
    return s / static_cast<double>(test.x.rows());
  };
  for (int r = 0; r < 50; ++r) {
    LearnerPolicy pol;
    pol.kind = LearnerKind::RidgeRetrain;
    Learner l(pol, draw(beta, 40, 100 + r));
    const TrainingSet stream = draw(beta, 400, 500 + r);
    for (Index i = 0; i < 20; ++i) l.observe(stream.x.row(i).transpose(), static_cast<int>(stream.y[i]));
    early += loss(l);
    for (Index i = 20; i < 400; ++i) l.observe(stream.x.row(i).transpose(), static_cast<int>(stream.y[i]));
    late += loss(l);
  }
  CHECK(late <= early);
}

TEST_CASE("ewaf recalibrates after a change where the locked model cannot") {
  const Vec pre = vec({2, 1, 0.5});
  const Vec post = vec({0.4, 0.2, -0.6});
  const TrainingSet test = draw(post, 4000, 77);
  auto calib = [&](const Learner& l) {
    double p = 0.0;
    for (Index i = 0; i < test.x.rows(); ++i) p += l.predict(test.x.row(i).transpose());
    return std::abs(p / static_cast<double>(test.x.rows()) - test.y.mean());
  };
  double locked_err = 0.0, ewaf_err = 0.0;
  for (int r = 0; r < 20; ++r) {
    const TrainingSet pretrain = draw(pre, 200, 10 + r);
    Learner locked(LearnerPolicy{}, pretrain);
    LearnerPolicy pol;
    pol.kind = LearnerKind::Ewaf;
    Learner ew(pol, pretrain);
    const TrainingSet stream = draw(post, 300, 40 + r);
    for (Index i = 0; i < stream.x.rows(); ++i) ew.observe(stream.x.row(i).transpose(), static_cast<int>(stream.y[i]));
    locked_err += calib(locked);
    ewaf_err += calib(ew);
  }
  CHECK(ewaf_err < locked_err);
}
