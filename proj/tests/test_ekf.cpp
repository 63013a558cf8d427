#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "stv/datagen.hpp"
#include "stv/ekf.hpp"
#include "stv/frames.hpp"
#include "stv/kinematic.hpp"
#include "test_util.hpp"

using namespace stv;

using Vec7 = Eigen::Matrix<double, kEkfDim, 1>;

TEST_CASE("the relaxation blend rises from near zero to one with speed") {
  CHECK(ekf_gamma(0.0) == doctest::Approx(0.11920292202211757).epsilon(1e-12));
  CHECK(ekf_gamma(0.1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(ekf_gamma(1.0) == doctest::Approx(1.0).epsilon(1e-6));
  double prev = -1.0;
  for (double v = 0.0; v <= 2.0; v += 0.05) {
    CHECK(ekf_gamma(v) > prev);
    prev = ekf_gamma(v);
  }
  // standstill relaxation pole
  const EkfConfig cfg;
  CHECK(cfg.eta * (1.0 - ekf_gamma(0.0)) == doctest::Approx(17.615941559557648).epsilon(1e-9));
}

TEST_CASE("the process model couples pose to the kinematic velocity map") {
  const VehicleParams p;
  const EkfConfig cfg;
  Vec7 x;
  x << 1.0, -2.0, 0.7, 1.2, 0.15, 0.05, 0.1;
  const Vec7 dx = ekf_process(x, DriverInput{0.5, 0.3}, p, cfg);

  KinematicState kin{1.2, 0.15 - 0.1, 0.05, 0.1};
  const BodyVelocity v = g_kin(kin, p);
  const BodyVelocity w = body_to_world(0.7, v);
  CHECK(dx[0] == doctest::Approx(w.vx).epsilon(1e-12));
  CHECK(dx[1] == doctest::Approx(w.vy).epsilon(1e-12));
  CHECK(dx[2] == doctest::Approx(v.omega).epsilon(1e-12));
  CHECK(dx[3] == doctest::Approx(0.0));  // front speed is a random walk
  const double decay = cfg.eta * (1.0 - ekf_gamma(1.2));
  CHECK(dx[4] == doctest::Approx(decay * (0.1 - 0.15)).epsilon(1e-12));
  CHECK(dx[5] == doctest::Approx(-decay * 0.05).epsilon(1e-12));
  CHECK(dx[6] == doctest::Approx(steering_rate(0.1, 0.5, p.steering)).epsilon(1e-12));
}

TEST_CASE("at standstill the tire headings relax toward the steering angle") {
  const VehicleParams p;
  const EkfConfig cfg;
  Vec7 x = Vec7::Zero();
  x[4] = 0.3;   // front heading off the (zero) steering angle
  x[5] = -0.2;
  const Vec7 dx = ekf_process(x, DriverInput{}, p, cfg);
  const double pole = cfg.eta * (1.0 - ekf_gamma(0.0));
  CHECK(dx[4] == doctest::Approx(-pole * 0.3).epsilon(1e-12));
  CHECK(dx[5] == doctest::Approx(pole * 0.2).epsilon(1e-12));
}

TEST_CASE("prediction keeps the covariance symmetric and grows it along Q") {
  const VehicleParams p;
  const EkfConfig cfg;
  EkfState s;
  s.x << 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0;
  s.P = Vec7::Constant(1e-4).asDiagonal();
  const EkfState out = ekf_predict(s, DriverInput{0.0, 0.0}, 0.1, p, cfg);
  CHECK((out.P - out.P.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  // the vf random walk collects exactly q(0) * dt of variance
  CHECK(out.P(3, 3) == doctest::Approx(1e-4 + cfg.q[0] * 0.1).epsilon(1e-9));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.P);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
  CHECK_THROWS_AS(ekf_predict(s, DriverInput{}, -0.1, p, cfg), std::invalid_argument);
}

TEST_CASE("the mean propagation matches an independent RK4 of the process") {
  const VehicleParams p;
  const EkfConfig cfg;
  EkfState s;
  s.x << 0.5, -0.3, 0.4, 0.9, 0.1, -0.05, 0.2;
  s.P = Vec7::Constant(1e-6).asDiagonal();
  const DriverInput u{0.8, 0.5};
  const EkfState out = ekf_predict(s, u, 0.1, p, cfg);

  auto f = [&](const Vec7& x) { return ekf_process(x, u, p, cfg); };
  const double h = 0.1 / cfg.predict_substeps;
  Vec7 expect = s.x;
  for (int sub = 0; sub < cfg.predict_substeps; ++sub) {
    const Vec7 k1 = f(expect);
    const Vec7 k2 = f(expect + 0.5 * h * k1);
    const Vec7 k3 = f(expect + 0.5 * h * k2);
    const Vec7 k4 = f(expect + h * k3);
    expect += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  CHECK((out.x - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("updates wrap the yaw innovation across the branch cut") {
  const EkfConfig cfg;
  EkfState s;
  s.x << 0.0, 0.0, 3.1, 0.0, 0.0, 0.0, 0.0;
  s.P = Vec7::Constant(1e-2).asDiagonal();
  double nis = 0.0;
  const EkfState out = ekf_update(s, Pose{0.0, 0.0, -3.1}, cfg, &nis);
  // the short way around crosses pi: the estimate moves up past 3.1
  CHECK(out.x[2] > 3.1);
  CHECK(out.x[2] < 3.1 + 0.09);
  CHECK(nis > 0.0);

  // measurement equal to the predicted pose: zero innovation, zero NIS
  EkfState t = s;
  t.x[2] = 0.5;
  double nis0 = -1.0;
  const EkfState same = ekf_update(t, Pose{0.0, 0.0, 0.5}, cfg, &nis0);
  CHECK(nis0 == doctest::Approx(0.0));
  CHECK(same.x[2] == doctest::Approx(0.5));
}

TEST_CASE("updates contract the covariance and keep it symmetric") {
  const EkfConfig cfg;
  EkfState s;
  s.x.setZero();
  s.P = Vec7::Constant(0.5).asDiagonal();
  const EkfState out = ekf_update(s, Pose{0.01, -0.02, 0.005}, cfg);
  CHECK((out.P - out.P.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(out.P.trace() < s.P.trace());
  // measured channels collapse toward R, unmeasured channels keep their prior
  CHECK(out.P(0, 0) < 1e-5);
  CHECK(out.P(3, 3) == doctest::Approx(0.5));
}

TEST_CASE("filtering noiseless driving recovers the front wheel speed") {
  const VehicleParams p;
  // gentle weave: slip angles stay small, the kinematic family fits well
  std::vector<DriverInput> u;
  for (int k = 0; k < 300; ++k) {
    u.push_back(DriverInput{0.35 * std::sin(0.2 * std::numbers::pi * 0.1 * k), 0.45});
  }
  const Trajectory truth = test::clean_run(u, p);
  std::vector<double> nis;
  const Trajectory est = smooth_dataset(truth, p, EkfConfig{}, &nis);
  REQUIRE(est.has_kin());
  CHECK(nis.size() == truth.size() - 1);
  CHECK(est.size() == truth.size());

  double err2 = 0.0, ref2 = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 10; k < truth.size(); ++k) {  // skip the 1 s transient
    const double d = est.kin[k].vf - truth.kin[k].vf;
    err2 += d * d;
    ref2 += truth.kin[k].vf * truth.kin[k].vf;
    ++n;
  }
  CHECK(std::sqrt(err2 / n) < 0.02 * std::sqrt(ref2 / n));
  // poses pass through untouched
  CHECK(est.pose[42].px == truth.pose[42].px);
  CHECK(est.pose[42].theta == truth.pose[42].theta);
}

TEST_CASE("covariance stays symmetric through a long predict-update run") {
  const VehicleParams p;
  const EkfConfig cfg;
  std::vector<DriverInput> u;
  for (int k = 0; k < 200; ++k) {
    u.push_back(DriverInput{0.8 * std::sin(0.05 * k), 0.5});
  }
  const Trajectory truth = test::clean_run(u, p);
  EkfState s;
  s.x[0] = truth.pose[0].px;
  s.x[1] = truth.pose[0].py;
  s.x[2] = truth.pose[0].theta;
  s.P = cfg.p0_std.array().square().matrix().asDiagonal();
  for (std::size_t k = 1; k < truth.size(); ++k) {
    s = ekf_predict(s, truth.input[k - 1], kSamplePeriod, p, cfg);
    CHECK((s.P - s.P.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    s = ekf_update(s, truth.pose[k], cfg);
    CHECK((s.P - s.P.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("innovations are white when process and measurement noise match") {
  const VehicleParams p;
  EkfConfig cfg;
  cfg.r = Eigen::Vector3d::Constant(1e-4);  // measurement std 1e-2
  // Keep the tire-heading random walks small enough that beta_r stays far
  // from the tan() pole of the kinematic map over the whole run.
  cfg.q = Eigen::Vector3d{0.02, 0.004, 0.004};

  // Simulate the filter's own process model driven by matched process noise,
  // then measure poses under matched measurement noise. NIS ~ chi-squared(3).
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g(0.0, 1.0);
  const double h = 0.01;
  Vec7 x = Vec7::Zero();
  x[3] = 0.8;
  Trajectory tr;
  std::vector<DriverInput> inputs;
  for (int k = 0; k < 350; ++k) {
    inputs.push_back(DriverInput{0.6 * std::sin(0.07 * k), 0.5});
  }
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    tr.t.push_back(0.1 * static_cast<double>(k));
    tr.pose.push_back(Pose{x[0] + std::sqrt(cfg.r[0]) * g(rng),
                           x[1] + std::sqrt(cfg.r[1]) * g(rng),
                           wrap_angle(x[2] + std::sqrt(cfg.r[2]) * g(rng))});
    KinematicState kin{std::max(x[3], 0.0), x[4] - x[6], x[5], x[6]};
    tr.vel.push_back(g_kin(kin, p));
    tr.input.push_back(inputs[k]);
    if (k + 1 == inputs.size()) break;
    for (int i = 0; i < 10; ++i) {  // Euler-Maruyama substeps over one sample
      const Vec7 dx = ekf_process(x, inputs[k], p, cfg);
      x += h * dx;
      x[3] += std::sqrt(cfg.q[0] * h) * g(rng);
      x[4] += std::sqrt(cfg.q[1] * h) * g(rng);
      x[5] += std::sqrt(cfg.q[2] * h) * g(rng);
      x[6] = std::clamp(x[6], -p.steering.delta_max, p.steering.delta_max);
    }
  }
  tr.validate();

  std::vector<double> nis;
  smooth_dataset(tr, p, cfg, &nis);
  REQUIRE(nis.size() == tr.size() - 1);
  std::size_t inside = 0, counted = 0;
  for (std::size_t k = 10; k < nis.size(); ++k) {  // let the filter settle
    ++counted;
    if (nis[k] >= 0.215795 && nis[k] <= 9.348404) ++inside;
  }
  CHECK(static_cast<double>(inside) / static_cast<double>(counted) >= 0.88);
}
