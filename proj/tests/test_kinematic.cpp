#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "stv/errors.hpp"
#include "stv/frames.hpp"
#include "stv/kinematic.hpp"
#include "test_util.hpp"

using namespace stv;

TEST_CASE("g_kin at zero slip and steering is pure forward motion") {
  const VehicleParams p;
  const BodyVelocity v = g_kin(KinematicState{1.3, 0.0, 0.0, 0.0}, p);
  CHECK(v.vx == doctest::Approx(1.3));
  CHECK(v.vy == doctest::Approx(0.0));
  CHECK(v.omega == doctest::Approx(0.0));
}

TEST_CASE("g_kin at ninety-degree front heading matches the wheelbase ratios") {
  const VehicleParams p;
  const BodyVelocity v = g_kin(KinematicState{1.0, 0.0, 0.0, std::numbers::pi / 2.0}, p);
  CHECK(v.vx == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v.vy == doctest::Approx(0.54 / 0.87).epsilon(1e-9));
  CHECK(v.omega == doctest::Approx(1.0 / 0.87).epsilon(1e-9));
  CHECK(v.vy == doctest::Approx(0.6207).epsilon(1e-4));
  CHECK(v.omega == doctest::Approx(1.1494).epsilon(1e-4));
}

TEST_CASE("g_kin handles front headings past ninety degrees by reversing vx") {
  const VehicleParams p;
  const BodyVelocity v = g_kin(KinematicState{1.0, 0.0, 0.0, 2.0}, p);
  CHECK(v.vx < 0.0);
  CHECK(v.vx == doctest::Approx(std::cos(2.0)).epsilon(1e-12));
}

TEST_CASE("g_kin rejects rear headings at the tangent blowup") {
  const VehicleParams p;
  CHECK_THROWS_AS(g_kin(KinematicState{1.0, 0.0, 1.57079632679, 0.0}, p), std::domain_error);
  CHECK_THROWS_AS(g_kin(KinematicState{-1.0, 0.0, 0.0, 0.0}, p), std::domain_error);
  CHECK_THROWS_AS(g_kin(KinematicState{std::nan(""), 0.0, 0.0, 0.0}, p), std::domain_error);
}

TEST_CASE("g_kin is odd under the mirror map") {
  const VehicleParams p;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> sd(-1.2, 1.2), vd(0.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    KinematicState x{vd(rng), sd(rng), sd(rng), sd(rng)};
    KinematicState m{x.vf, -x.alpha_f, -x.alpha_r, -x.delta};
    const BodyVelocity a = g_kin(x, p), b = g_kin(m, p);
    CHECK(b.vx == doctest::Approx(a.vx).epsilon(1e-12));
    CHECK(b.vy == doctest::Approx(-a.vy).epsilon(1e-12));
    CHECK(b.omega == doctest::Approx(-a.omega).epsilon(1e-12));
  }
}

TEST_CASE("the reference model reproduces its hand-evaluated samples") {
  const SparseModel& m = reference_model();
  const std::array<double, 3> at_speed = m.eval(TermArgs{1.0, 0.0, 0.0, 0.0, 0.0, 2.033});
  CHECK(at_speed[0] == doctest::Approx(0.9904).epsilon(1e-12));
  CHECK(at_speed[1] == doctest::Approx(0.0));
  CHECK(at_speed[2] == doctest::Approx(0.0));

  const std::array<double, 3> with_slip = m.eval(TermArgs{1.0, 0.1, 0.0, 0.0, 0.0, 2.033});
  CHECK(with_slip[0] == doctest::Approx(0.9904 - 0.475 * 0.01).epsilon(1e-12));
  CHECK(with_slip[1] == doctest::Approx(0.0777).epsilon(1e-12));
  CHECK(with_slip[2] == doctest::Approx(-0.00485).epsilon(1e-12));
}

TEST_CASE("the v_f library vanishes at standstill with idle input") {
  const SparseModel& m = reference_model();
  const std::array<double, 3> rest = m.eval(TermArgs{0.0, 0.0, 0.0, 0.0, 0.0, 2.033});
  CHECK(rest[0] == doctest::Approx(0.0));
  CHECK(rest[1] == doctest::Approx(0.0));
  CHECK(rest[2] == doctest::Approx(0.0));
}

TEST_CASE("reference_step applies the vf clamp and the exact servo update") {
  const VehicleParams p;
  const KinematicState x{1.0, 0.0, 0.0, 0.0};
  const KinematicState next = reference_step(x, DriverInput{0.0, 0.0}, p);
  CHECK(next.vf == doctest::Approx(0.9904).epsilon(1e-12));
  CHECK(next.delta == doctest::Approx(0.0));

  // heavy braking from low speed cannot push vf negative
  KinematicState slow{0.05, 0.0, 0.0, 0.0};
  for (int k = 0; k < 50; ++k) {
    slow = reference_step(slow, DriverInput{0.0, -1.0}, p);
    CHECK(slow.vf >= 0.0);
  }

  // a large slip angle drives the raw vf prediction negative; the clamp holds
  const KinematicState sliding{0.1, 1.0, 0.0, 0.0};
  const std::array<double, 3> raw =
      reference_model().eval(TermArgs{0.1, 1.0, 0.0, 0.0, 0.0, 2.033});
  CHECK(raw[0] < 0.0);
  CHECK(reference_step(sliding, DriverInput{0.0, 0.0}, p).vf == doctest::Approx(0.0));

  // servo channel matches the standalone update
  const KinematicState steered = reference_step(x, DriverInput{2.0, 0.0}, p);
  CHECK(steered.delta == doctest::Approx(steer_step(0.0, 2.0, 0.1, p.steering)).epsilon(1e-15));
}

TEST_CASE("full-throttle straight driving settles at the model fixed point") {
  const VehicleParams p;
  KinematicState x{1.0, 0.0, 0.0, 0.0};
  const DriverInput u{0.0, 1.0};
  for (int k = 0; k < 400; ++k) x = reference_step(x, u, p);
  CHECK(x.vf == doctest::Approx(1.7853857414613485).epsilon(1e-9));
  const KinematicState again = reference_step(x, u, p);
  CHECK(std::abs(again.vf - x.vf) < 1e-12);
}

TEST_CASE("sparse model text round trip is byte-identical and exact") {
  SparseModel m = reference_model();
  m.threshold = 0.02;
  m.support_frozen = true;
  test::TempFile f1(".model"), f2(".model");
  save_sparse_model(m, f1.path());
  const SparseModel back = load_sparse_model(f1.path());
  save_sparse_model(back, f2.path());
  CHECK(test::read_file(f1.path()) == test::read_file(f2.path()));
  CHECK(back.vf.size() == m.vf.size());
  CHECK(back.af.size() == m.af.size());
  CHECK(back.ar.size() == m.ar.size());
  CHECK(back.c_ref == m.c_ref);
  CHECK(back.threshold == m.threshold);
  CHECK(back.support_frozen == m.support_frozen);
  for (std::size_t i = 0; i < m.vf.size(); ++i) {
    CHECK(back.vf[i].first == m.vf[i].first);
    CHECK(back.vf[i].second == m.vf[i].second);
  }
}

TEST_CASE("sparse model files reject unknown term names") {
  test::TempFile f(".model");
  {
    std::ofstream out(f.path());
    out << "c_ref = 2.033\nvf warp_drive 0.5\n";
  }
  CHECK_THROWS_AS(load_sparse_model(f.path()), std::invalid_argument);
}

TEST_CASE("the shipped reference model file matches the built-in coefficients") {
  const SparseModel file = load_sparse_model(test::data_dir() + "/reference_kinematic.model");
  const SparseModel& code = reference_model();
  REQUIRE(file.vf.size() == code.vf.size());
  REQUIRE(file.af.size() == code.af.size());
  REQUIRE(file.ar.size() == code.ar.size());
  for (std::size_t i = 0; i < code.vf.size(); ++i) {
    CHECK(file.vf[i].first == code.vf[i].first);
    CHECK(file.vf[i].second == code.vf[i].second);
  }
  for (std::size_t i = 0; i < code.af.size(); ++i) {
    CHECK(file.af[i].first == code.af[i].first);
    CHECK(file.af[i].second == code.af[i].second);
  }
  for (std::size_t i = 0; i < code.ar.size(); ++i) {
    CHECK(file.ar[i].first == code.ar[i].first);
    CHECK(file.ar[i].second == code.ar[i].second);
  }
  CHECK(file.c_ref == code.c_ref);
}

TEST_CASE("rollout echoes the initial state and advances the channels") {
  const VehicleParams p;
  SparseTransitionModel model(reference_model());
  std::vector<double> t;
  std::vector<DriverInput> u;
  for (int k = 0; k < 6; ++k) {
    t.push_back(0.1 * k);
    u.push_back(DriverInput{0.0, 1.0});
  }
  const KinematicState x0{1.0, 0.0, 0.0, 0.0};
  const Trajectory tr = rollout(model, x0, Pose{1.0, 2.0, 0.5}, t, u, p);
  REQUIRE(tr.size() == 6);
  CHECK(tr.kin[0].vf == doctest::Approx(1.0));
  CHECK(tr.pose[0].px == doctest::Approx(1.0));
  CHECK(tr.vel[0].vx == doctest::Approx(1.0));
  // channel sequence equals iterated reference steps
  KinematicState x = x0;
  for (std::size_t k = 1; k < tr.size(); ++k) {
    x = reference_step(x, u[k - 1], p);
    CHECK(tr.kin[k].vf == doctest::Approx(x.vf).epsilon(1e-14));
    CHECK(tr.kin[k].alpha_f == doctest::Approx(x.alpha_f).epsilon(1e-14));
    CHECK(tr.kin[k].delta == doctest::Approx(x.delta).epsilon(1e-14));
  }
  // pose advances with the velocity at the departing sample
  const Pose expect = integrate_pose(tr.pose[0], tr.vel[0], 0.1);
  CHECK(tr.pose[1].px == doctest::Approx(expect.px).epsilon(1e-14));
  CHECK(tr.pose[1].py == doctest::Approx(expect.py).epsilon(1e-14));
}

TEST_CASE("a stationary rollout with idle inputs stays at rest") {
  const VehicleParams p;
  SparseTransitionModel model(reference_model());
  std::vector<double> t;
  std::vector<DriverInput> u(20);
  for (int k = 0; k < 20; ++k) t.push_back(0.1 * k);
  const Trajectory tr = rollout(model, KinematicState{}, Pose{}, t, u, p);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    CHECK(tr.vel[k].vx == doctest::Approx(0.0));
    CHECK(tr.vel[k].vy == doctest::Approx(0.0));
    CHECK(tr.pose[k].px == doctest::Approx(0.0));
  }
}

TEST_CASE("rollout surfaces model blowups as numeric errors with the step") {
  const VehicleParams p;
  SparseModel bad;
  bad.vf = {{VfTerm::kVf, 50.0}};  // vf' = 50 vf explodes
  bad.af = {{SlipTerm::kAf, 1.0}};
  bad.ar = {};
  SparseTransitionModel model(bad);
  std::vector<double> t;
  std::vector<DriverInput> u;
  for (int k = 0; k < 400; ++k) {
    t.push_back(0.1 * k);
    u.push_back(DriverInput{0.0, 0.5});
  }
  try {
    rollout(model, KinematicState{1.0, 0.0, 0.0, 0.0}, Pose{}, t, u, p);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.step() > 0);
    CHECK(e.step() < 400);
  }
}

TEST_CASE("reference-model rollouts mirror under mirrored commands") {
  const VehicleParams p;
  SparseTransitionModel model(reference_model());
  std::vector<double> t;
  std::vector<DriverInput> u, mu;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> us_d(-1.8, 1.8), um_d(-0.5, 1.0);
  for (int k = 0; k < 80; ++k) {
    t.push_back(0.1 * k);
    const DriverInput in{us_d(rng), um_d(rng)};
    u.push_back(in);
    mu.push_back(DriverInput{-in.us, in.um});
  }
  const KinematicState x0{0.8, 0.05, -0.02, 0.3};
  const KinematicState m0{0.8, -0.05, 0.02, -0.3};
  const Trajectory a = rollout(model, x0, Pose{}, t, u, p);
  const Trajectory b = rollout(model, m0, Pose{}, t, mu, p);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(b.kin[k].vf == doctest::Approx(a.kin[k].vf).epsilon(1e-12));
    CHECK(b.kin[k].alpha_f == doctest::Approx(-a.kin[k].alpha_f).epsilon(1e-12));
    CHECK(b.kin[k].alpha_r == doctest::Approx(-a.kin[k].alpha_r).epsilon(1e-12));
    CHECK(b.vel[k].vx == doctest::Approx(a.vel[k].vx).epsilon(1e-12));
    CHECK(b.vel[k].vy == doctest::Approx(-a.vel[k].vy).epsilon(1e-12));
    CHECK(b.vel[k].omega == doctest::Approx(-a.vel[k].omega).epsilon(1e-12));
  }
}
