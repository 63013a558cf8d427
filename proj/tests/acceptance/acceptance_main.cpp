// Acceptance gate for the toolkit: eight end-to-end checks, one PASS/FAIL
// line each. Exit code is the number of failed checks. Tolerances and sizes
// are pinned as constants next to each check.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stv/actuators.hpp"
#include "stv/datagen.hpp"
#include "stv/ekf.hpp"
#include "stv/errors.hpp"
#include "stv/evaluate.hpp"
#include "stv/frames.hpp"
#include "stv/ga.hpp"
#include "stv/kinematic.hpp"
#include "stv/library.hpp"
#include "stv/metrics.hpp"
#include "stv/mlp.hpp"
#include "stv/models.hpp"
#include "stv/newton_euler.hpp"
#include "stv/params_io.hpp"
#include "stv/sindy.hpp"
#include "stv/trajectory.hpp"
#include "stv/types.hpp"

#include "../test_util.hpp"

namespace {

using namespace stv;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// 1. Sparse regression round trip: data generated by the shipped reference
//    model must yield back its exact support and coefficients.

constexpr int kSindySamples = 100000;
constexpr double kSindyLabelNoise = 1e-3;
constexpr double kSindyThreshold = 1e-3;    // on scaled coefficients
constexpr double kSindyNoisyRelTol = 0.05;  // per nonzero coefficient
constexpr double kSindyCleanAbsTol = 1e-8;
constexpr double kSindyTimeLimit = 60.0;  // seconds, both fits together

using Support = std::map<std::pair<int, int>, double>;

Support support_of(const SparseModel& m) {
  Support s;
  for (const auto& [term, coeff] : m.vf) s[{0, static_cast<int>(term)}] = coeff;
  for (const auto& [term, coeff] : m.af) s[{1, static_cast<int>(term)}] = coeff;
  for (const auto& [term, coeff] : m.ar) s[{2, static_cast<int>(term)}] = coeff;
  return s;
}

Outcome criterion_sindy_roundtrip() {
  const VehicleParams p;
  const SparseTransitionModel model(reference_model());

  std::mt19937_64 rng(101);
  // braking segments are essential: the brake regressors vanish identically
  // on throttle-only data and their coefficients would be unidentifiable
  std::uniform_real_distribution<double> us_d(-1.5, 1.5), um_d(-0.4, 0.9);
  std::vector<DriverInput> inputs(kSindySamples);
  double us = 0.0, um = 0.5;
  for (int k = 0; k < kSindySamples; ++k) {
    if (k % 7 == 0) us = us_d(rng);
    if (k % 11 == 0) um = um_d(rng);
    inputs[static_cast<std::size_t>(k)] = DriverInput{us, um};
  }
  std::vector<double> t(inputs.size());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = kSamplePeriod * static_cast<double>(k);
  const Trajectory tr =
      rollout(model, KinematicState{0.5, 0.0, 0.0, 0.0}, Pose{}, t, inputs, p);

  Trajectory noisy = tr;
  std::normal_distribution<double> g(0.0, kSindyLabelNoise);
  std::mt19937_64 noise_rng(202);
  for (KinematicState& k : noisy.kin) {
    k.vf += g(noise_rng);
    k.alpha_f += g(noise_rng);
    k.alpha_r += g(noise_rng);
    k.delta += g(noise_rng);
  }

  const auto t0 = Clock::now();
  const SparseModel clean_fit = fit_ksindy({tr}, kSindyThreshold, p);
  const SparseModel noisy_fit = fit_ksindy({noisy}, kSindyThreshold, p);
  const double secs = seconds_since(t0);

  const Support truth = support_of(reference_model());
  const Support clean = support_of(clean_fit);
  const Support noisy_s = support_of(noisy_fit);

  auto keys_match = [&](const Support& got) {
    if (got.size() != truth.size()) return false;
    for (const auto& [key, coeff] : truth) {
      (void)coeff;
      if (got.find(key) == got.end()) return false;
    }
    return true;
  };

  if (!keys_match(clean) || !keys_match(noisy_s)) {
    return {false, fmt("support mismatch: truth %zu terms, clean fit %zu, noisy fit %zu",
                       truth.size(), clean.size(), noisy_s.size())};
  }
  double clean_abs = 0.0, noisy_rel = 0.0;
  for (const auto& [key, coeff] : truth) {
    clean_abs = std::max(clean_abs, std::abs(clean.at(key) - coeff));
    noisy_rel = std::max(noisy_rel, std::abs(noisy_s.at(key) - coeff) / std::abs(coeff));
  }
  const bool pass = clean_abs <= kSindyCleanAbsTol && noisy_rel <= kSindyNoisyRelTol &&
                    secs < kSindyTimeLimit;
  return {pass, fmt("support exact (%zu terms), clean max abs err %.2e (tol %.0e), "
                    "noisy max rel err %.2f%% (tol %.0f%%), %.1f s (limit %.0f s)",
                    truth.size(), clean_abs, kSindyCleanAbsTol, 100.0 * noisy_rel,
                    100.0 * kSindyNoisyRelTol, secs, kSindyTimeLimit)};
}

// ---------------------------------------------------------------------------
// 2. Parameter search: the genetic algorithm on ten minutes of simulated,
//    filter-labeled driving must come within 2x of the true parameters'
//    one-step error, with a monotone best-so-far curve.

constexpr int kGaMinutes = 10;
constexpr double kGaRatioLimit = 2.0;
constexpr double kGaTimeLimit = 600.0;  // seconds

Outcome criterion_ga_recovery() {
  const VehicleParams p;
  const ExcitationProfile rich = load_profile(test::data_dir() + "/profiles/rich.toml");
  std::vector<DriverInput> inputs = render_profile(rich, rich.seed);
  inputs.resize(static_cast<std::size_t>(kGaMinutes) * 600);
  const Trajectory measured = simulate_vehicle(inputs, p, GenConfig{});
  const Trajectory labeled = smooth_dataset(measured, p, EkfConfig{});

  const Eigen::Vector3d w = velocity_weights({labeled});
  const double truth_fitness = ga_fitness(p, {labeled}, w);

  GaConfig cfg;  // population 150, generations 200
  cfg.seed = 7;
  const auto specs = make_param_specs(p, default_free_parameters());
  const auto t0 = Clock::now();
  const GaResult res = ga_run(p, specs, {labeled}, cfg);
  const double secs = seconds_since(t0);

  bool monotone = true;
  for (std::size_t k = 1; k < res.best_history.size(); ++k) {
    monotone = monotone && res.best_history[k] <= res.best_history[k - 1];
  }
  const double ratio = res.best_fitness / truth_fitness;
  const bool pass = monotone && ratio <= kGaRatioLimit && secs < kGaTimeLimit &&
                    res.best_history.size() == static_cast<std::size_t>(cfg.generations) + 1;
  return {pass, fmt("best/truth one-step error ratio %.3f (limit %.1f), history %s, "
                    "%.0f s (limit %.0f s)",
                    ratio, kGaRatioLimit, monotone ? "monotone" : "NOT monotone", secs,
                    kGaTimeLimit)};
}

// ---------------------------------------------------------------------------
// 3. Integrator fidelity: the production two-substep step must match a fine
//    reference integration on 1000 random states with speed at most 3 m/s.
//
// The lateral slip dynamics carry a pole of c_alpha_r / (m max(|v_rx|, v0)),
// which reaches 245 1/s at standstill; the 0.05 s substep leaves the RK4
// stability region once the slower wheel drops under about 0.44 m/s and only
// recovers 1e-4 accuracy at genuine fixed points. The per-band breakdown in
// the detail line localizes where the tolerance holds and where it cannot.

constexpr int kFidelityStates = 1000;
constexpr double kFidelityTol = 1e-4;  // per channel, one 0.1 s step
constexpr double kFidelitySpeedCap = 3.0;

Outcome criterion_integrator_fidelity() {
  const VehicleParams p;
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> wd(-2.0, 2.0), dd(-2.012, 2.012);
  std::uniform_real_distribution<double> us_d(-2.012, 2.012), um_d(-1.0, 1.0);

  double worst = 0.0;
  int over = 0;
  // worst error with both wheel contact speeds above 0.8 / 1.2 m/s
  double worst_mid = 0.0, worst_fast = 0.0;
  for (int i = 0; i < kFidelityStates; ++i) {
    NeState x;
    do {
      x.v.vx = kFidelitySpeedCap * unit(rng);
      x.v.vy = kFidelitySpeedCap * unit(rng);
    } while (std::hypot(x.v.vx, x.v.vy) > kFidelitySpeedCap);
    x.v.omega = wd(rng);
    x.delta = dd(rng);
    const DriverInput u{us_d(rng), um_d(rng)};
    const NeState coarse = ne_step(x, u, p);
    const NeState fine = test::ne_fine_step(x, u, p);
    const double err = std::max({std::abs(coarse.v.vx - fine.v.vx),
                                 std::abs(coarse.v.vy - fine.v.vy),
                                 std::abs(coarse.v.omega - fine.v.omega),
                                 std::abs(coarse.delta - fine.delta)});
    worst = std::max(worst, err);
    if (err > kFidelityTol) ++over;
    const TireVelocities tv = tire_velocities(x.v, x.delta, p);
    const double wheel = std::min(std::abs(tv.vfx), std::abs(tv.vrx));
    if (wheel >= 0.8) worst_mid = std::max(worst_mid, err);
    if (wheel >= 1.2) worst_fast = std::max(worst_fast, err);
  }
  const bool pass = worst <= kFidelityTol;
  return {pass, fmt("%d states, worst channel error %.2e (tol %.0e), %d over; "
                    "wheel speeds >=0.8: %.2e, >=1.2: %.2e",
                    kFidelityStates, worst, kFidelityTol, over, worst_mid, worst_fast)};
}

// ---------------------------------------------------------------------------
// 4. Network gradients: backpropagation against central finite differences on
//    three randomly drawn architectures.

constexpr int kGradArchitectures = 3;
constexpr double kGradRelTol = 1e-4;

Outcome criterion_mlp_gradients() {
  std::mt19937_64 rng(4242);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  std::string dims;
  for (int arch = 0; arch < kGradArchitectures; ++arch) {
    const int in = 3 + static_cast<int>(rng() % 10);
    const int out = 1 + static_cast<int>(rng() % 4);
    const int layers = 1 + static_cast<int>(rng() % 3);
    std::vector<int> hidden;
    for (int l = 0; l < layers; ++l) hidden.push_back(4 + static_cast<int>(rng() % 21));

    MlpNetwork net(in, hidden, out, rng());
    Eigen::VectorXd im(in), is(in), om(out), os(out);
    for (int i = 0; i < in; ++i) {
      im[i] = 0.2 * g(rng);
      is[i] = 0.5 + std::abs(g(rng));
    }
    for (int i = 0; i < out; ++i) {
      om[i] = 0.2 * g(rng);
      os[i] = 0.5 + std::abs(g(rng));
    }
    net.set_normalization(im, is, om, os);

    Eigen::MatrixXd x(12, in), y(12, out);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    for (int i = 0; i < y.size(); ++i) y.data()[i] = g(rng);

    const double wd = 1e-5;
    const Eigen::VectorXd grad = net.gradient(x, y, wd);
    const Eigen::VectorXd theta = net.parameters();
    const double eps = 1e-6;
    // Central differences resolve the derivative down to roughly
    // u |loss| / eps ~ 1e-9; the absolute floor keeps coordinates whose true
    // gradient sits below that resolution from reading as false mismatches.
    const double atol = 1e-8;
    for (int j = 0; j < theta.size(); ++j) {
      Eigen::VectorXd tp = theta, tm = theta;
      tp[j] += eps;
      tm[j] -= eps;
      MlpNetwork np = net, nm = net;
      np.set_parameters(tp);
      nm.set_parameters(tm);
      const double fd = (np.loss(x, y, wd) - nm.loss(x, y, wd)) / (2.0 * eps);
      const double bound = atol + kGradRelTol * std::max(std::abs(fd), std::abs(grad[j]));
      worst = std::max(worst, std::abs(fd - grad[j]) / bound);
    }
    dims += fmt("%s%dx", arch ? ", " : "", in);
    for (int h : hidden) dims += fmt("%d-", h);
    dims += fmt("%d", out);
  }
  return {worst <= 1.0,
          fmt("architectures %s, worst error/(1e-8 + %.0e rel) ratio %.3f (pass <= 1)",
              dims.c_str(), kGradRelTol, worst)};
}

// ---------------------------------------------------------------------------
// 5. Filter consistency: speed recovery on noiseless poses, covariance
//    symmetry throughout, and innovation whiteness under matched noise.

constexpr double kEkfVfRmsTol = 0.02;      // relative, after the 1 s transient
constexpr double kEkfSymTol = 1e-10;
constexpr double kNisLow = 0.21579528262389785;   // chi-squared(3), 2.5%
constexpr double kNisHigh = 9.348403604496148;    // chi-squared(3), 97.5%
constexpr double kNisCoverageMin = 0.90;
constexpr int kNisSamples = 1500;

Outcome criterion_ekf_consistency() {
  const VehicleParams p;

  // speed recovery on a noiseless gentle weave (0.35 rad command amplitude;
  // the small-slip output map degrades gracefully on harder maneuvers)
  std::vector<DriverInput> u;
  for (int k = 0; k < 600; ++k) {
    u.push_back(DriverInput{0.35 * std::sin(2.0 * std::numbers::pi * 0.08 * 0.1 * k), 0.5});
  }
  const Trajectory truth = test::clean_run(u, p);
  const Trajectory est = smooth_dataset(truth, p, EkfConfig{});
  double err2 = 0.0, ref2 = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 10; k < truth.size(); ++k) {
    const double d = est.kin[k].vf - truth.kin[k].vf;
    err2 += d * d;
    ref2 += truth.kin[k].vf * truth.kin[k].vf;
    ++n;
  }
  const double vf_rms = std::sqrt(err2 / static_cast<double>(n)) /
                        std::sqrt(ref2 / static_cast<double>(n));

  // covariance symmetry on the same data, filter driven by hand
  const EkfConfig cfg;
  EkfState s;
  s.x[0] = truth.pose[0].px;
  s.x[1] = truth.pose[0].py;
  s.x[2] = truth.pose[0].theta;
  s.P = cfg.p0_std.array().square().matrix().asDiagonal();
  double worst_asym = 0.0;
  for (std::size_t k = 1; k < truth.size(); ++k) {
    s = ekf_predict(s, truth.input[k - 1], kSamplePeriod, p, cfg);
    worst_asym = std::max(worst_asym, (s.P - s.P.transpose()).cwiseAbs().maxCoeff());
    s = ekf_update(s, truth.pose[k], cfg);
    worst_asym = std::max(worst_asym, (s.P - s.P.transpose()).cwiseAbs().maxCoeff());
  }

  // innovation whiteness: simulate the filter's own process and measurement
  // model, then count NIS values inside the two-sided 95% band
  EkfConfig ncfg;
  ncfg.r = Eigen::Vector3d::Constant(1e-4);
  ncfg.q = Eigen::Vector3d{0.01, 0.002, 0.002};
  std::mt19937_64 rng(2026);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Matrix<double, kEkfDim, 1> x = Eigen::Matrix<double, kEkfDim, 1>::Zero();
  x[3] = 0.8;
  Trajectory sim;
  const double h = 0.01;
  for (int k = 0; k < kNisSamples; ++k) {
    const DriverInput uk{0.6 * std::sin(0.07 * k), 0.5};
    sim.t.push_back(kSamplePeriod * static_cast<double>(k));
    sim.pose.push_back(Pose{x[0] + std::sqrt(ncfg.r[0]) * g(rng),
                            x[1] + std::sqrt(ncfg.r[1]) * g(rng),
                            wrap_angle(x[2] + std::sqrt(ncfg.r[2]) * g(rng))});
    sim.vel.push_back(BodyVelocity{});
    sim.input.push_back(uk);
    if (k + 1 == kNisSamples) break;
    for (int i = 0; i < 10; ++i) {
      x += h * ekf_process(x, uk, p, ncfg);
      x[3] += std::sqrt(ncfg.q[0] * h) * g(rng);
      x[4] += std::sqrt(ncfg.q[1] * h) * g(rng);
      x[5] += std::sqrt(ncfg.q[2] * h) * g(rng);
      x[6] = std::clamp(x[6], -p.steering.delta_max, p.steering.delta_max);
    }
  }
  std::vector<double> nis;
  smooth_dataset(sim, p, ncfg, &nis);
  std::size_t inside = 0, counted = 0;
  for (std::size_t k = 10; k < nis.size(); ++k) {
    ++counted;
    if (nis[k] >= kNisLow && nis[k] <= kNisHigh) ++inside;
  }
  const double coverage = static_cast<double>(inside) / static_cast<double>(counted);

  const bool pass =
      vf_rms <= kEkfVfRmsTol && worst_asym <= kEkfSymTol && coverage >= kNisCoverageMin;
  return {pass, fmt("speed RMS error %.2f%% (tol %.0f%%), covariance asymmetry %.1e "
                    "(tol %.0e), NIS coverage %.1f%% (min %.0f%%)",
                    100.0 * vf_rms, 100.0 * kEkfVfRmsTol, worst_asym, kEkfSymTol,
                    100.0 * coverage, 100.0 * kNisCoverageMin)};
}

// ---------------------------------------------------------------------------
// 6. Model comparison on a 110 s validation window of simulator data: the
//    corrected sparse model must beat the plain sparse model, the pure network
//    must stay within 1.2x of the corrected one, and the sparse rollout must
//    run at least three times faster than the rigid-body rollout.

constexpr double kValSeconds = 110.0;
constexpr double kValStart = 290.0;  // seconds; a bounce-free stretch
constexpr double kKmlpFactor = 1.2;
constexpr double kTimeFraction = 1.0 / 3.0;
constexpr double kCompareThreshold = 0.02;  // sparse-fit pruning threshold

Outcome criterion_model_comparison() {
  const VehicleParams p;
  const ExcitationProfile rich = load_profile(test::data_dir() + "/profiles/rich.toml");
  const std::vector<DriverInput> inputs = render_profile(rich, rich.seed);
  const Trajectory measured = simulate_vehicle(inputs, p, GenConfig{});
  const Trajectory labeled = smooth_dataset(measured, p, EkfConfig{});
  const Split split = split_dataset(labeled, kValSeconds, kValStart);
  const Eigen::Vector3d w = velocity_weights(split.train);

  const SparseModel sparse = fit_ksindy(split.train, kCompareThreshold, p);

  const SupervisedData kin_data = assemble_kmlp(split.train);
  MlpConfig mlp_cfg;  // 256x128, 400 epochs, patience 60
  MlpNetwork kmlp_net(6, mlp_cfg.hidden, 3, mlp_cfg.seed);
  mlp_train(kmlp_net, kin_data.inputs, kin_data.targets, mlp_cfg);

  const SupervisedData res_data = assemble_residual(split.train, sparse, p);
  MlpConfig res_cfg;
  res_cfg.hidden = {128, 64};
  MlpNetwork res_net(6, res_cfg.hidden, 3, res_cfg.seed);
  mlp_train(res_net, res_data.inputs, res_data.targets, res_cfg);

  const NePredictor ne(p);
  const KinPredictor ksindy(std::make_shared<SparseTransitionModel>(sparse), p);
  const KinPredictor kmlp(std::make_shared<MlpTransitionModel>(kmlp_net), p);
  const KinPredictor hybrid(std::make_shared<ResidualTransitionModel>(sparse, res_net), p);

  EvalConfig cfg;  // start 3, reinit 20, median-of-5 timing
  const auto scores = evaluate_models({&ne, &ksindy, &kmlp, &hybrid}, split.validation, w, cfg);
  const ModelEval& s_ne = scores[0];
  const ModelEval& s_ks = scores[1];
  const ModelEval& s_km = scores[2];
  const ModelEval& s_hy = scores[3];

  for (const ModelEval& m : scores) {
    if (!std::isfinite(m.reinit_nmse)) {
      return {false, fmt("%s diverged during the segmented evaluation", m.name.c_str())};
    }
  }
  const bool order_ok = std::isfinite(s_hy.nmse) && std::isfinite(s_ks.nmse) &&
                        s_hy.nmse < s_ks.nmse;
  const bool kmlp_ok = std::isfinite(s_km.nmse) && s_km.nmse <= kKmlpFactor * s_hy.nmse;
  const bool time_ok = s_ks.time_ms <= kTimeFraction * s_ne.time_ms;
  const bool pass = order_ok && kmlp_ok && time_ok;
  return {pass, fmt("NMSE ne %.4f, ksindy %.4f, ksindy-mlp %.4f, kmlp %.4f "
                    "(hybrid<sparse %s, kmlp<=%.1fx %s); rollout ms ne %.2f vs ksindy %.2f "
                    "(<=1/3 %s)",
                    s_ne.nmse, s_ks.nmse, s_hy.nmse, s_km.nmse, order_ok ? "yes" : "NO",
                    kKmlpFactor, kmlp_ok ? "yes" : "NO", s_ne.time_ms, s_ks.time_ms,
                    time_ok ? "yes" : "NO")};
}

// ---------------------------------------------------------------------------
// 7. Physical properties: tire curve shape, coast-down dissipation, mirror
//    symmetry, standstill invariance, and the servo rate limit under fire.

constexpr int kSteerSteps = 100000;
constexpr double kCoastCap = 2.78;  // m/s; drag opposes motion below this speed

Outcome criterion_physical_properties() {
  const VehicleParams p;
  std::string fails;

  // tire force: odd, bounded, continuous
  {
    const double ca = p.tire.c_alpha_f, fm = p.tire.f_max_f;
    double worst_jump = 0.0;
    double prev = lateral_tire_force(-1.0, ca, fm);
    for (int i = 1; i <= 4000; ++i) {
      const double a = -1.0 + 2.0 * i / 4000.0;
      const double f = lateral_tire_force(a, ca, fm);
      if (std::abs(f + lateral_tire_force(-a, ca, fm)) > 1e-12) fails += " tire-odd";
      if (std::abs(f) > fm + 1e-12) fails += " tire-bound";
      worst_jump = std::max(worst_jump, std::abs(f - prev));
      prev = f;
    }
    // continuity: steps bounded by slope * grid spacing
    if (worst_jump > ca * (2.0 / 4000.0) + 1e-12) fails += " tire-continuity";
  }

  // coast-down: below the drag zero crossing, speed decays monotonically
  for (double v0 : {0.3, 0.8, 1.5, 2.2, 2.7}) {
    NeState x{BodyVelocity{v0, 0.0, 0.0}, 0.0};
    for (int k = 0; k < 300; ++k) {
      const NeState next = ne_step(x, DriverInput{0.0, 0.0}, p);
      if (x.v.vx > 1e-9 && !(next.v.vx < x.v.vx)) fails += " coast";
      if (next.v.vx < -1e-9 || next.v.vx > kCoastCap) fails += " coast-range";
      x = next;
      if (x.v.vx <= 1e-9) break;
    }
  }

  // mirror symmetry of the rigid-body model and the velocity map
  {
    const auto u = test::mixed_inputs(300, 99);
    NeState a{BodyVelocity{0.0, 0.0, 0.0}, 0.0};
    NeState b = a;
    for (const DriverInput& uk : u) {
      a = ne_step(a, uk, p);
      b = ne_step(b, DriverInput{-uk.us, uk.um}, p);
      if (std::abs(a.v.vx - b.v.vx) > 1e-12 || std::abs(a.v.vy + b.v.vy) > 1e-12 ||
          std::abs(a.v.omega + b.v.omega) > 1e-12 || std::abs(a.delta + b.delta) > 1e-12) {
        fails += " ne-mirror";
        break;
      }
    }
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> d(-0.6, 0.6), vf_d(0.0, 2.5);
    for (int i = 0; i < 500; ++i) {
      const KinematicState k{vf_d(rng), d(rng), 0.5 * d(rng), d(rng)};
      const KinematicState mk{k.vf, -k.alpha_f, -k.alpha_r, -k.delta};
      const BodyVelocity v = g_kin(k, p), mv = g_kin(mk, p);
      if (std::abs(v.vx - mv.vx) > 1e-12 || std::abs(v.vy + mv.vy) > 1e-12 ||
          std::abs(v.omega + mv.omega) > 1e-12) {
        fails += " gkin-mirror";
        break;
      }
    }
  }

  // standstill invariance: the parked car generates no forces and every
  // front-speed library term vanishes at rest with the throttle closed
  {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    const NeState parked{BodyVelocity{}, 1.2};
    // the wheels may steer while parked; no force appears until the car moves
    const NeState stay = ne_step(parked, DriverInput{0.7, 0.0}, p);
    if (stay.v.vx != 0.0 || stay.v.vy != 0.0 || stay.v.omega != 0.0) fails += " standstill-ne";
    for (int i = 0; i < 200; ++i) {
      TermArgs a;
      a.vf = 0.0;
      a.af = 0.0;
      a.um = 0.0;
      a.delta = d(rng);
      a.ddelta = d(rng);
      for (int term = 0; term < kVfTermCount; ++term) {
        if (eval_vf_term(static_cast<VfTerm>(term), a) != 0.0) {
          fails += " standstill-library";
          i = 200;
          break;
        }
      }
    }
  }

  // servo: rate limit and travel bound over kSteerSteps random commands
  {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> us_d(-p.steering.delta_max, p.steering.delta_max);
    double delta = 0.0;
    double worst_rate = 0.0;
    for (int k = 0; k < kSteerSteps; ++k) {
      const double next = steer_step(delta, us_d(rng), kSamplePeriod, p.steering);
      worst_rate = std::max(worst_rate, std::abs(next - delta) / kSamplePeriod);
      if (std::abs(next) > p.steering.delta_max + 1e-12) {
        fails += " steer-travel";
        break;
      }
      delta = next;
    }
    if (worst_rate > p.steering.rate_max + 1e-12) fails += " steer-rate";
  }

  if (!fails.empty()) return {false, "violated:" + fails};
  return {true, fmt("tire shape, coast-down below %.2f m/s, mirror symmetry, standstill "
                    "invariance, servo limits over %d steps",
                    kCoastCap, kSteerSteps)};
}

// ---------------------------------------------------------------------------
// 8. Pipeline determinism: two seeded end-to-end runs over the command line
//    produce byte-identical artifacts.

constexpr double kPipelineTimeLimit = 900.0;  // seconds per run

int run_cmd(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  if (rc != 0) std::cerr << "command failed (" << rc << "): " << cmd << "\n";
  return rc;
}

bool run_pipeline(const std::filesystem::path& dir, double* secs) {
  namespace fs = std::filesystem;
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = STVSIM_CLI_PATH;
  const std::string profile = test::data_dir() + "/profiles/rich.toml";
  const std::string cd = "cd " + dir.string() + " && ";
  const auto t0 = Clock::now();
  const std::vector<std::string> steps = {
      cd + cli + " generate --profile " + profile + " --out raw.csv",
      cd + cli + " estimate --in raw.csv --out labeled.csv --nis-out nis.csv",
      cd + cli + " split --data labeled.csv --val-seconds 110 --val-start 290"
           " --train-out train.csv --val-out val.csv",
      cd + cli + " ga-fit --data train.0.csv --data train.1.csv --out fitted_params.txt"
           " --history ga_history.csv --population 40 --generations 40 --seed 11",
      cd + cli + " sindy-fit --data train.0.csv --data train.1.csv --out model.txt"
           " --threshold 0.02",
      cd + cli + " mlp-train --kind kmlp --data train.0.csv --data train.1.csv"
           " --out kmlp.mlp --epochs 60 --seed 1",
      cd + cli + " evaluate --val val.csv --train train.0.csv --train train.1.csv"
           " --ne --ksindy model.txt --kmlp kmlp.mlp --report report.json --no-timing",
  };
  for (const std::string& s : steps) {
    if (run_cmd(s + " > /dev/null") != 0) return false;
  }
  *secs = seconds_since(t0);
  return true;
}

Outcome criterion_pipeline_determinism() {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "stv_acceptance";
  const fs::path a = base / "run_a", b = base / "run_b";
  double secs_a = 0.0, secs_b = 0.0;
  if (!run_pipeline(a, &secs_a) || !run_pipeline(b, &secs_b)) {
    return {false, "a pipeline step exited nonzero"};
  }

  std::vector<std::string> names_a, names_b;
  for (const auto& e : fs::directory_iterator(a)) names_a.push_back(e.path().filename());
  for (const auto& e : fs::directory_iterator(b)) names_b.push_back(e.path().filename());
  std::sort(names_a.begin(), names_a.end());
  std::sort(names_b.begin(), names_b.end());
  if (names_a != names_b) return {false, "the two runs produced different file sets"};

  std::size_t mismatches = 0;
  std::string first_bad;
  for (const std::string& name : names_a) {
    if (test::read_file((a / name).string()) != test::read_file((b / name).string())) {
      ++mismatches;
      if (first_bad.empty()) first_bad = name;
    }
  }
  const double slowest = std::max(secs_a, secs_b);
  const bool pass = mismatches == 0 && slowest < kPipelineTimeLimit;
  std::string detail = fmt("%zu artifacts, %zu mismatched", names_a.size(), mismatches);
  if (!first_bad.empty()) detail += " (first: " + first_bad + ")";
  detail += fmt(", runs %.0f s / %.0f s (limit %.0f s each)", secs_a, secs_b,
                kPipelineTimeLimit);
  fs::remove_all(base);
  return {pass, detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* label;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "sparse model round trip", criterion_sindy_roundtrip},
      {2, "parameter search recovery", criterion_ga_recovery},
      {3, "integrator fidelity", criterion_integrator_fidelity},
      {4, "network gradient check", criterion_mlp_gradients},
      {5, "state estimator consistency", criterion_ekf_consistency},
      {6, "derived-model comparison", criterion_model_comparison},
      {7, "physical property suite", criterion_physical_properties},
      {8, "pipeline determinism", criterion_pipeline_determinism},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    if (!out.pass) ++failures;
    std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.label
              << "): " << out.detail << std::endl;
  }
  if (failures == 0) {
    std::cout << "acceptance: all " << criteria.size() << " criteria passed" << std::endl;
  } else {
    std::cout << "acceptance: " << failures << " of " << criteria.size() << " criteria failed"
              << std::endl;
  }
  return failures;
}
