#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stv/newton_euler.hpp"
#include "stv/trajectory.hpp"

namespace stv {

// One tunable scalar of the vehicle model. Bounds default to [0.2x, 5x] of the
// nominal value with the sign preserved (the quadratic drag coefficient is
// negative). Fixed parameters carry their nominal value through unchanged.
struct ParamSpec {
  std::string name;
  double nominal = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool free = false;
};

// The parameters the identification treats as free by default: every entry of
// the nominal set that came from fitting rather than direct measurement.
const std::vector<std::string>& default_free_parameters();

// Builds the spec list for `params` with the given subset freed.
std::vector<ParamSpec> make_param_specs(const VehicleParams& params,
                                        const std::vector<std::string>& free_names);

// Applies a genome (one value per free spec, in spec order) onto a parameter set.
VehicleParams apply_genome(const VehicleParams& base, const std::vector<ParamSpec>& specs,
                           const std::vector<double>& genome);

// One-step prediction error of a candidate parameter set over labeled data:
// for every unflagged consecutive pair, integrate one sample step from the
// measured state (v_k, delta_k) and compare the predicted body velocity with
// the measured one under weights `w` (inverse target stds). Returns +inf when
// the integration guard trips: the caller maps that to a penalty.
double ga_fitness(const VehicleParams& candidate, const std::vector<Trajectory>& data,
                  const Eigen::Vector3d& w);

struct GaConfig {
  int population = 150;
  int generations = 200;
  int elite = 2;
  int tournament = 3;
  double crossover_rate = 0.9;
  double blx_alpha = 0.5;
  double mutation_rate = 0.1;      // per-gene probability
  double mutation_scale = 0.05;    // sigma as a fraction of the bound range
  std::uint64_t seed = 1;
};

struct GaResult {
  std::vector<double> best_genome;
  VehicleParams best_params;
  double best_fitness = 0.0;
  // Monotone best fitness: entry 0 is the initial population, then one entry
  // per generation, generations + 1 in total.
  std::vector<double> best_history;
};

// Seeded real-coded GA minimizing ga_fitness. Tournament selection, BLX-alpha
// crossover, Gaussian mutation scaled to the bound range, elitism. Failed
// candidates score ten times the worst finite fitness of their generation.
// Identical seed and data give a bit-identical result.
GaResult ga_run(const VehicleParams& base, const std::vector<ParamSpec>& specs,
                const std::vector<Trajectory>& data, const GaConfig& cfg,
                const std::function<void(int, double)>& per_generation = nullptr);

}  // namespace stv
