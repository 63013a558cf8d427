#include "stv/ga.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "stv/errors.hpp"
#include "stv/metrics.hpp"
#include "stv/params_io.hpp"

namespace stv {

const std::vector<std::string>& default_free_parameters() {
  static const std::vector<std::string> names = {
      "f_max", "k_t", "c_ref", "k_b", "inertia_z", "c_alpha_f",
      "c_alpha_r", "f_max_f", "f_max_r", "r1", "r2"};
  return names;
}

std::vector<ParamSpec> make_param_specs(const VehicleParams& params,
                                        const std::vector<std::string>& free_names) {
  std::vector<ParamSpec> specs;
  for (const std::string& name : param_names()) {
    ParamSpec s;
    s.name = name;
    s.nominal = param_field(params, name);
    s.free = std::find(free_names.begin(), free_names.end(), name) != free_names.end();
    if (s.free && s.nominal == 0.0) {
      throw std::invalid_argument("make_param_specs: cannot scale bounds for zero nominal " +
                                  name);
    }
    const double a = 0.2 * s.nominal, b = 5.0 * s.nominal;
    s.lo = std::min(a, b);
    s.hi = std::max(a, b);
    specs.push_back(s);
  }
  for (const std::string& name : free_names) {
    param_field(params, name);  // throws on unknown names
  }
  return specs;
}

VehicleParams apply_genome(const VehicleParams& base, const std::vector<ParamSpec>& specs,
                           const std::vector<double>& genome) {
  VehicleParams p = base;
  std::size_t g = 0;
  for (const ParamSpec& s : specs) {
    if (!s.free) continue;
    if (g >= genome.size()) throw std::invalid_argument("apply_genome: genome too short");
    param_field(p, s.name) = genome[g++];
  }
  if (g != genome.size()) throw std::invalid_argument("apply_genome: genome too long");
  return p;
}

namespace {

// Precomputed one-step training pair: start state, input, measured next velocity.
struct StepPair {
  NeState x0;
  DriverInput u;
  BodyVelocity target;
};

std::vector<StepPair> assemble_pairs(const std::vector<Trajectory>& data) {
  std::vector<StepPair> pairs;
  for (const Trajectory& traj : data) {
    traj.validate();
    if (!traj.has_kin()) {
      throw std::invalid_argument("ga_fitness: trajectories need a steering-angle label");
    }
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
      if (traj.is_flagged(k) || traj.is_flagged(k + 1)) continue;
      pairs.push_back({{traj.vel[k], traj.kin[k].delta}, traj.input[k], traj.vel[k + 1]});
    }
  }
  if (pairs.empty()) throw std::invalid_argument("ga_fitness: no usable training pairs");
  return pairs;
}

double fitness_on_pairs(const VehicleParams& candidate, const std::vector<StepPair>& pairs,
                        const Eigen::Vector3d& w) {
  double acc = 0.0;
  for (const StepPair& pair : pairs) {
    NeState next;
    try {
      next = ne_step(pair.x0, pair.u, candidate);
    } catch (const NumericError&) {
      return std::numeric_limits<double>::infinity();
    }
    const double ex = w[0] * (next.v.vx - pair.target.vx);
    const double ey = w[1] * (next.v.vy - pair.target.vy);
    const double ew = w[2] * (next.v.omega - pair.target.omega);
    acc += ex * ex + ey * ey + ew * ew;
  }
  if (!std::isfinite(acc)) return std::numeric_limits<double>::infinity();
  return acc / (3.0 * static_cast<double>(pairs.size()));
}

void evaluate_population(const VehicleParams& base, const std::vector<ParamSpec>& specs,
                         const std::vector<std::vector<double>>& pop,
                         const std::vector<StepPair>& pairs, const Eigen::Vector3d& w,
                         std::vector<double>& fitness) {
  fitness.assign(pop.size(), 0.0);
  const unsigned hw = std::thread::hardware_concurrency();
  const unsigned workers = std::min<unsigned>(hw == 0 ? 1 : hw, pop.size());
  auto eval_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      fitness[i] = fitness_on_pairs(apply_genome(base, specs, pop[i]), pairs, w);
    }
  };
  if (workers <= 1) {
    eval_range(0, pop.size());
  } else {
    std::vector<std::thread> threads;
    const std::size_t chunk = (pop.size() + workers - 1) / workers;
    for (unsigned t = 0; t < workers; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(pop.size(), begin + chunk);
      if (begin < end) threads.emplace_back(eval_range, begin, end);
    }
    for (std::thread& t : threads) t.join();
  }
  // Penalize failed integrations relative to the survivors.
  double worst = 0.0;
  bool any_finite = false;
  for (double f : fitness) {
    if (std::isfinite(f)) {
      worst = std::max(worst, f);
      any_finite = true;
    }
  }
  const double penalty = any_finite ? 10.0 * std::max(worst, 1e-12) : 1e30;
  for (double& f : fitness) {
    if (!std::isfinite(f)) f = penalty;
  }
}

}  // namespace

double ga_fitness(const VehicleParams& candidate, const std::vector<Trajectory>& data,
                  const Eigen::Vector3d& w) {
  if (!(w.array() > 0.0).all() || !w.allFinite()) {
    throw std::invalid_argument("ga_fitness: weights must be positive and finite");
  }
  return fitness_on_pairs(candidate, assemble_pairs(data), w);
}

GaResult ga_run(const VehicleParams& base, const std::vector<ParamSpec>& specs,
                const std::vector<Trajectory>& data, const GaConfig& cfg,
                const std::function<void(int, double)>& per_generation) {
  if (cfg.population < 2) throw std::invalid_argument("ga_run: population must be >= 2");
  if (cfg.generations < 0) throw std::invalid_argument("ga_run: generations must be >= 0");
  if (cfg.elite < 0 || cfg.elite >= cfg.population) {
    throw std::invalid_argument("ga_run: elite count out of range");
  }
  std::vector<const ParamSpec*> free_specs;
  for (const ParamSpec& s : specs) {
    if (s.free) free_specs.push_back(&s);
  }
  if (free_specs.empty()) throw std::invalid_argument("ga_run: no free parameters");

  const std::vector<StepPair> pairs = assemble_pairs(data);
  Eigen::MatrixXd targets(3, static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    targets.col(static_cast<Eigen::Index>(i)) << pairs[i].target.vx, pairs[i].target.vy,
        pairs[i].target.omega;
  }
  const Eigen::Vector3d w = inverse_std_weights(targets);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const std::size_t dim = free_specs.size();
  std::vector<std::vector<double>> pop(cfg.population, std::vector<double>(dim));
  for (auto& genome : pop) {
    for (std::size_t g = 0; g < dim; ++g) {
      genome[g] = free_specs[g]->lo + unit(rng) * (free_specs[g]->hi - free_specs[g]->lo);
    }
  }

  std::vector<double> fitness;
  GaResult result;
  auto tournament = [&](const std::vector<double>& fit) {
    std::uniform_int_distribution<int> pick(0, cfg.population - 1);
    int best = pick(rng);
    for (int i = 1; i < cfg.tournament; ++i) {
      const int c = pick(rng);
      if (fit[c] < fit[best] || (fit[c] == fit[best] && c < best)) best = c;
    }
    return best;
  };

  for (int gen = 0; gen <= cfg.generations; ++gen) {
    evaluate_population(base, specs, pop, pairs, w, fitness);
    std::vector<int> order(pop.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fitness[a] < fitness[b]; });
    const double best = fitness[order[0]];
    if (result.best_history.empty() || best < result.best_fitness ||
        result.best_genome.empty()) {
      result.best_fitness = best;
      result.best_genome = pop[order[0]];
    }
    result.best_history.push_back(result.best_fitness);
    if (per_generation) per_generation(gen, result.best_fitness);
    if (gen == cfg.generations) break;

    std::vector<std::vector<double>> next;
    next.reserve(pop.size());
    for (int e = 0; e < cfg.elite; ++e) next.push_back(pop[order[e]]);
    while (next.size() < pop.size()) {
      const std::vector<double>& pa = pop[tournament(fitness)];
      const std::vector<double>& pb = pop[tournament(fitness)];
      std::vector<double> child(dim);
      const bool crossover = unit(rng) < cfg.crossover_rate;
      for (std::size_t g = 0; g < dim; ++g) {
        if (crossover) {
          const double lo = std::min(pa[g], pb[g]), hi = std::max(pa[g], pb[g]);
          const double span = hi - lo;
          const double a = lo - cfg.blx_alpha * span;
          const double b = hi + cfg.blx_alpha * span;
          child[g] = a + unit(rng) * (b - a);
        } else {
          child[g] = pa[g];
        }
        if (unit(rng) < cfg.mutation_rate) {
          child[g] += gauss(rng) * cfg.mutation_scale * (free_specs[g]->hi - free_specs[g]->lo);
        }
        child[g] = std::clamp(child[g], free_specs[g]->lo, free_specs[g]->hi);
      }
      next.push_back(std::move(child));
    }
    pop = std::move(next);
  }

  result.best_params = apply_genome(base, specs, result.best_genome);
  return result;
}

}  // namespace stv
