#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "stv/datagen.hpp"
#include "stv/ekf.hpp"
#include "stv/errors.hpp"
#include "stv/evaluate.hpp"
#include "stv/ga.hpp"
#include "stv/kinematic.hpp"
#include "stv/metrics.hpp"
#include "stv/mlp.hpp"
#include "stv/models.hpp"
#include "stv/params_io.hpp"
#include "stv/sindy.hpp"
#include "stv/trajectory.hpp"

namespace {

using nlohmann::ordered_json;

// Trained-model seeds are decorrelated from data seeds with a fixed offset so
// one --seed value never feeds two RNG streams the same state.
constexpr std::uint64_t kSeedOffset = 0x9e3779b97f4a7c15ULL;

stv::VehicleParams load_params_opt(const std::string& path) {
  if (path.empty()) return stv::VehicleParams{};
  return stv::load_vehicle_params(path);
}

std::vector<stv::Trajectory> load_datasets(const std::vector<std::string>& paths) {
  std::vector<stv::Trajectory> data;
  for (const std::string& p : paths) data.push_back(stv::load_csv(p));
  return data;
}

void emit(bool as_json, const ordered_json& j, const std::string& prose) {
  if (as_json) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << prose;
  }
}

std::string with_piece_suffix(const std::string& path, std::size_t index) {
  const std::size_t slash = path.find_last_of('/');
  const std::size_t dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return path + "." + std::to_string(index);
  }
  return path.substr(0, dot) + "." + std::to_string(index) + path.substr(dot);
}

void add_generate(CLI::App& app) {
  auto* gen = app.add_subcommand("generate", "Simulate a drive over an excitation profile");
  struct GenerateOpts {
    std::string profile, params, out;
    std::uint64_t seed = 0;
    double noise_xy = 1e-3, noise_theta = 1e-3;
    bool no_bounce = false;
    double half_x = 6.0, half_y = 3.5;
    bool json = false;
  };
  auto opt = std::make_shared<GenerateOpts>();
  gen->add_option("--profile", opt->profile, "Excitation profile file")
      ->required()
      ->check(CLI::ExistingFile);
  gen->add_option("--params", opt->params, "Vehicle parameter file (default: nominal)");
  gen->add_option("--out", opt->out, "Output trajectory CSV")->required();
  auto* seed_opt =
      gen->add_option("--seed", opt->seed, "RNG seed (default: the profile's seed)");
  gen->add_option("--noise-xy", opt->noise_xy, "Position measurement noise std [m]");
  gen->add_option("--noise-theta", opt->noise_theta, "Heading measurement noise std [rad]");
  gen->add_flag("--no-bounce", opt->no_bounce, "Unbounded plane instead of the walled arena");
  gen->add_option("--arena-half-x", opt->half_x, "Arena half extent in x [m]");
  gen->add_option("--arena-half-y", opt->half_y, "Arena half extent in y [m]");
  gen->add_flag("--json", opt->json, "Print a JSON summary");
  gen->callback([opt, seed_opt] {
    const stv::VehicleParams p = load_params_opt(opt->params);
    const stv::ExcitationProfile profile = stv::load_profile(opt->profile);
    const std::uint64_t seed = seed_opt->count() > 0 ? opt->seed : profile.seed;
    const std::vector<stv::DriverInput> inputs =
        stv::render_profile(profile, seed, p.steering.delta_max);
    stv::GenConfig cfg;
    cfg.pose_noise_px = opt->noise_xy;
    cfg.pose_noise_py = opt->noise_xy;
    cfg.pose_noise_theta = opt->noise_theta;
    cfg.seed = seed + kSeedOffset;
    cfg.bounce = !opt->no_bounce;
    cfg.half_x = opt->half_x;
    cfg.half_y = opt->half_y;
    const stv::Trajectory traj = stv::simulate_vehicle(inputs, p, cfg);
    stv::save_csv(traj, opt->out);
    ordered_json j{{"out", opt->out},
                   {"samples", traj.size()},
                   {"duration_s", traj.t.back()},
                   {"seed", seed},
                   {"wall_hits", traj.flagged.size()}};
    char buf[200];
    std::snprintf(buf, sizeof(buf), "wrote %zu samples (%.1f s, %zu wall hits) to %s\n",
                  traj.size(), traj.t.back(), traj.flagged.size(), opt->out.c_str());
    emit(opt->json, j, buf);
  });
}

void add_estimate(CLI::App& app) {
  auto* est = app.add_subcommand(
      "estimate", "Recover velocity and slip labels from poses with the EKF");
  struct EstimateOpts {
    std::string in, params, out, nis_out;
    std::vector<double> q, r;
    double eta = 20.0;
    bool json = false;
  };
  auto opt = std::make_shared<EstimateOpts>();
  est->add_option("--in", opt->in, "Input trajectory CSV")
      ->required()
      ->check(CLI::ExistingFile);
  est->add_option("--params", opt->params, "Vehicle parameter file (default: nominal)");
  est->add_option("--out", opt->out, "Output labeled CSV")->required();
  est->add_option("--q", opt->q, "Process-noise intensities: vf beta_f beta_r")->expected(3);
  est->add_option("--r", opt->r, "Measurement variances: px py theta")->expected(3);
  est->add_option("--eta", opt->eta, "Slip relaxation rate [1/s]");
  est->add_option("--nis-out", opt->nis_out, "Optional CSV of per-sample innovation scores");
  est->add_flag("--json", opt->json, "Print a JSON summary");
  est->callback([opt] {
    const stv::VehicleParams p = load_params_opt(opt->params);
    stv::EkfConfig cfg;
    if (!opt->q.empty()) cfg.q = Eigen::Vector3d(opt->q[0], opt->q[1], opt->q[2]);
    if (!opt->r.empty()) cfg.r = Eigen::Vector3d(opt->r[0], opt->r[1], opt->r[2]);
    cfg.eta = opt->eta;
    std::vector<double> nis;
    const stv::Trajectory labeled =
        stv::smooth_dataset(stv::load_csv(opt->in), p, cfg, &nis);
    stv::save_csv(labeled, opt->out);
    double mean_nis = 0.0;
    std::size_t in_band = 0;
    for (double v : nis) {
      mean_nis += v;
      if (v >= 0.215795 && v <= 9.348404) ++in_band;  // chi-square(3) central 95%
    }
    if (!nis.empty()) mean_nis /= static_cast<double>(nis.size());
    if (!opt->nis_out.empty()) {
      std::ofstream out(opt->nis_out);
      if (!out) throw std::runtime_error("cannot write " + opt->nis_out);
      out << "k,nis\n";
      for (std::size_t k = 0; k < nis.size(); ++k) {
        char line[64];
        std::snprintf(line, sizeof(line), "%zu,%.17g\n", k, nis[k]);
        out << line;
      }
    }
    ordered_json j{{"out", opt->out},
                   {"samples", labeled.size()},
                   {"mean_nis", mean_nis},
                   {"nis_in_95_band",
                    nis.empty() ? 0.0
                                : static_cast<double>(in_band) /
                                      static_cast<double>(nis.size())}};
    char buf[160];
    std::snprintf(buf, sizeof(buf), "labeled %zu samples, mean NIS %.3f, %s\n",
                  labeled.size(), mean_nis, opt->out.c_str());
    emit(opt->json, j, buf);
  });
}

void add_ga_fit(CLI::App& app) {
  auto* ga =
      app.add_subcommand("ga-fit", "Fit rigid-body parameters with a genetic algorithm");
  struct GaFitOpts {
    std::vector<std::string> data;
    std::string spec, out, history;
    std::vector<std::string> free;
    stv::GaConfig cfg;
    bool json = false;
  };
  auto opt = std::make_shared<GaFitOpts>();
  ga->add_option("--data", opt->data, "Labeled training CSV (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  ga->add_option("--spec", opt->spec, "Nominal parameter file (default: nominal)");
  ga->add_option("--out", opt->out, "Output fitted parameter file")->required();
  ga->add_option("--free", opt->free, "Parameter names to fit (default: drivetrain and tire set)");
  ga->add_option("--population", opt->cfg.population, "Population size");
  ga->add_option("--generations", opt->cfg.generations, "Generation count");
  ga->add_option("--elite", opt->cfg.elite, "Elites copied unchanged");
  ga->add_option("--tournament", opt->cfg.tournament, "Tournament size");
  ga->add_option("--crossover-rate", opt->cfg.crossover_rate, "Blend-crossover probability");
  ga->add_option("--mutation-rate", opt->cfg.mutation_rate, "Per-gene mutation probability");
  ga->add_option("--mutation-scale", opt->cfg.mutation_scale, "Mutation std as range fraction");
  ga->add_option("--seed", opt->cfg.seed, "RNG seed");
  ga->add_option("--history", opt->history, "Optional CSV of best fitness per generation");
  ga->add_flag("--json", opt->json, "Print a JSON summary");
  ga->callback([opt] {
    const stv::VehicleParams base = load_params_opt(opt->spec);
    const std::vector<std::string>& free_names =
        opt->free.empty() ? stv::default_free_parameters() : opt->free;
    const std::vector<stv::ParamSpec> specs = stv::make_param_specs(base, free_names);
    const std::vector<stv::Trajectory> data = load_datasets(opt->data);
    const stv::GaResult result =
        stv::ga_run(base, specs, data, opt->cfg, [opt](int gen, double best) {
          if (gen % 10 == 0 || gen == opt->cfg.generations) {
            std::fprintf(stderr, "generation %d best %.6g\n", gen, best);
          }
        });
    stv::save_vehicle_params(result.best_params, opt->out, "fitted by stvsim ga-fit");
    if (!opt->history.empty()) {
      std::ofstream out(opt->history);
      if (!out) throw std::runtime_error("cannot write " + opt->history);
      out << "generation,best_nmse\n";
      for (std::size_t g = 0; g < result.best_history.size(); ++g) {
        char line[64];
        std::snprintf(line, sizeof(line), "%zu,%.17g\n", g, result.best_history[g]);
        out << line;
      }
    }
    ordered_json fitted = ordered_json::object();
    for (const auto& spec : specs) {
      if (spec.free) fitted[spec.name] = stv::param_field(result.best_params, spec.name);
    }
    ordered_json j{{"out", opt->out},
                   {"best_nmse", result.best_fitness},
                   {"generations", opt->cfg.generations},
                   {"fitted", fitted}};
    char buf[160];
    std::snprintf(buf, sizeof(buf), "best one-step NMSE %.6g after %d generations, %s\n",
                  result.best_fitness, opt->cfg.generations, opt->out.c_str());
    emit(opt->json, j, buf);
  });
}

void add_sindy_fit(CLI::App& app) {
  auto* sf = app.add_subcommand("sindy-fit", "Fit the sparse kinematic transition model");
  struct SindyFitOpts {
    std::vector<std::string> data;
    std::string params, out;
    double threshold = 0.02;
    std::vector<double> sweep;
    bool json = false;
  };
  auto opt = std::make_shared<SindyFitOpts>();
  sf->add_option("--data", opt->data, "Labeled training CSV (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  sf->add_option("--params", opt->params, "Vehicle parameter file (default: nominal)");
  sf->add_option("--out", opt->out, "Output model file");
  sf->add_option("--threshold", opt->threshold, "Pruning threshold on scaled coefficients");
  sf->add_option("--sweep", opt->sweep, "Thresholds to tabulate support sizes for")
      ->delimiter(',');
  sf->add_flag("--json", opt->json, "Print a JSON summary");
  sf->callback([opt] {
    const stv::VehicleParams p = load_params_opt(opt->params);
    const std::vector<stv::Trajectory> data = load_datasets(opt->data);
    if (!opt->sweep.empty()) {
      ordered_json rows = ordered_json::array();
      std::string prose = "threshold  vf  af  ar  frozen\n";
      for (double th : opt->sweep) {
        const stv::SparseModel m = stv::fit_ksindy(data, th, p);
        rows.push_back({{"threshold", th},
                        {"terms_vf", m.vf.size()},
                        {"terms_af", m.af.size()},
                        {"terms_ar", m.ar.size()},
                        {"support_frozen", m.support_frozen}});
        char line[120];
        std::snprintf(line, sizeof(line), "%9g  %2zu  %2zu  %2zu  %s\n", th, m.vf.size(),
                      m.af.size(), m.ar.size(), m.support_frozen ? "yes" : "no");
        prose += line;
      }
      emit(opt->json, ordered_json{{"sweep", rows}}, prose);
      if (opt->out.empty()) return;
    }
    if (opt->out.empty()) {
      throw CLI::ValidationError("sindy-fit", "--out is required unless only sweeping");
    }
    const stv::SparseModel model = stv::fit_ksindy(data, opt->threshold, p);
    stv::save_sparse_model(model, opt->out);
    ordered_json j{{"out", opt->out},
                   {"threshold", opt->threshold},
                   {"terms_vf", model.vf.size()},
                   {"terms_af", model.af.size()},
                   {"terms_ar", model.ar.size()},
                   {"support_frozen", model.support_frozen}};
    char buf[160];
    std::snprintf(buf, sizeof(buf), "kept %zu + %zu + %zu terms (threshold %g), %s\n",
                  model.vf.size(), model.af.size(), model.ar.size(), opt->threshold,
                  opt->out.c_str());
    emit(opt->json, j, buf);
  });
}

void add_mlp_train(CLI::App& app) {
  auto* mt = app.add_subcommand("mlp-train", "Train a network model");
  struct MlpTrainOpts {
    std::vector<std::string> data;
    std::string kind, params, out, base;
    std::vector<int> hidden;
    stv::MlpConfig cfg;
    std::uint64_t seed = 1;
    bool json = false;
  };
  auto opt = std::make_shared<MlpTrainOpts>();
  mt->add_option("--kind", opt->kind,
                 "narx: velocity history; kmlp: kinematic state; "
                 "residual: correction on a sparse model")
      ->required()
      ->check(CLI::IsMember({"narx", "kmlp", "residual"}));
  mt->add_option("--data", opt->data, "Labeled training CSV (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  mt->add_option("--out", opt->out, "Output network file")->required();
  mt->add_option("--base", opt->base, "Sparse model the residual corrects")
      ->check(CLI::ExistingFile);
  mt->add_option("--params", opt->params, "Vehicle parameter file (default: nominal)");
  mt->add_option("--hidden", opt->hidden, "Hidden widths (default 256,128; residual 128,64)")
      ->delimiter(',');
  mt->add_option("--epochs", opt->cfg.epochs, "Training epochs");
  mt->add_option("--batch", opt->cfg.batch_size, "Minibatch size");
  mt->add_option("--lr", opt->cfg.learning_rate, "Initial learning rate");
  mt->add_option("--dropout", opt->cfg.dropout, "Hidden dropout rate");
  mt->add_option("--patience", opt->cfg.patience, "Early-stop patience in epochs");
  mt->add_option("--weight-decay", opt->cfg.weight_decay, "L2 penalty on weights");
  mt->add_option("--seed", opt->seed, "RNG seed");
  mt->add_flag("--json", opt->json, "Print a JSON summary");
  mt->callback([opt] {
    const stv::VehicleParams p = load_params_opt(opt->params);
    const std::vector<stv::Trajectory> data = load_datasets(opt->data);
    stv::SupervisedData set;
    if (opt->kind == "narx") {
      set = stv::assemble_narx(data);
    } else if (opt->kind == "kmlp") {
      set = stv::assemble_kmlp(data);
    } else {
      if (opt->base.empty()) {
        throw CLI::ValidationError("--base", "residual training needs a sparse model");
      }
      set = stv::assemble_residual(data, stv::load_sparse_model(opt->base), p);
    }
    std::vector<int> hidden = opt->hidden;
    if (hidden.empty()) {
      hidden = opt->kind == "residual" ? std::vector<int>{128, 64}
                                       : std::vector<int>{256, 128};
    }
    stv::MlpNetwork net(static_cast<int>(set.inputs.cols()), hidden,
                        static_cast<int>(set.targets.cols()), opt->seed);
    opt->cfg.seed = opt->seed + kSeedOffset;
    const stv::MlpTrainResult result =
        stv::mlp_train(net, set.inputs, set.targets, opt->cfg);
    stv::save_mlp(net, opt->out);
    ordered_json j{{"out", opt->out},
                   {"kind", opt->kind},
                   {"samples", set.inputs.rows()},
                   {"epochs_run", result.train_loss.size()},
                   {"best_epoch", result.best_epoch},
                   {"best_val_loss", result.best_val}};
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "trained %s on %ld samples, best val loss %.6g at epoch %d, %s\n",
                  opt->kind.c_str(), static_cast<long>(set.inputs.rows()), result.best_val,
                  result.best_epoch, opt->out.c_str());
    emit(opt->json, j, buf);
  });
}

void add_evaluate(CLI::App& app) {
  auto* ev = app.add_subcommand("evaluate", "Score models on a validation window");
  struct EvaluateOpts {
    std::string val, params, report, export_dir;
    std::vector<std::string> train, models;
    std::string ksindy, kmlp, narx, residual;
    bool ne = false, no_timing = false, json = false;
    stv::EvalConfig cfg;
  };
  auto opt = std::make_shared<EvaluateOpts>();
  ev->add_option("--val", opt->val, "Validation CSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--train", opt->train,
                 "Training CSVs defining the error weights (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--params", opt->params, "Vehicle parameter file (default: nominal)");
  ev->add_option("--models", opt->models,
                 "Models to score, in order (default: all with artifacts)")
      ->delimiter(',');
  ev->add_flag("--ne", opt->ne, "Include the rigid-body model");
  ev->add_option("--ksindy", opt->ksindy, "Sparse model file")->check(CLI::ExistingFile);
  ev->add_option("--kmlp", opt->kmlp, "Kinematic network file")->check(CLI::ExistingFile);
  ev->add_option("--narx", opt->narx, "Velocity-history network file")
      ->check(CLI::ExistingFile);
  ev->add_option("--residual", opt->residual, "Correction network file (pairs with --ksindy)")
      ->check(CLI::ExistingFile);
  ev->add_option("--report", opt->report, "Write the JSON report here");
  ev->add_option("--export-dir", opt->export_dir,
                 "Write predicted and reference trajectory CSVs here");
  ev->add_option("--start", opt->cfg.start, "First predicted sample index");
  ev->add_option("--reinit", opt->cfg.reinit_period, "Re-seed interval in samples");
  ev->add_option("--repeats", opt->cfg.timing_repeats, "Timing repetitions");
  ev->add_flag("--no-timing", opt->no_timing, "Skip wall-time measurement");
  ev->add_flag("--json", opt->json, "Print the report to stdout");
  ev->callback([opt] {
    const stv::VehicleParams p = load_params_opt(opt->params);
    opt->cfg.timing = !opt->no_timing;
    const stv::Trajectory val = stv::load_csv(opt->val);
    const Eigen::Vector3d w = stv::velocity_weights(load_datasets(opt->train));

    std::map<std::string, std::unique_ptr<stv::Predictor>> available;
    if (opt->ne) available["ne"] = std::make_unique<stv::NePredictor>(p);
    if (!opt->ksindy.empty()) {
      available["ksindy"] = std::make_unique<stv::KinPredictor>(
          std::make_shared<stv::SparseTransitionModel>(stv::load_sparse_model(opt->ksindy)),
          p);
    }
    if (!opt->kmlp.empty()) {
      available["kmlp"] = std::make_unique<stv::KinPredictor>(
          std::make_shared<stv::MlpTransitionModel>(stv::load_mlp(opt->kmlp)), p);
    }
    if (!opt->narx.empty()) {
      available["narx"] = std::make_unique<stv::NarxPredictor>(stv::load_mlp(opt->narx));
    }
    if (!opt->residual.empty()) {
      if (opt->ksindy.empty()) {
        throw CLI::ValidationError("--residual", "needs --ksindy for the base model");
      }
      available["ksindy-mlp"] = std::make_unique<stv::KinPredictor>(
          std::make_shared<stv::ResidualTransitionModel>(
              stv::load_sparse_model(opt->ksindy), stv::load_mlp(opt->residual)),
          p);
    }
    std::vector<std::string> order = opt->models;
    if (order.empty()) {
      for (const char* name : {"ne", "ksindy", "kmlp", "narx", "ksindy-mlp"}) {
        if (available.count(name)) order.push_back(name);
      }
    }
    std::vector<const stv::Predictor*> models;
    for (const std::string& name : order) {
      auto it = available.find(name);
      if (it == available.end()) {
        throw CLI::ValidationError("--models", "no artifact supplied for '" + name + "'");
      }
      models.push_back(it->second.get());
    }
    if (models.empty()) throw CLI::ValidationError("evaluate", "no models selected");

    const std::vector<stv::ModelEval> results =
        stv::evaluate_models(models, val, w, opt->cfg);
    const ordered_json report = stv::make_report(opt->val, w, results, opt->cfg);
    if (!opt->report.empty()) {
      std::ofstream out(opt->report);
      if (!out) throw std::runtime_error("cannot write " + opt->report);
      out << report.dump(2) << "\n";
    }
    if (!opt->export_dir.empty()) {
      stv::save_csv(stv::reference_window(val, opt->cfg),
                    opt->export_dir + "/reference.csv");
      for (const stv::Predictor* m : models) {
        const stv::ModelPrediction pred = stv::predicted_trajectories(*m, val, opt->cfg);
        if (pred.full.size() > 0) {
          stv::save_csv(pred.full, opt->export_dir + "/" + m->name() + "_full.csv");
        }
        if (pred.reinit.size() > 0) {
          stv::save_csv(pred.reinit, opt->export_dir + "/" + m->name() + "_reinit.csv");
        }
      }
    }
    if (opt->json) {
      std::cout << report.dump(2) << "\n";
    } else {
      std::printf("%-12s %12s %12s %10s\n", "model", "nmse*1e3", "reinit*1e3", "time_ms");
      for (const stv::ModelEval& r : results) {
        std::printf("%-12s %12.4g %12.4g %10.2f%s\n", r.name.c_str(), 1e3 * r.nmse,
                    1e3 * r.reinit_nmse, r.time_ms,
                    r.diverged_at >= 0 ? "  (diverged)" : "");
      }
    }
  });
}

void add_rollout(CLI::App& app) {
  auto* ro = app.add_subcommand("rollout", "Free-run one model from rest over a profile");
  struct RolloutOpts {
    std::string profile, params, out;
    std::string ksindy, kmlp, residual;
    bool ne = false, reference = false;
    std::uint64_t seed = 0;
  };
  auto opt = std::make_shared<RolloutOpts>();
  ro->add_option("--profile", opt->profile, "Excitation profile file")
      ->required()
      ->check(CLI::ExistingFile);
  ro->add_option("--params", opt->params, "Vehicle parameter file (default: nominal)");
  ro->add_option("--out", opt->out, "Output trajectory CSV")->required();
  ro->add_flag("--ne", opt->ne, "Rigid-body model");
  ro->add_flag("--reference", opt->reference, "Built-in sparse reference model");
  ro->add_option("--ksindy", opt->ksindy, "Sparse model file")->check(CLI::ExistingFile);
  ro->add_option("--kmlp", opt->kmlp, "Kinematic network file")->check(CLI::ExistingFile);
  ro->add_option("--residual", opt->residual, "Correction network (pairs with --ksindy)")
      ->check(CLI::ExistingFile);
  auto* seed_opt =
      ro->add_option("--seed", opt->seed, "RNG seed for noise signals (default: profile's)");
  ro->callback([opt, seed_opt] {
    const stv::VehicleParams p = load_params_opt(opt->params);
    const stv::ExcitationProfile profile = stv::load_profile(opt->profile);
    const std::uint64_t seed = seed_opt->count() > 0 ? opt->seed : profile.seed;
    const std::vector<stv::DriverInput> inputs =
        stv::render_profile(profile, seed, p.steering.delta_max);
    const bool use_residual = !opt->residual.empty();
    const int selected = int(opt->ne) + int(opt->reference) +
                         int(!opt->ksindy.empty() && !use_residual) + int(use_residual) +
                         int(!opt->kmlp.empty());
    if (selected != 1) {
      throw CLI::ValidationError("rollout",
                                 "select exactly one model (--residual pairs with --ksindy)");
    }
    stv::Trajectory traj;
    if (opt->ne) {
      stv::GenConfig cfg;
      cfg.pose_noise_px = cfg.pose_noise_py = cfg.pose_noise_theta = 0.0;
      cfg.bounce = false;
      traj = stv::simulate_vehicle(inputs, p, cfg);
    } else {
      std::shared_ptr<stv::TransitionModel> model;
      if (opt->reference) {
        model = std::make_shared<stv::SparseTransitionModel>(stv::reference_model());
      } else if (use_residual) {
        if (opt->ksindy.empty()) {
          throw CLI::ValidationError("rollout", "--residual also needs --ksindy");
        }
        model = std::make_shared<stv::ResidualTransitionModel>(
            stv::load_sparse_model(opt->ksindy), stv::load_mlp(opt->residual));
      } else if (!opt->ksindy.empty()) {
        model =
            std::make_shared<stv::SparseTransitionModel>(stv::load_sparse_model(opt->ksindy));
      } else {
        model = std::make_shared<stv::MlpTransitionModel>(stv::load_mlp(opt->kmlp));
      }
      std::vector<double> t(inputs.size());
      for (std::size_t k = 0; k < t.size(); ++k) {
        t[k] = static_cast<double>(k) * stv::kSamplePeriod;
      }
      traj = stv::rollout(*model, stv::KinematicState{}, stv::Pose{}, t, inputs, p);
    }
    stv::save_csv(traj, opt->out);
    std::fprintf(stderr, "wrote %zu samples to %s\n", traj.size(), opt->out.c_str());
  });
}

void add_split(CLI::App& app) {
  auto* sp = app.add_subcommand("split", "Cut a validation window out of a recording");
  struct SplitOpts {
    std::string data, train_out, val_out;
    double val_seconds = 110.0, val_start = -1.0;
    bool json = false;
  };
  auto opt = std::make_shared<SplitOpts>();
  sp->add_option("--data", opt->data, "Input CSV")->required()->check(CLI::ExistingFile);
  sp->add_option("--val-seconds", opt->val_seconds, "Validation window length [s]");
  sp->add_option("--val-start", opt->val_start, "Window start [s]; negative = final window");
  sp->add_option("--train-out", opt->train_out,
                 "Training CSV (suffix .0/.1 when split in two)")
      ->required();
  sp->add_option("--val-out", opt->val_out, "Validation CSV")->required();
  sp->add_flag("--json", opt->json, "Print a JSON summary");
  sp->callback([opt] {
    const stv::Split split =
        stv::split_dataset(stv::load_csv(opt->data), opt->val_seconds, opt->val_start);
    std::vector<std::string> train_paths;
    if (split.train.size() == 1) {
      train_paths.push_back(opt->train_out);
    } else {
      for (std::size_t i = 0; i < split.train.size(); ++i) {
        train_paths.push_back(with_piece_suffix(opt->train_out, i));
      }
    }
    for (std::size_t i = 0; i < split.train.size(); ++i) {
      stv::save_csv(split.train[i], train_paths[i]);
    }
    stv::save_csv(split.validation, opt->val_out);
    ordered_json j{{"train", train_paths},
                   {"validation", opt->val_out},
                   {"validation_samples", split.validation.size()}};
    std::string prose;
    for (const std::string& path : train_paths) prose += "train piece: " + path + "\n";
    prose += "validation: " + opt->val_out + " (" +
             std::to_string(split.validation.size()) + " samples)\n";
    emit(opt->json, j, prose);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-track vehicle simulation and model identification"};
  app.require_subcommand(1);
  add_generate(app);
  add_estimate(app);
  add_ga_fit(app);
  add_sindy_fit(app);
  add_mlp_train(app);
  add_evaluate(app);
  add_rollout(app);
  add_split(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "stvsim: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
