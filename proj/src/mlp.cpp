#include "stv/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "stv/actuators.hpp"
#include "stv/errors.hpp"

namespace stv {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Column-major flat size of all weights and biases.
Eigen::Index flat_size(const std::vector<Eigen::MatrixXd>& w,
                       const std::vector<Eigen::VectorXd>& b) {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < w.size(); ++l) n += w[l].size() + b[l].size();
  return n;
}

// Forward/backward over normalized data (columns are samples). `masks` holds
// one inverted-dropout mask per hidden layer or is empty for evaluation.
// Returns the data loss; fills gradients when requested.
double backprop(const std::vector<Eigen::MatrixXd>& w, const std::vector<Eigen::VectorXd>& b,
                const Eigen::MatrixXd& xn, const Eigen::MatrixXd& tn,
                const std::vector<Eigen::MatrixXd>& masks, double weight_decay,
                std::vector<Eigen::MatrixXd>* gw, std::vector<Eigen::VectorXd>* gb) {
  const std::size_t layers = w.size();
  const double count = static_cast<double>(tn.size());
  std::vector<Eigen::MatrixXd> acts(layers + 1);  // input fed to each layer
  std::vector<Eigen::MatrixXd> zs(layers);
  acts[0] = xn;
  for (std::size_t l = 0; l < layers; ++l) {
    zs[l] = (w[l] * acts[l]).colwise() + b[l];
    if (l + 1 < layers) {
      Eigen::MatrixXd a = zs[l].cwiseMax(0.0);
      if (!masks.empty()) a.array() *= masks[l].array();
      acts[l + 1] = std::move(a);
    } else {
      acts[l + 1] = zs[l];
    }
  }
  double loss = (acts[layers] - tn).squaredNorm() / count;
  if (weight_decay != 0.0) {
    double reg = 0.0;
    for (const Eigen::MatrixXd& m : w) reg += m.squaredNorm();
    loss += 0.5 * weight_decay * reg;
  }
  if (gw == nullptr) return loss;

  gw->resize(layers);
  gb->resize(layers);
  Eigen::MatrixXd delta = 2.0 / count * (acts[layers] - tn);
  for (std::size_t l = layers; l-- > 0;) {
    (*gw)[l] = delta * acts[l].transpose();
    if (weight_decay != 0.0) (*gw)[l] += weight_decay * w[l];
    (*gb)[l] = delta.rowwise().sum();
    if (l > 0) {
      delta = w[l].transpose() * delta;
      if (!masks.empty()) delta.array() *= masks[l - 1].array();
      delta.array() *= (zs[l - 1].array() > 0.0).cast<double>();
    }
  }
  return loss;
}

}  // namespace

MlpNetwork::MlpNetwork(int input_dim, const std::vector<int>& hidden, int output_dim,
                       std::uint64_t seed) {
  if (input_dim < 1 || output_dim < 1) {
    throw std::invalid_argument("MlpNetwork: dimensions must be positive");
  }
  std::vector<int> dims;
  dims.push_back(input_dim);
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("MlpNetwork: hidden width must be positive");
    dims.push_back(h);
  }
  dims.push_back(output_dim);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double limit = std::sqrt(6.0 / dims[l]);
    std::uniform_real_distribution<double> u(-limit, limit);
    Eigen::MatrixXd wl(dims[l + 1], dims[l]);
    for (Eigen::Index j = 0; j < wl.cols(); ++j) {
      for (Eigen::Index i = 0; i < wl.rows(); ++i) wl(i, j) = u(rng);
    }
    w_.push_back(std::move(wl));
    b_.push_back(Eigen::VectorXd::Zero(dims[l + 1]));
  }
  in_mean_ = Eigen::VectorXd::Zero(input_dim);
  in_std_ = Eigen::VectorXd::Ones(input_dim);
  out_mean_ = Eigen::VectorXd::Zero(output_dim);
  out_std_ = Eigen::VectorXd::Ones(output_dim);
}

void MlpNetwork::set_normalization(const Eigen::VectorXd& in_mean,
                                   const Eigen::VectorXd& in_std,
                                   const Eigen::VectorXd& out_mean,
                                   const Eigen::VectorXd& out_std) {
  if (in_mean.size() != input_dim() || in_std.size() != input_dim() ||
      out_mean.size() != output_dim() || out_std.size() != output_dim()) {
    throw std::invalid_argument("set_normalization: size mismatch");
  }
  if (!(in_std.array() > 0.0).all() || !(out_std.array() > 0.0).all()) {
    throw std::invalid_argument("set_normalization: stds must be positive");
  }
  in_mean_ = in_mean;
  in_std_ = in_std;
  out_mean_ = out_mean;
  out_std_ = out_std;
}

Eigen::MatrixXd MlpNetwork::predict_batch(const Eigen::MatrixXd& inputs) const {
  if (w_.empty()) throw std::logic_error("MlpNetwork: empty network");
  if (inputs.cols() != input_dim()) {
    throw std::invalid_argument("predict: input width mismatch");
  }
  Eigen::MatrixXd a =
      ((inputs.transpose().colwise() - in_mean_).array().colwise() / in_std_.array())
          .matrix();
  for (std::size_t l = 0; l < w_.size(); ++l) {
    a = (w_[l] * a).colwise() + b_[l];
    if (l + 1 < w_.size()) a = a.cwiseMax(0.0);
  }
  return ((a.array().colwise() * out_std_.array()).colwise() + out_mean_.array())
      .matrix()
      .transpose();
}

Eigen::VectorXd MlpNetwork::predict(const Eigen::VectorXd& input) const {
  return predict_batch(input.transpose()).row(0);
}

double MlpNetwork::loss(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                        double weight_decay) const {
  if (inputs.rows() != targets.rows() || inputs.cols() != input_dim() ||
      targets.cols() != output_dim() || inputs.rows() == 0) {
    throw std::invalid_argument("loss: shape mismatch");
  }
  const Eigen::MatrixXd xn =
      ((inputs.transpose().colwise() - in_mean_).array().colwise() / in_std_.array())
          .matrix();
  const Eigen::MatrixXd tn =
      ((targets.transpose().colwise() - out_mean_).array().colwise() / out_std_.array())
          .matrix();
  return backprop(w_, b_, xn, tn, {}, weight_decay, nullptr, nullptr);
}

Eigen::VectorXd MlpNetwork::gradient(const Eigen::MatrixXd& inputs,
                                     const Eigen::MatrixXd& targets,
                                     double weight_decay) const {
  if (inputs.rows() != targets.rows() || inputs.cols() != input_dim() ||
      targets.cols() != output_dim() || inputs.rows() == 0) {
    throw std::invalid_argument("gradient: shape mismatch");
  }
  const Eigen::MatrixXd xn =
      ((inputs.transpose().colwise() - in_mean_).array().colwise() / in_std_.array())
          .matrix();
  const Eigen::MatrixXd tn =
      ((targets.transpose().colwise() - out_mean_).array().colwise() / out_std_.array())
          .matrix();
  std::vector<Eigen::MatrixXd> gw;
  std::vector<Eigen::VectorXd> gb;
  backprop(w_, b_, xn, tn, {}, weight_decay, &gw, &gb);
  Eigen::VectorXd flat(flat_size(w_, b_));
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < gw.size(); ++l) {
    flat.segment(at, gw[l].size()) = Eigen::Map<Eigen::VectorXd>(gw[l].data(), gw[l].size());
    at += gw[l].size();
    flat.segment(at, gb[l].size()) = gb[l];
    at += gb[l].size();
  }
  return flat;
}

Eigen::VectorXd MlpNetwork::parameters() const {
  Eigen::VectorXd flat(flat_size(w_, b_));
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    flat.segment(at, w_[l].size()) =
        Eigen::Map<const Eigen::VectorXd>(w_[l].data(), w_[l].size());
    at += w_[l].size();
    flat.segment(at, b_[l].size()) = b_[l];
    at += b_[l].size();
  }
  return flat;
}

void MlpNetwork::set_parameters(const Eigen::VectorXd& flat) {
  if (flat.size() != flat_size(w_, b_)) {
    throw std::invalid_argument("set_parameters: size mismatch");
  }
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    Eigen::Map<Eigen::VectorXd>(w_[l].data(), w_[l].size()) =
        flat.segment(at, w_[l].size());
    at += w_[l].size();
    b_[l] = flat.segment(at, b_[l].size());
    at += b_[l].size();
  }
}

MlpTrainResult mlp_train(MlpNetwork& net, const Eigen::MatrixXd& inputs,
                         const Eigen::MatrixXd& targets, const MlpConfig& cfg) {
  if (net.w_.empty()) throw std::logic_error("mlp_train: empty network");
  if (inputs.rows() != targets.rows() || inputs.cols() != net.input_dim() ||
      targets.cols() != net.output_dim()) {
    throw std::invalid_argument("mlp_train: shape mismatch");
  }
  if (cfg.val_fraction < 0.0 || cfg.val_fraction >= 1.0) {
    throw std::invalid_argument("mlp_train: val_fraction must be in [0, 1)");
  }
  const Eigen::Index n = inputs.rows();
  const Eigen::Index n_val = static_cast<Eigen::Index>(std::llround(cfg.val_fraction * n));
  const Eigen::Index n_train = n - n_val;
  if (n_train < 2) throw std::invalid_argument("mlp_train: not enough training rows");

  // Z-score statistics from the training rows only; constant channels pass
  // through with unit scale.
  Eigen::VectorXd in_mean = inputs.topRows(n_train).colwise().mean();
  Eigen::VectorXd out_mean = targets.topRows(n_train).colwise().mean();
  auto pop_std = [](const Eigen::MatrixXd& m, const Eigen::VectorXd& mean) {
    Eigen::VectorXd var =
        (m.rowwise() - mean.transpose()).array().square().colwise().mean();
    Eigen::VectorXd std = var.cwiseSqrt();
    for (Eigen::Index i = 0; i < std.size(); ++i) {
      if (!(std[i] > 1e-12)) std[i] = 1.0;
    }
    return std;
  };
  const Eigen::VectorXd in_std = pop_std(inputs.topRows(n_train), in_mean);
  const Eigen::VectorXd out_std = pop_std(targets.topRows(n_train), out_mean);
  net.set_normalization(in_mean, in_std, out_mean, out_std);

  const Eigen::MatrixXd xn =
      ((inputs.transpose().colwise() - in_mean).array().colwise() / in_std.array()).matrix();
  const Eigen::MatrixXd tn =
      ((targets.transpose().colwise() - out_mean).array().colwise() / out_std.array())
          .matrix();
  const Eigen::MatrixXd x_train = xn.leftCols(n_train);
  const Eigen::MatrixXd t_train = tn.leftCols(n_train);
  const Eigen::MatrixXd x_val = xn.rightCols(n_val);
  const Eigen::MatrixXd t_val = tn.rightCols(n_val);

  const std::size_t layers = net.w_.size();
  std::vector<Eigen::MatrixXd> mw(layers), vw(layers);
  std::vector<Eigen::VectorXd> mb(layers), vb(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    mw[l] = Eigen::MatrixXd::Zero(net.w_[l].rows(), net.w_[l].cols());
    vw[l] = mw[l];
    mb[l] = Eigen::VectorXd::Zero(net.b_[l].size());
    vb[l] = mb[l];
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;
  long adam_t = 0;

  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution keep(1.0 - cfg.dropout);
  const double keep_scale = cfg.dropout > 0.0 ? 1.0 / (1.0 - cfg.dropout) : 1.0;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_train));
  std::iota(order.begin(), order.end(), 0);
  const Eigen::Index batch = std::min<Eigen::Index>(std::max(cfg.batch_size, 1), n_train);

  MlpTrainResult result;
  Eigen::VectorXd best_params = net.parameters();
  double best_monitor = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<Eigen::MatrixXd> gw;
  std::vector<Eigen::VectorXd> gb;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr =
        cfg.learning_rate * std::pow(cfg.lr_decay, cfg.lr_step > 0 ? epoch / cfg.lr_step : 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n_train; start += batch) {
      const Eigen::Index count = std::min(batch, n_train - start);
      Eigen::MatrixXd xb(x_train.rows(), count);
      Eigen::MatrixXd tb(t_train.rows(), count);
      for (Eigen::Index i = 0; i < count; ++i) {
        xb.col(i) = x_train.col(order[static_cast<std::size_t>(start + i)]);
        tb.col(i) = t_train.col(order[static_cast<std::size_t>(start + i)]);
      }
      std::vector<Eigen::MatrixXd> masks;
      if (cfg.dropout > 0.0) {
        for (std::size_t l = 0; l + 1 < layers; ++l) {
          Eigen::MatrixXd mask(net.w_[l].rows(), count);
          for (Eigen::Index j = 0; j < count; ++j) {
            for (Eigen::Index i = 0; i < mask.rows(); ++i) {
              mask(i, j) = keep(rng) ? keep_scale : 0.0;
            }
          }
          masks.push_back(std::move(mask));
        }
      }
      backprop(net.w_, net.b_, xb, tb, masks, cfg.weight_decay, &gw, &gb);
      ++adam_t;
      const double corr =
          std::sqrt(1.0 - std::pow(kBeta2, adam_t)) / (1.0 - std::pow(kBeta1, adam_t));
      for (std::size_t l = 0; l < layers; ++l) {
        mw[l] = kBeta1 * mw[l] + (1.0 - kBeta1) * gw[l];
        vw[l] = kBeta2 * vw[l] + (1.0 - kBeta2) * gw[l].cwiseProduct(gw[l]);
        net.w_[l].array() -=
            lr * corr * mw[l].array() / (vw[l].array().sqrt() + kAdamEps);
        mb[l] = kBeta1 * mb[l] + (1.0 - kBeta1) * gb[l];
        vb[l] = kBeta2 * vb[l] + (1.0 - kBeta2) * gb[l].cwiseProduct(gb[l]);
        net.b_[l].array() -=
            lr * corr * mb[l].array() / (vb[l].array().sqrt() + kAdamEps);
      }
    }

    const double train_loss =
        backprop(net.w_, net.b_, x_train, t_train, {}, 0.0, nullptr, nullptr);
    const double val_loss =
        n_val > 0 ? backprop(net.w_, net.b_, x_val, t_val, {}, 0.0, nullptr, nullptr)
                  : train_loss;
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      throw NumericError("mlp_train: loss became non-finite", epoch);
    }
    result.train_loss.push_back(train_loss);
    result.val_loss.push_back(val_loss);
    if (val_loss < best_monitor) {
      best_monitor = val_loss;
      best_params = net.parameters();
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  net.set_parameters(best_params);
  result.best_val = best_monitor;
  return result;
}

void save_mlp(const MlpNetwork& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_mlp: cannot open " + path);
  out << "stv_mlp 1\n";
  out << "dims " << net.input_dim();
  for (const Eigen::MatrixXd& w : net.w_) out << " " << w.rows();
  out << "\n";
  auto write_vec = [&](const char* tag, const Eigen::VectorXd& v) {
    out << tag;
    for (Eigen::Index i = 0; i < v.size(); ++i) out << " " << fmt17(v[i]);
    out << "\n";
  };
  write_vec("in_mean", net.in_mean_);
  write_vec("in_std", net.in_std_);
  write_vec("out_mean", net.out_mean_);
  write_vec("out_std", net.out_std_);
  for (std::size_t l = 0; l < net.w_.size(); ++l) {
    out << "layer " << l << "\n";
    for (Eigen::Index i = 0; i < net.w_[l].rows(); ++i) {
      for (Eigen::Index j = 0; j < net.w_[l].cols(); ++j) {
        out << (j ? " " : "") << fmt17(net.w_[l](i, j));
      }
      out << "\n";
    }
    write_vec("bias", net.b_[l]);
  }
  if (!out) throw std::runtime_error("save_mlp: write failed for " + path);
}

MlpNetwork load_mlp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_mlp: cannot open " + path);
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (!in || tag != "stv_mlp" || version != 1) {
    throw std::runtime_error("load_mlp: bad header in " + path);
  }
  in >> tag;
  if (tag != "dims") throw std::runtime_error("load_mlp: expected dims in " + path);
  std::vector<int> dims;
  {
    std::string rest;
    std::getline(in, rest);
    std::istringstream ds(rest);
    int d = 0;
    while (ds >> d) dims.push_back(d);
  }
  if (dims.size() < 2) throw std::runtime_error("load_mlp: needs at least two dims");
  MlpNetwork net;
  auto read_vec = [&](const char* expect, Eigen::Index size) {
    in >> tag;
    if (tag != expect) {
      throw std::runtime_error(std::string("load_mlp: expected ") + expect + " in " + path);
    }
    Eigen::VectorXd v(size);
    for (Eigen::Index i = 0; i < size; ++i) in >> v[i];
    return v;
  };
  net.in_mean_ = read_vec("in_mean", dims.front());
  net.in_std_ = read_vec("in_std", dims.front());
  net.out_mean_ = read_vec("out_mean", dims.back());
  net.out_std_ = read_vec("out_std", dims.back());
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    std::size_t index = 0;
    in >> tag >> index;
    if (!in || tag != "layer" || index != l) {
      throw std::runtime_error("load_mlp: bad layer header in " + path);
    }
    Eigen::MatrixXd w(dims[l + 1], dims[l]);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) in >> w(i, j);
    }
    net.w_.push_back(std::move(w));
    net.b_.push_back(read_vec("bias", dims[l + 1]));
  }
  if (!in) throw std::runtime_error("load_mlp: truncated file " + path);
  return net;
}

namespace {

void require_kin(const Trajectory& traj, const char* who) {
  if (!traj.has_kin()) {
    throw std::invalid_argument(std::string(who) + ": trajectory lacks kinematic labels");
  }
}

}  // namespace

SupervisedData assemble_narx(const std::vector<Trajectory>& data) {
  std::vector<std::array<double, 15>> rows;
  std::vector<std::array<double, 3>> tgts;
  for (const Trajectory& traj : data) {
    traj.validate();
    for (std::size_t k = 2; k + 1 < traj.size(); ++k) {
      bool skip = false;
      for (std::size_t j = k - 2; j <= k + 1; ++j) skip = skip || traj.is_flagged(j);
      if (skip) continue;
      std::array<double, 15> row;
      std::size_t at = 0;
      for (std::size_t lag = 0; lag < 3; ++lag) {
        const BodyVelocity& v = traj.vel[k - lag];
        row[at++] = v.vx;
        row[at++] = v.vy;
        row[at++] = v.omega;
      }
      for (std::size_t lag = 0; lag < 3; ++lag) {
        const DriverInput& u = traj.input[k - lag];
        row[at++] = u.us;
        row[at++] = u.um;
      }
      rows.push_back(row);
      const BodyVelocity& vn = traj.vel[k + 1];
      tgts.push_back({vn.vx, vn.vy, vn.omega});
    }
  }
  if (rows.empty()) throw std::invalid_argument("assemble_narx: no usable samples");
  SupervisedData out;
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), 15);
  out.targets.resize(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < 15; ++j) out.inputs(static_cast<Eigen::Index>(i), j) = rows[i][j];
    for (int j = 0; j < 3; ++j) out.targets(static_cast<Eigen::Index>(i), j) = tgts[i][j];
  }
  return out;
}

SupervisedData assemble_kmlp(const std::vector<Trajectory>& data) {
  std::vector<std::array<double, 6>> rows;
  std::vector<std::array<double, 3>> tgts;
  for (const Trajectory& traj : data) {
    traj.validate();
    require_kin(traj, "assemble_kmlp");
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
      if (traj.is_flagged(k) || traj.is_flagged(k + 1)) continue;
      const KinematicState& x = traj.kin[k];
      const KinematicState& xn = traj.kin[k + 1];
      rows.push_back(
          {x.vf, x.alpha_f, x.alpha_r, x.delta, traj.input[k].us, traj.input[k].um});
      tgts.push_back({xn.vf, xn.alpha_f, xn.alpha_r});
    }
  }
  if (rows.empty()) throw std::invalid_argument("assemble_kmlp: no usable samples");
  SupervisedData out;
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), 6);
  out.targets.resize(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < 6; ++j) out.inputs(static_cast<Eigen::Index>(i), j) = rows[i][j];
    for (int j = 0; j < 3; ++j) out.targets(static_cast<Eigen::Index>(i), j) = tgts[i][j];
  }
  return out;
}

SupervisedData assemble_residual(const std::vector<Trajectory>& data,
                                 const SparseModel& model, const VehicleParams& params) {
  SupervisedData out = assemble_kmlp(data);
  for (Eigen::Index i = 0; i < out.inputs.rows(); ++i) {
    TermArgs a;
    a.vf = out.inputs(i, 0);
    a.af = out.inputs(i, 1);
    a.delta = out.inputs(i, 3);
    a.ddelta = steering_rate(out.inputs(i, 3), out.inputs(i, 4), params.steering);
    a.um = out.inputs(i, 5);
    a.c_ref = model.c_ref;
    const std::array<double, 3> raw = model.eval(a);
    out.targets(i, 0) -= raw[0];
    out.targets(i, 1) -= raw[1];
    out.targets(i, 2) -= raw[2];
  }
  return out;
}

}  // namespace stv
