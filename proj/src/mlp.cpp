#include "pdg/mlp.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

namespace pdg {

using nlohmann::json;

void MlpModel::validate() const {
  if (layer_sizes.size() < 2) throw ConfigError("mlp: need at least input and output layers");
  if (layer_sizes.front() != 4) throw ConfigError("mlp: input width must be 4");
  if (layer_sizes.back() != 1) throw ConfigError("mlp: output width must be 1");
  const std::size_t n_layers = layer_sizes.size() - 1;
  if (weights.size() != n_layers || biases.size() != n_layers) {
    throw ConfigError("mlp: layer count mismatch");
  }
  for (std::size_t l = 0; l < n_layers; ++l) {
    if (layer_sizes[l] <= 0 || layer_sizes[l + 1] <= 0) {
      throw ConfigError("mlp: layer sizes must be positive");
    }
    if (weights[l].rows() != layer_sizes[l] || weights[l].cols() != layer_sizes[l + 1] ||
        biases[l].size() != layer_sizes[l + 1]) {
      throw ConfigError("mlp: weight shape mismatch at layer " + std::to_string(l));
    }
    if (!weights[l].allFinite() || !biases[l].allFinite()) {
      throw ConfigError("mlp: non-finite parameters at layer " + std::to_string(l));
    }
  }
  if (!norm.in_mean.allFinite() || !norm.in_std.allFinite() || !std::isfinite(norm.out_mean) ||
      !std::isfinite(norm.out_std)) {
    throw ConfigError("mlp: non-finite normalization constants");
  }
  if (norm.out_std <= 0 || (norm.in_std.array() <= 0).any()) {
    throw ConfigError("mlp: normalization scales must be positive");
  }
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += static_cast<std::size_t>(weights[l].size()) + static_cast<std::size_t>(biases[l].size());
  }
  return n;
}

MlpModel make_mlp(const std::vector<int>& hidden, std::uint64_t seed) {
  MlpModel m;
  m.layer_sizes.push_back(4);
  for (int h : hidden) {
    if (h <= 0) throw ConfigError("mlp: hidden widths must be positive");
    m.layer_sizes.push_back(h);
  }
  m.layer_sizes.push_back(1);

  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    const int fan_in = m.layer_sizes[l];
    const int fan_out = m.layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_in, fan_out);
    for (int i = 0; i < fan_in; ++i) {
      for (int j = 0; j < fan_out; ++j) {
        w(i, j) = limit * (2.0 * rng_unit(rng) - 1.0);
      }
    }
    m.weights.push_back(std::move(w));
    m.biases.push_back(Eigen::RowVectorXd::Zero(fan_out));
  }
  return m;
}

Eigen::RowVector4d features(const State& x) {
  return Eigen::RowVector4d(x.r, x.u, x.v, x.m);
}

namespace {

Eigen::MatrixXd normalize_inputs(const MlpModel& m, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Xn = X.rowwise() - m.norm.in_mean;
  Xn.array().rowwise() /= m.norm.in_std.array();
  return Xn;
}

/// Forward pass on normalized inputs, keeping every layer activation.
/// acts[0] is the input; acts.back() is the raw (normalized-space) output.
void forward_stack(const MlpModel& m, const Eigen::MatrixXd& Xn,
                   std::vector<Eigen::MatrixXd>& acts) {
  const std::size_t n_layers = m.weights.size();
  acts.resize(n_layers + 1);
  acts[0] = Xn;
  for (std::size_t l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd z = (acts[l] * m.weights[l]).rowwise() + m.biases[l];
    if (l + 1 < n_layers) {
      acts[l + 1] = (1.0 + (-z.array()).exp()).inverse().matrix();
    } else {
      acts[l + 1] = std::move(z);
    }
  }
}

/// Flat parameter layout shared by pack/unpack/residual_jacobian: all weight
/// matrices first (layer by layer, row-major), then all bias vectors.
std::size_t packed_size(const MlpModel& m) {
  std::size_t n = 0;
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    n += static_cast<std::size_t>(m.weights[l].size() + m.biases[l].size());
  }
  return n;
}

void pack_parameters(const MlpModel& m, Eigen::VectorXd& p) {
  p.resize(static_cast<Eigen::Index>(packed_size(m)));
  Eigen::Index o = 0;
  for (const auto& w : m.weights) {
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) p(o++) = w(i, j);
    }
  }
  for (const auto& b : m.biases) {
    for (Eigen::Index j = 0; j < b.size(); ++j) p(o++) = b(j);
  }
}

void unpack_parameters(const Eigen::VectorXd& p, MlpModel& m) {
  Eigen::Index o = 0;
  for (auto& w : m.weights) {
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = p(o++);
    }
  }
  for (auto& b : m.biases) {
    for (Eigen::Index j = 0; j < b.size(); ++j) b(j) = p(o++);
  }
}

}  // namespace

Eigen::MatrixXd residual_jacobian(const MlpModel& m, const Eigen::MatrixXd& Xn) {
  const Eigen::Index n = Xn.rows();
  const std::size_t n_layers = m.weights.size();
  std::vector<Eigen::MatrixXd> acts;
  forward_stack(m, Xn, acts);

  std::vector<Eigen::Index> off_w(n_layers), off_b(n_layers);
  Eigen::Index o = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    off_w[l] = o;
    o += m.weights[l].size();
  }
  for (std::size_t l = 0; l < n_layers; ++l) {
    off_b[l] = o;
    o += m.biases[l].size();
  }

  Eigen::MatrixXd jac(n, o);
  Eigen::MatrixXd dz = Eigen::MatrixXd::Ones(n, 1);
  for (std::size_t l = n_layers; l-- > 0;) {
    const Eigen::Index wr = m.weights[l].rows();
    const Eigen::Index wc = m.weights[l].cols();
    for (Eigen::Index i = 0; i < wr; ++i) {
      for (Eigen::Index j = 0; j < wc; ++j) {
        jac.col(off_w[l] + i * wc + j) = acts[l].col(i).cwiseProduct(dz.col(j));
      }
    }
    for (Eigen::Index j = 0; j < wc; ++j) jac.col(off_b[l] + j) = dz.col(j);
    if (l > 0) {
      Eigen::MatrixXd da = dz * m.weights[l].transpose();
      dz = (da.array() * acts[l].array() * (1.0 - acts[l].array())).matrix();
    }
  }
  return jac;
}

Eigen::VectorXd forward_batch(const MlpModel& m, const Eigen::MatrixXd& X) {
  if (X.cols() != 4) throw ConfigError("mlp: feature matrix must have 4 columns");
  std::vector<Eigen::MatrixXd> acts;
  forward_stack(m, normalize_inputs(m, X), acts);
  return acts.back().col(0) * m.norm.out_std + Eigen::VectorXd::Constant(X.rows(), m.norm.out_mean);
}

double forward(const MlpModel& m, const State& x) {
  Eigen::MatrixXd X(1, 4);
  X.row(0) = features(x);
  return forward_batch(m, X)(0);
}

double loss_and_gradients(const MlpModel& m, const Eigen::MatrixXd& Xn,
                          const Eigen::VectorXd& Yn, Gradients& grads) {
  const auto n = Xn.rows();
  if (n == 0 || Yn.size() != n) throw ConfigError("mlp: empty or mismatched batch");
  std::vector<Eigen::MatrixXd> acts;
  forward_stack(m, Xn, acts);

  const std::size_t n_layers = m.weights.size();
  grads.d_weights.resize(n_layers);
  grads.d_biases.resize(n_layers);

  const Eigen::VectorXd err = acts.back().col(0) - Yn;
  const double loss = err.squaredNorm() / static_cast<double>(n);

  // d(loss)/d(output) for the mean of squared errors.
  Eigen::MatrixXd dz = (2.0 / static_cast<double>(n)) * err;
  for (std::size_t l = n_layers; l-- > 0;) {
    grads.d_weights[l].noalias() = acts[l].transpose() * dz;
    grads.d_biases[l] = dz.colwise().sum();
    if (l > 0) {
      Eigen::MatrixXd da = dz * m.weights[l].transpose();
      // Sigmoid derivative from the stored activation: a(1-a).
      dz = (da.array() * acts[l].array() * (1.0 - acts[l].array())).matrix();
    }
  }
  return loss;
}

namespace {

struct SplitData {
  Eigen::MatrixXd X;  ///< raw features
  Eigen::VectorXd y;  ///< raw angles
};

SplitData gather(const Dataset& ds, const std::vector<int>& idx) {
  SplitData out;
  out.X.resize(static_cast<Eigen::Index>(idx.size()), 4);
  out.y.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const DatasetSample& s = ds.samples[static_cast<std::size_t>(idx[i])];
    out.X.row(static_cast<Eigen::Index>(i)) = features(s.x);
    out.y(static_cast<Eigen::Index>(i)) = s.beta;
  }
  return out;
}

/// Physical-space MSE (rad^2) of the model on raw features/targets.
double split_mse(const MlpModel& m, const SplitData& d) {
  if (d.y.size() == 0) return 0;
  const Eigen::VectorXd pred = forward_batch(m, d.X);
  return (pred - d.y).squaredNorm() / static_cast<double>(d.y.size());
}

}  // namespace

TrainOutcome train(const Dataset& ds, const TrainOptions& opts) {
  if (opts.method != "lm" && opts.method != "adam") {
    throw ConfigError("mlp: unknown training method '" + opts.method + "'");
  }
  if (opts.epochs < 0) throw ConfigError("mlp: epochs must be nonnegative");
  if (opts.batch_size <= 0) throw ConfigError("mlp: batch_size must be positive");
  if (!(opts.learning_rate > 0)) throw ConfigError("mlp: learning_rate must be positive");
  if (ds.train_idx.empty() || ds.val_idx.empty()) {
    throw ConfigError("mlp: dataset lacks train/validation splits");
  }

  const SplitData train_d = gather(ds, ds.train_idx);
  const SplitData val_d = gather(ds, ds.val_idx);
  const SplitData test_d = gather(ds, ds.test_idx);

  MlpModel model = make_mlp(opts.hidden, opts.seed);

  // Normalization from the training split only; a degenerate feature keeps
  // a floor scale instead of dividing by zero.
  const auto n_train = train_d.X.rows();
  model.norm.in_mean = train_d.X.colwise().mean();
  for (int c = 0; c < 4; ++c) {
    const double var =
        (train_d.X.col(c).array() - model.norm.in_mean(c)).square().sum() /
        static_cast<double>(n_train);
    model.norm.in_std(c) = std::max(std::sqrt(var), 1.0e-12);
  }
  model.norm.out_mean = train_d.y.mean();
  const double out_var = (train_d.y.array() - model.norm.out_mean).square().sum() /
                         static_cast<double>(n_train);
  model.norm.out_std = std::max(std::sqrt(out_var), 1.0e-12);

  const Eigen::MatrixXd Xn = normalize_inputs(model, train_d.X);
  const Eigen::VectorXd Yn = (train_d.y.array() - model.norm.out_mean) / model.norm.out_std;

  TrainOutcome out;
  TrainReport& report = out.report;
  auto evaluate = [&](const MlpModel& m) {
    report.train_mse.push_back(split_mse(m, train_d));
    report.val_mse.push_back(split_mse(m, val_d));
    report.test_mse.push_back(split_mse(m, test_d));
  };
  evaluate(model);
  out.model = model;
  report.best_epoch = 0;
  double best_val = report.val_mse[0];

  if (opts.method == "lm") {
    // Full-batch Levenberg-Marquardt: one damped Gauss-Newton step per
    // epoch, the damping factor shrinking on accepted steps and growing
    // until a step shortens the residual.  For a net this small the normal
    // matrix (p x p, p = a few hundred) is cheap to factor; the cost sits
    // in J^T J, accumulated over fixed-size row chunks so the reduction
    // order -- and therefore the result -- is independent of thread count.
    const Eigen::Index n_params = static_cast<Eigen::Index>(packed_size(model));
    const Eigen::Index chunk = 16384;
    const Eigen::Index n_chunks = (n_train + chunk - 1) / chunk;
    const int n_workers = std::max(1, std::min<int>(opts.threads, static_cast<int>(n_chunks)));

    auto residuals = [&](const MlpModel& mm) {
      std::vector<Eigen::MatrixXd> acts;
      forward_stack(mm, Xn, acts);
      return Eigen::VectorXd(acts.back().col(0) - Yn);
    };

    Eigen::VectorXd resid = residuals(model);
    double loss = resid.squaredNorm() / static_cast<double>(n_train);
    double mu = 1.0e-3;
    const double mu_max = 1.0e10;
    std::vector<Eigen::MatrixXd> chunk_gram(static_cast<std::size_t>(n_chunks));
    std::vector<Eigen::VectorXd> chunk_grad(static_cast<std::size_t>(n_chunks));

    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
      std::atomic<Eigen::Index> next{0};
      auto accumulate = [&] {
        for (Eigen::Index c = next++; c < n_chunks; c = next++) {
          const Eigen::Index start = c * chunk;
          const Eigen::Index len = std::min(chunk, n_train - start);
          const Eigen::MatrixXd jac = residual_jacobian(model, Xn.middleRows(start, len));
          auto& gram = chunk_gram[static_cast<std::size_t>(c)];
          gram.setZero(n_params, n_params);
          gram.selfadjointView<Eigen::Lower>().rankUpdate(jac.transpose());
          chunk_grad[static_cast<std::size_t>(c)].noalias() =
              jac.transpose() * resid.segment(start, len);
        }
      };
      if (n_workers == 1) {
        accumulate();
      } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(accumulate);
        for (auto& t : pool) t.join();
      }
      Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n_params, n_params);
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(n_params);
      for (Eigen::Index c = 0; c < n_chunks; ++c) {
        gram += chunk_gram[static_cast<std::size_t>(c)];
        grad += chunk_grad[static_cast<std::size_t>(c)];
      }
      gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
      const Eigen::VectorXd damping = gram.diagonal().cwiseMax(1.0e-12);

      Eigen::VectorXd params;
      pack_parameters(model, params);
      bool stepped = false;
      while (!stepped) {
        Eigen::MatrixXd system = gram;
        system.diagonal() += mu * damping;
        const Eigen::VectorXd trial_params = params - Eigen::LDLT<Eigen::MatrixXd>(system).solve(grad);
        MlpModel trial = model;
        unpack_parameters(trial_params, trial);
        const Eigen::VectorXd trial_resid = residuals(trial);
        const double trial_loss = trial_resid.squaredNorm() / static_cast<double>(n_train);
        if (std::isfinite(trial_loss) && trial_loss < loss) {
          model = std::move(trial);
          resid = trial_resid;
          loss = trial_loss;
          mu = std::max(mu * 0.1, 1.0e-13);
          stepped = true;
        } else {
          mu *= 10.0;
          if (mu > mu_max) break;
        }
      }
      if (!stepped) {
        report.message = "damping limit reached at epoch " + std::to_string(epoch) +
                         "; no further descent";
        log_info("mlp: " + report.message);
        break;
      }
      evaluate(model);
      if (report.val_mse.back() < best_val) {
        best_val = report.val_mse.back();
        report.best_epoch = epoch;
        out.model = model;
      }
    }

    report.final_train_mse = report.train_mse[static_cast<std::size_t>(report.best_epoch)];
    report.final_val_mse = report.val_mse[static_cast<std::size_t>(report.best_epoch)];
    report.final_test_mse = report.test_mse[static_cast<std::size_t>(report.best_epoch)];
    return out;
  }

  // Adaptive-moment state, one slot per parameter block.
  const std::size_t n_layers = model.weights.size();
  std::vector<Eigen::MatrixXd> mw(n_layers), vw(n_layers);
  std::vector<Eigen::RowVectorXd> mb(n_layers), vb(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    mw[l] = Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols());
    vw[l] = mw[l];
    mb[l] = Eigen::RowVectorXd::Zero(model.biases[l].size());
    vb[l] = mb[l];
  }
  const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1.0e-8;
  long step = 0;
  double lr = opts.learning_rate;

  std::mt19937_64 shuffle_rng(opts.seed ^ 0x6A09E667F3BCC909ull);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_train));
  std::iota(order.begin(), order.end(), 0);
  Gradients grads;

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    if (opts.lr_decay_every > 0 && (epoch - 1) % opts.lr_decay_every == 0 && epoch > 1) {
      lr *= opts.lr_decay;
    }
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng_below(shuffle_rng, i));
      std::swap(order[i - 1], order[j]);
    }

    bool finite = true;
    for (Eigen::Index start = 0; start < n_train; start += opts.batch_size) {
      const Eigen::Index b = std::min<Eigen::Index>(opts.batch_size, n_train - start);
      Eigen::MatrixXd Xb(b, 4);
      Eigen::VectorXd Yb(b);
      for (Eigen::Index k = 0; k < b; ++k) {
        Xb.row(k) = Xn.row(order[static_cast<std::size_t>(start + k)]);
        Yb(k) = Yn(order[static_cast<std::size_t>(start + k)]);
      }
      const double batch_loss = loss_and_gradients(model, Xb, Yb, grads);
      if (!std::isfinite(batch_loss)) {
        finite = false;
        break;
      }
      ++step;
      const double corr1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double corr2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t l = 0; l < n_layers; ++l) {
        mw[l] = beta1 * mw[l] + (1.0 - beta1) * grads.d_weights[l];
        vw[l].array() =
            beta2 * vw[l].array() + (1.0 - beta2) * grads.d_weights[l].array().square();
        model.weights[l].array() -=
            lr * (mw[l].array() / corr1) / ((vw[l].array() / corr2).sqrt() + adam_eps);
        mb[l] = beta1 * mb[l] + (1.0 - beta1) * grads.d_biases[l];
        vb[l].array() = beta2 * vb[l].array() + (1.0 - beta2) * grads.d_biases[l].array().square();
        model.biases[l].array() -=
            lr * (mb[l].array() / corr1) / ((vb[l].array() / corr2).sqrt() + adam_eps);
      }
    }
    if (!finite) {
      report.aborted = true;
      report.message = "training aborted at epoch " + std::to_string(epoch) +
                       ": non-finite loss";
      log_warn("mlp: " + report.message);
      break;
    }
    evaluate(model);
    if (report.val_mse.back() < best_val) {
      best_val = report.val_mse.back();
      report.best_epoch = epoch;
      out.model = model;
    }
  }

  report.final_train_mse = report.train_mse[static_cast<std::size_t>(report.best_epoch)];
  report.final_val_mse = report.val_mse[static_cast<std::size_t>(report.best_epoch)];
  report.final_test_mse = report.test_mse[static_cast<std::size_t>(report.best_epoch)];
  return out;
}

void save_model(const MlpModel& m, const std::string& path, const TrainReport* report) {
  m.validate();
  json j;
  j["format"] = "pdg-mlp";
  j["version"] = "1";
  j["layer_sizes"] = m.layer_sizes;
  json acts = json::array();
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    acts.push_back(l + 2 < m.layer_sizes.size() ? "sigmoid" : "linear");
  }
  j["activations"] = acts;
  j["weights"] = json::array();
  j["biases"] = json::array();
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    json w = json::array();
    for (Eigen::Index i = 0; i < m.weights[l].rows(); ++i) {
      for (Eigen::Index c = 0; c < m.weights[l].cols(); ++c) w.push_back(m.weights[l](i, c));
    }
    j["weights"].push_back(std::move(w));
    json b = json::array();
    for (Eigen::Index c = 0; c < m.biases[l].size(); ++c) b.push_back(m.biases[l](c));
    j["biases"].push_back(std::move(b));
  }
  j["normalization"]["in_mean"] = {m.norm.in_mean(0), m.norm.in_mean(1), m.norm.in_mean(2),
                                   m.norm.in_mean(3)};
  j["normalization"]["in_std"] = {m.norm.in_std(0), m.norm.in_std(1), m.norm.in_std(2),
                                  m.norm.in_std(3)};
  j["normalization"]["out_mean"] = m.norm.out_mean;
  j["normalization"]["out_std"] = m.norm.out_std;
  if (report) {
    json t;
    t["epochs_evaluated"] = report->train_mse.size();
    t["best_epoch"] = report->best_epoch;
    t["final_train_mse"] = report->final_train_mse;
    t["final_val_mse"] = report->final_val_mse;
    t["final_test_mse"] = report->final_test_mse;
    t["aborted"] = report->aborted;
    if (!report->message.empty()) t["message"] = report->message;
    j["training"] = std::move(t);
  }
  write_text_file(path, j.dump(2) + "\n");
}

MlpModel load_model(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("model " + path + ": " + e.what());
  }
  try {
    if (j.at("format") != "pdg-mlp") {
      throw ConfigError("model " + path + ": unknown format");
    }
    const std::string version = j.at("version").get<std::string>();
    if (version != "1") {
      throw ConfigError("model " + path + ": version '" + version +
                        "' unsupported (expected '1')");
    }
    MlpModel m;
    m.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    const auto& acts = j.at("activations");
    if (acts.size() + 1 != m.layer_sizes.size()) {
      throw ConfigError("model " + path + ": activation list length mismatch");
    }
    for (std::size_t l = 0; l < acts.size(); ++l) {
      const std::string want = l + 1 < acts.size() ? "sigmoid" : "linear";
      if (acts.at(l) != want) {
        throw ConfigError("model " + path + ": unsupported activation layout");
      }
    }
    const auto& jw = j.at("weights");
    const auto& jb = j.at("biases");
    if (jw.size() + 1 != m.layer_sizes.size() || jb.size() + 1 != m.layer_sizes.size()) {
      throw ConfigError("model " + path + ": layer count mismatch");
    }
    for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
      const int rows = m.layer_sizes[l];
      const int cols = m.layer_sizes[l + 1];
      const auto wvals = jw.at(l).get<std::vector<double>>();
      if (static_cast<int>(wvals.size()) != rows * cols) {
        throw ConfigError("model " + path + ": weight size mismatch at layer " +
                          std::to_string(l));
      }
      Eigen::MatrixXd w(rows, cols);
      for (int i = 0; i < rows; ++i) {
        for (int c = 0; c < cols; ++c) w(i, c) = wvals[static_cast<std::size_t>(i * cols + c)];
      }
      m.weights.push_back(std::move(w));
      const auto bvals = jb.at(l).get<std::vector<double>>();
      if (static_cast<int>(bvals.size()) != cols) {
        throw ConfigError("model " + path + ": bias size mismatch at layer " + std::to_string(l));
      }
      Eigen::RowVectorXd b(cols);
      for (int c = 0; c < cols; ++c) b(c) = bvals[static_cast<std::size_t>(c)];
      m.biases.push_back(std::move(b));
    }
    const auto& jn = j.at("normalization");
    for (int c = 0; c < 4; ++c) {
      m.norm.in_mean(c) = jn.at("in_mean").at(c).get<double>();
      m.norm.in_std(c) = jn.at("in_std").at(c).get<double>();
    }
    m.norm.out_mean = jn.at("out_mean").get<double>();
    m.norm.out_std = jn.at("out_std").get<double>();
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw ConfigError("model " + path + ": " + e.what());
  }
}

}  // namespace pdg
