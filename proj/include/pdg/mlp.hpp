#pragma once

#include "pdg/core.hpp"
#include "pdg/sampler.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace pdg {

/// Per-feature affine maps applied before and after the network.  Computed
/// on the training split; stored with the model so inference is
/// self-contained.
struct Normalization {
  Eigen::RowVector4d in_mean = Eigen::RowVector4d::Zero();
  Eigen::RowVector4d in_std = Eigen::RowVector4d::Ones();
  double out_mean = 0;
  double out_std = 1;
};

/// Fully connected network, sigmoid hidden layers and a linear output.
/// Weights are stored input-by-output so a batch row-vector multiplies from
/// the left.
struct MlpModel {
  std::vector<int> layer_sizes;            ///< e.g. {4, 15, 15, 15, 1}
  std::vector<Eigen::MatrixXd> weights;    ///< per layer, (in x out)
  std::vector<Eigen::RowVectorXd> biases;  ///< per layer
  Normalization norm;

  void validate() const;  ///< throws ConfigError on inconsistent shapes
  std::size_t parameter_count() const;
};

/// Fresh model: 4 inputs, the given hidden widths, 1 output.  Weights drawn
/// uniformly in +-sqrt(6/(fan_in+fan_out)), biases zero.
MlpModel make_mlp(const std::vector<int>& hidden, std::uint64_t seed);

/// Raw (unnormalized) feature row for a flight state.
Eigen::RowVector4d features(const State& x);

/// Steering angle prediction for one state.
double forward(const MlpModel& m, const State& x);

/// Batched prediction.  X holds one raw feature row per sample.
Eigen::VectorXd forward_batch(const MlpModel& m, const Eigen::MatrixXd& X);

struct Gradients {
  std::vector<Eigen::MatrixXd> d_weights;
  std::vector<Eigen::RowVectorXd> d_biases;
};

/// Mean squared error over a normalized batch and its exact parameter
/// gradient by reverse accumulation.  Xn/Yn must already be normalized.
double loss_and_gradients(const MlpModel& m, const Eigen::MatrixXd& Xn,
                          const Eigen::VectorXd& Yn, Gradients& grads);

/// Jacobian of the raw (normalized-space) network output w.r.t. every
/// parameter, one row per input row of Xn.  Columns pack all weight
/// matrices first (layer by layer, row-major) and then all bias vectors.
/// Row i relates to the single-sample gradient by dL_i/dp = 2 r_i J_i.
Eigen::MatrixXd residual_jacobian(const MlpModel& m, const Eigen::MatrixXd& Xn);

struct TrainOptions {
  /// "lm": full-batch Levenberg-Marquardt, one damped Gauss-Newton step per
  /// epoch (batch_size / learning_rate unused).  "adam": adaptive-moment
  /// mini-batch descent.  LM is the default: on this problem first-order
  /// training floors around 4e-4 rad^2 test MSE while LM reaches a few 1e-5
  /// with the same budget (see the gate suite).
  std::string method = "lm";
  int epochs = 1000;
  int batch_size = 256;
  double learning_rate = 1.0e-3;
  double lr_decay = 1.0;    ///< factor applied every lr_decay_every epochs
  int lr_decay_every = 0;   ///< 0 = constant rate
  std::uint64_t seed = 0;
  std::vector<int> hidden = {15, 15, 15};
  int threads = 1;  ///< LM curvature accumulation only; results are
                    ///< bit-identical for any value
};

/// Split MSEs per evaluation (entry 0 is the untrained model), in physical
/// angle units (rad^2).
struct TrainReport {
  std::vector<double> train_mse, val_mse, test_mse;
  int best_epoch = 0;
  double final_train_mse = 0, final_val_mse = 0, final_test_mse = 0;  ///< at best epoch
  bool aborted = false;
  std::string message;
};

struct TrainOutcome {
  MlpModel model;  ///< best-validation-epoch weights
  TrainReport report;
};

/// Training on the dataset's stored split, method per TrainOptions.  The
/// returned model is the best-validation-epoch one.  Non-finite loss (adam)
/// or a damping blow-up (lm) aborts with the best model reached so far.
TrainOutcome train(const Dataset& ds, const TrainOptions& opts);

/// JSON round trip; reloaded models reproduce forward outputs bit-exactly.
/// An optional report is embedded as inert metadata.
void save_model(const MlpModel& m, const std::string& path,
                const TrainReport* report = nullptr);
MlpModel load_model(const std::string& path);

}  // namespace pdg
