#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "gdnn/model.hpp"

namespace gdnn {

// Mean binary cross-entropy of logits against labels in {0, 1}.
double bce_with_logits(const Eigen::MatrixXd& logits, const Eigen::VectorXd& labels);

struct LossAndGradient {
  double loss = 0.0;
  LatentWeights grad;
};

LossAndGradient loss_and_gradient(const GDNNModel& model, const LatentWeights& w,
                                  const Eigen::MatrixXd& x, const Eigen::VectorXd& labels,
                                  Mode mode = Mode::Train, ForwardTrace* trace_out = nullptr);

// Adam with learning rate lr * decay^t at step t (t counted from 0).
class Adam {
 public:
  Adam(std::size_t size, double lr, double decay = 1.0, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  void step(std::vector<double>& params, const std::vector<double>& grad);
  long steps() const { return t_; }
  double learning_rate(long step) const;
  double current_learning_rate() const { return learning_rate(t_); }

 private:
  double lr_, decay_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

struct Split {
  std::vector<int> train;
  std::vector<int> val;
};

// Per class, round(fraction * class size) samples go to the training set.
Split stratified_split(const Eigen::VectorXd& labels, double fraction, std::uint64_t seed);

struct Metrics {
  double loss = 0.0;
  double accuracy = 0.0;
};

Metrics evaluate(const GDNNModel& model, const LatentWeights& w, const Eigen::MatrixXd& x,
                 const Eigen::VectorXd& labels, const std::vector<int>& rows);

struct TrainConfig {
  int epochs = 5;
  int batch_size = 64;
  double lr = 0.01;
  double lr_decay = 0.99;
};

struct RunResult {
  Metrics initial_train, initial_val, final_train, final_val;
};

RunResult train_run(const GDNNModel& model, LatentWeights& w, const Eigen::MatrixXd& x,
                    const Eigen::VectorXd& labels, const Split& split, const TrainConfig& config,
                    std::uint64_t seed);

// ------------------------------------------------------------ binary product

struct BinProdTask {
  int m = 0;
  Eigen::MatrixXd x;       // m x 2^(m/2), one column per input
  Eigen::VectorXd target;  // product values in {-1, +1}
  Eigen::VectorXd labels;  // (target + 1) / 2
};

BinProdTask binprod_task(int m);

struct BinProdArchitectures {
  ArchitectureSpec type2;      // the signed architecture
  ArchitectureSpec type1;      // every irrep replaced by rho_HH
  ArchitectureSpec unraveled;  // every hidden irrep unraveled
};

BinProdArchitectures binprod_architectures(int m);

// Weights of the type 2 model computing the product exactly.
LatentWeights binprod_closed_form(const GDNNModel& type2);

// Type 2 weights carried into the unraveled model (same function).
LatentWeights embed_unraveled(const GDNNModel& type2, const LatentWeights& w,
                              const GDNNModel& unraveled);

struct ExperimentConfig {
  int m = 16;
  int seeds = 24;
  std::uint64_t base_seed = 0;
  TrainConfig train;
  double train_fraction = 0.2;
  std::string init_scheme = "standard_normal";
  int threads = 1;
  std::vector<std::string> architectures = {"type2", "type1", "unraveled", "unraveled_type2_init"};
};

struct ArchitectureResult {
  std::string name;
  std::size_t parameters = 0;
  std::vector<RunResult> runs;
};

std::vector<ArchitectureResult> run_binprod_experiment(const ExperimentConfig& config);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};
MeanStd mean_std(const std::vector<double>& values);

}  // namespace gdnn
