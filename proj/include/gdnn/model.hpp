#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gdnn/admissibility.hpp"
#include "gdnn/basis.hpp"

namespace gdnn {

// Basis of one block V^(i)_j together with a per-entry lookup.
struct BlockBasis {
  BasisSet basis;
  std::vector<int> entry_basis;       // row-major entry -> basis index or -1
  std::vector<std::int8_t> entry_sign;

  explicit BlockBasis(BasisSet b = {});
};

struct BiasSlot {
  int begin = 0;  // positions [begin, end) of one copy of a type 1 irrep
  int end = 0;
};

struct LayerPlan {
  LayerRep rep;
  int degree = 0;
  int channels = 0;
  // blocks[s]: source s = 0 is the input, s >= 1 the output of layer s-1.
  std::vector<BlockBasis> blocks;
  std::vector<BiasSlot> bias_slots;
  std::vector<GroupElement> images;  // rep evaluated at every group element
};

struct CompileOptions {
  bool strict = true;  // refuse non-admissible architectures
};

class GDNNModel {
 public:
  static GDNNModel compile(const ArchitectureSpec& spec, CompileOptions options = {});

  const ArchitectureSpec& spec() const { return spec_; }
  const FiniteMatrixGroup& group() const { return *spec_.group; }
  int depth() const { return static_cast<int>(layers_.size()); }
  const LayerPlan& layer(int l) const { return layers_.at(l); }
  bool admissible() const { return admissible_; }
  bool batchnorm() const { return spec_.batchnorm; }

  int input_channels() const { return spec_.channel(0); }
  int input_dim() const { return group().degree() * input_channels(); }
  int output_dim() const { return layers_.back().degree * layers_.back().channels; }
  // Width of source s (input for s = 0, else output of layer s-1), channels included.
  int source_dim(int s) const;
  int source_channels(int s) const;
  int source_degree(int s) const;
  // Width of h^(l) and offset of source s inside it (newest source first).
  int layer_input_dim(int l) const;
  int source_offset(int l, int s) const;
  int layer_output_dim(int l) const { return layers_[l].degree * layers_[l].channels; }

  // Unsigned images of source s at group element g.
  const GroupElement& source_perm(int s, int g) const;

 private:
  ArchitectureSpec spec_;
  std::vector<LayerPlan> layers_;
  std::vector<std::vector<GroupElement>> source_perms_;
  bool admissible_ = false;
};

// Trainable coefficients plus batch-norm state.
struct LatentWeights {
  // coeffs[l][s][b]: channels(l) x source_channels(s)
  std::vector<std::vector<std::vector<Eigen::MatrixXd>>> coeffs;
  // bias[l]: slots x channels(l)
  std::vector<Eigen::MatrixXd> bias;
  // Batch norm of hidden layers (empty vectors when disabled).
  std::vector<Eigen::VectorXd> bn_gamma, bn_beta, bn_mean, bn_var;

  std::size_t trainable_size() const;
  std::vector<double> flatten() const;
  void assign(const std::vector<double>& flat);
};

LatentWeights zero_weights(const GDNNModel& model);

// "normal": N(0, 1/fan_in) coefficients; "standard_normal": N(0, 1);
// "zeros". Biases start at zero, batch norm at the identity.
LatentWeights init_weights(const GDNNModel& model, std::uint64_t seed,
                           const std::string& scheme = "normal");

std::size_t parameter_count(const GDNNModel& model);

struct DenseLayer {
  Eigen::MatrixXd V;
  Eigen::VectorXd b;
};
std::vector<DenseLayer> materialize(const GDNNModel& model, const LatentWeights& w);

enum class Mode { Train, Eval };

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

struct LayerTrace {
  Eigen::MatrixXd input;     // h^(l)
  Eigen::MatrixXd pre;       // V h
  Eigen::MatrixXd z;         // V h + b
  Eigen::MatrixXd relu;
  Eigen::MatrixXd xhat;      // batch norm only
  Eigen::VectorXd mean, var, scale;  // per channel; scale = gamma / sqrt(var + eps)
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;
  Eigen::MatrixXd output;
  Mode mode = Mode::Eval;
};

// Columns of x are samples; rows are input positions (position-major,
// channel-minor).
ForwardTrace forward(const GDNNModel& model, const LatentWeights& w, const Eigen::MatrixXd& x,
                     Mode mode = Mode::Eval);
Eigen::MatrixXd predict(const GDNNModel& model, const LatentWeights& w, const Eigen::MatrixXd& x,
                        Mode mode = Mode::Eval);

// Gradient of sum(dout .* output) with respect to the trainable weights.
LatentWeights backward(const GDNNModel& model, const LatentWeights& w, const ForwardTrace& trace,
                       const Eigen::MatrixXd& dout);

// Running statistics update after a training-mode forward pass.
void update_batchnorm_stats(LatentWeights& w, const ForwardTrace& trace,
                            double momentum = kBatchNormMomentum);

// max over generators g and columns x of |f(g x) - f(x)|.
double invariance_deviation(const GDNNModel& model, const LatentWeights& w, const Eigen::MatrixXd& x,
                            Mode mode = Mode::Eval);

// Weights of the equivalent network f^(i+1) = [relu(W f^(i) + b); f^(i)].
// Batch norm, if present, is ignored.
std::vector<DenseLayer> apparent_weights(const GDNNModel& model, const LatentWeights& w);
Eigen::MatrixXd plain_forward(const std::vector<DenseLayer>& apparent, const Eigen::MatrixXd& x);

// max over generators of |rho(g) W - W psi(g)| for the apparent weights.
double apparent_equivariance_defect(const GDNNModel& model, const std::vector<DenseLayer>& w);

// Rescales/permutes/flips the outputs of hidden layer `layer` (0-based)
// by C P Z and compensates in every later layer; returns the largest
// output change over the columns of x.
double cpz_reparam_audit(const std::vector<DenseLayer>& apparent, int layer,
                         const Eigen::VectorXd& c, const std::vector<int>& p,
                         const Eigen::VectorXd& z, const Eigen::MatrixXd& x);

// Latent weights of f(x) = U_d crelu(U_{d-1} ... crelu(U_1 x)).
LatentWeights import_crelu(const GDNNModel& model, const std::vector<Eigen::MatrixXd>& u,
                           double tol = 1e-9);

// Coefficients of one dense block (rows x cols expanded over channels), or
// nothing if it is not in the span of the block basis up to tol.
std::optional<std::vector<Eigen::MatrixXd>> project_block(const BlockBasis& block,
                                                         const Eigen::MatrixXd& dense, int kout,
                                                         int kin, double tol = 1e-9);

// Coefficients of dense block matrices in the model's bases. blocks[l][s]
// may be empty (treated as zero). Throws NotInSpan beyond tol.
LatentWeights project_dense(const GDNNModel& model,
                            const std::vector<std::vector<Eigen::MatrixXd>>& blocks,
                            double tol = 1e-9);

// Dense matrix of e (x) I_channels.
Eigen::MatrixXd signed_matrix(const GroupElement& e, int channels = 1);

}  // namespace gdnn
