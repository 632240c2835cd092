#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gdnn/admissibility.hpp"
#include "gdnn/basis.hpp"
#include "gdnn/model.hpp"
#include "gdnn/train.hpp"

namespace testing_support {

using namespace gdnn;

// Layers given as (pair class, multiplicity) lists, closed by the trivial irrep.
inline ArchitectureSpec spec_of(const GroupContext& ctx,
                                const std::vector<std::vector<std::pair<int, int>>>& layers,
                                bool output = true) {
  ArchitectureSpec s;
  s.group = ctx.group_ptr();
  for (const auto& l : layers) {
    std::vector<Summand> summands;
    for (auto [c, m] : l) summands.push_back({ctx.irrep(c), m});
    s.layers.emplace_back(std::move(summands));
  }
  if (output) s.layers.push_back(trivial_layer(s.group));
  return s;
}

inline ArchitectureSpec chain(const GroupContext& ctx, const std::vector<int>& classes,
                              bool output = true) {
  std::vector<std::vector<std::pair<int, int>>> layers;
  for (int c : classes) layers.push_back({{c, 1}});
  return spec_of(ctx, layers, output);
}

// Random admissible architecture with 1..max_hidden hidden layers of up to
// two summands each, random multiplicities and channel counts.
inline ArchitectureSpec random_admissible(const GroupContext& ctx, std::mt19937_64& rng,
                                          int max_hidden = 3, bool channels = true) {
  std::vector<std::vector<std::pair<int, int>>> layers;
  const int hidden = 1 + static_cast<int>(rng() % max_hidden);
  for (int l = 0; l < hidden; ++l) {
    auto next = admissible_next(ctx, spec_of(ctx, layers, false), false);
    if (next.empty()) break;
    std::shuffle(next.begin(), next.end(), rng);
    const std::size_t k = std::min<std::size_t>(next.size(), 1 + rng() % 2);
    std::vector<std::pair<int, int>> layer;
    for (std::size_t i = 0; i < k; ++i) layer.emplace_back(next[i], 1 + static_cast<int>(rng() % 2));
    layers.push_back(layer);
  }
  auto spec = spec_of(ctx, layers);
  if (channels) {
    spec.channels.resize(spec.layers.size() + 1);
    for (auto& c : spec.channels) c = 1 + static_cast<int>(rng() % 2);
    spec.channels.back() = 1;
  }
  return spec;
}

// Prefix of the signed binary product architecture with random
// multiplicities and channels; the group lattice is never enumerated.
inline ArchitectureSpec random_binprod(std::mt19937_64& rng, int m = 16) {
  const auto full = binprod_architectures(m).type2;
  const int hidden = 1 + static_cast<int>(rng() % (full.layers.size() - 1));
  ArchitectureSpec spec;
  spec.group = full.group;
  for (int l = 0; l < hidden; ++l) {
    std::vector<Summand> s = full.layers[l].summands();
    for (auto& x : s) x.multiplicity = 1 + static_cast<int>(rng() % 2);
    spec.layers.emplace_back(std::move(s));
  }
  spec.layers.push_back(trivial_layer(spec.group));
  spec.channels.assign(spec.layers.size() + 1, 1);
  for (std::size_t i = 0; i + 1 < spec.channels.size(); ++i)
    spec.channels[i + 1] = 1 + static_cast<int>(rng() % 2);
  spec.channels.back() = 1;
  return spec;
}

inline Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

// Normal coefficients, random biases and batch-norm state.
inline LatentWeights random_weights(const GDNNModel& model, std::mt19937_64& rng) {
  LatentWeights w = init_weights(model, rng(), "normal");
  for (auto& b : w.bias) b = gaussian(b.rows(), b.cols(), rng);
  std::uniform_real_distribution<double> pos(0.5, 2.0);
  for (std::size_t l = 0; l < w.bn_gamma.size(); ++l)
    for (Eigen::Index i = 0; i < w.bn_gamma[l].size(); ++i) {
      w.bn_gamma[l](i) = pos(rng);
      w.bn_beta[l](i) = pos(rng) - 1.0;
      w.bn_mean[l](i) = pos(rng);
      w.bn_var[l](i) = pos(rng);
    }
  return w;
}

// Random equivariant weights of a CReLU network whose hidden layers carry
// the model's layer representations.
inline std::vector<Eigen::MatrixXd> random_crelu(const GDNNModel& model, std::mt19937_64& rng) {
  const auto& g = model.group();
  std::vector<Eigen::MatrixXd> u;
  for (int l = 0; l < model.depth(); ++l) {
    std::vector<GroupElement> rho, pi;
    for (int x : g.generators()) {
      rho.push_back(model.layer(l).images[x]);
      pi.push_back(l == 0 ? g.element(x) : unravel_raw(model.layer(l - 1).images[x]));
    }
    auto basis = build_basis(rho, pi);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(basis.rows, basis.cols);
    std::normal_distribution<double> dist;
    for (const auto& mat : basis.matrices) {
      const double c = dist(rng);
      for (const auto& e : mat) m(e.row, e.col) = e.sign * c;
    }
    u.push_back(m);
  }
  return u;
}

inline Eigen::MatrixXd crelu_forward(const std::vector<Eigen::MatrixXd>& u, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd y = u[0] * x;
  for (std::size_t l = 1; l < u.size(); ++l) {
    Eigen::MatrixXd c(2 * y.rows(), y.cols());
    c << y.cwiseMax(0.0), (-y).cwiseMax(0.0);
    y = u[l] * c;
  }
  return y;
}

}  // namespace testing_support
