#include "gdnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gdnn/error.hpp"

namespace gdnn {

BlockBasis::BlockBasis(BasisSet b) : basis(std::move(b)) {
  const std::size_t n = static_cast<std::size_t>(basis.rows) * basis.cols;
  entry_basis.assign(n, -1);
  entry_sign.assign(n, 0);
  for (std::size_t k = 0; k < basis.matrices.size(); ++k)
    for (const auto& e : basis.matrices[k]) {
      auto idx = static_cast<std::size_t>(e.row) * basis.cols + e.col;
      if (entry_basis[idx] >= 0)
        fail(ErrorCode::InvalidArgument, "basis matrices must have disjoint supports");
      entry_basis[idx] = static_cast<int>(k);
      entry_sign[idx] = static_cast<std::int8_t>(e.sign);
    }
}

Eigen::MatrixXd signed_matrix(const GroupElement& e, int channels) {
  const int n = e.degree();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n * channels, n * channels);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < channels; ++c) m(e.image(i) * channels + c, i * channels + c) = e.sign(i);
  return m;
}

// ------------------------------------------------------------------ compile

GDNNModel GDNNModel::compile(const ArchitectureSpec& spec, CompileOptions options) {
  if (!spec.group) fail(ErrorCode::InvalidArgument, "architecture has no group");
  if (spec.layers.empty()) fail(ErrorCode::InvalidArgument, "architecture has no layers");
  const auto& g = *spec.group;
  if (!g.is_unsigned())
    fail(ErrorCode::NotOrdinaryPerm, "the input group must act by ordinary permutations");
  const int d = spec.depth();
  if (!spec.channels.empty() && static_cast<int>(spec.channels.size()) != d + 1)
    fail(ErrorCode::ShapeMismatch, "channels needs one entry per layer plus the input");
  for (int k : spec.channels)
    if (k < 1) fail(ErrorCode::ShapeMismatch, "channel counts must be positive");
  for (const auto& layer : spec.layers)
    if (layer.group_ptr().get() != spec.group.get())
      fail(ErrorCode::InvalidArgument, "layer representation belongs to another group");
  for (const auto& s : spec.layers.back().summands())
    if (s.irrep->H().order() != g.order() || s.irrep->type() != 1)
      fail(ErrorCode::InvalidArgument, "the last layer must be the trivial representation");

  GDNNModel m;
  m.spec_ = spec;
  auto report = check_admissible(spec);
  m.admissible_ = report.admissible;
  if (options.strict && !report.admissible)
    fail(ErrorCode::NotAdmissible,
         "architecture is not admissible (layer " + std::to_string(report.failure->layer) +
             ", summand " + std::to_string(report.failure->summand) + ")");

  std::vector<int> gens = g.generators();
  if (gens.empty()) gens.push_back(0);

  m.source_perms_.push_back(g.elements());
  for (int l = 0; l < d; ++l) {
    LayerPlan plan;
    plan.rep = spec.layers[l];
    plan.degree = plan.rep.degree();
    plan.channels = spec.channel(l + 1);
    plan.images.reserve(g.order());
    for (std::size_t x = 0; x < g.order(); ++x)
      plan.images.push_back(plan.rep.evaluate(static_cast<int>(x)));

    std::vector<GroupElement> rho_gens;
    for (int s : gens) rho_gens.push_back(plan.images[s]);
    std::size_t total = 0;
    for (int s = 0; s <= l; ++s) {
      std::vector<GroupElement> pi_gens;
      for (int x : gens) pi_gens.push_back(m.source_perms_[s][x]);
      plan.blocks.emplace_back(build_basis_checked(rho_gens, pi_gens));
      total += plan.blocks.back().basis.size();
    }
    if (total == 0)
      fail(ErrorCode::BasisEmpty, "layer " + std::to_string(l + 1) + " has no equivariant weights");

    int offset = 0;
    for (const auto& s : plan.rep.summands()) {
      const int n = s.irrep->degree();
      for (int c = 0; c < s.multiplicity; ++c) {
        if (s.irrep->type() == 1) plan.bias_slots.push_back({offset, offset + n});
        offset += n;
      }
    }

    std::vector<GroupElement> perms;
    perms.reserve(g.order());
    for (const auto& e : plan.images) perms.push_back(e.unsigned_part());
    m.source_perms_.push_back(std::move(perms));
    m.layers_.push_back(std::move(plan));
  }
  return m;
}

int GDNNModel::source_channels(int s) const { return spec_.channel(s); }

int GDNNModel::source_degree(int s) const {
  return s == 0 ? group().degree() : layers_[s - 1].degree;
}

int GDNNModel::source_dim(int s) const { return source_degree(s) * source_channels(s); }

int GDNNModel::layer_input_dim(int l) const {
  int total = 0;
  for (int s = 0; s <= l; ++s) total += source_dim(s);
  return total;
}

int GDNNModel::source_offset(int l, int s) const {
  int off = 0;
  for (int t = s + 1; t <= l; ++t) off += source_dim(t);
  return off;
}

const GroupElement& GDNNModel::source_perm(int s, int g) const { return source_perms_.at(s).at(g); }

// ------------------------------------------------------------------ weights

std::size_t LatentWeights::trainable_size() const {
  std::size_t n = 0;
  for (const auto& l : coeffs)
    for (const auto& s : l)
      for (const auto& b : s) n += b.size();
  for (const auto& b : bias) n += b.size();
  for (const auto& v : bn_gamma) n += v.size();
  for (const auto& v : bn_beta) n += v.size();
  return n;
}

namespace {

template <typename F>
void visit_trainable(LatentWeights& w, F&& f) {
  for (auto& l : w.coeffs)
    for (auto& s : l)
      for (auto& b : s) f(b.data(), b.size());
  for (auto& b : w.bias) f(b.data(), b.size());
  for (auto& v : w.bn_gamma) f(v.data(), v.size());
  for (auto& v : w.bn_beta) f(v.data(), v.size());
}

}  // namespace

std::vector<double> LatentWeights::flatten() const {
  std::vector<double> out;
  out.reserve(trainable_size());
  visit_trainable(const_cast<LatentWeights&>(*this), [&](double* p, Eigen::Index n) {
    out.insert(out.end(), p, p + n);
  });
  return out;
}

void LatentWeights::assign(const std::vector<double>& flat) {
  if (flat.size() != trainable_size()) fail(ErrorCode::ShapeMismatch, "flat parameter size mismatch");
  std::size_t pos = 0;
  visit_trainable(*this, [&](double* p, Eigen::Index n) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
              flat.begin() + static_cast<std::ptrdiff_t>(pos + n), p);
    pos += n;
  });
}

LatentWeights zero_weights(const GDNNModel& model) {
  LatentWeights w;
  const int d = model.depth();
  w.coeffs.resize(d);
  for (int l = 0; l < d; ++l) {
    const auto& plan = model.layer(l);
    for (int s = 0; s <= l; ++s) {
      std::vector<Eigen::MatrixXd> mats(
          plan.blocks[s].basis.size(),
          Eigen::MatrixXd::Zero(plan.channels, model.source_channels(s)));
      w.coeffs[l].push_back(std::move(mats));
    }
    w.bias.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(plan.bias_slots.size()),
                                           plan.channels));
  }
  if (model.batchnorm())
    for (int l = 0; l + 1 < d; ++l) {
      const int k = model.layer(l).channels;
      w.bn_gamma.push_back(Eigen::VectorXd::Ones(k));
      w.bn_beta.push_back(Eigen::VectorXd::Zero(k));
      w.bn_mean.push_back(Eigen::VectorXd::Zero(k));
      w.bn_var.push_back(Eigen::VectorXd::Ones(k));
    }
  return w;
}

LatentWeights init_weights(const GDNNModel& model, std::uint64_t seed, const std::string& scheme) {
  if (scheme != "normal" && scheme != "standard_normal" && scheme != "zeros")
    fail(ErrorCode::UnknownScheme, "unknown initialization scheme: " + scheme);
  LatentWeights w = zero_weights(model);
  if (scheme == "zeros") return w;
  std::mt19937_64 rng(seed);
  for (int l = 0; l < model.depth(); ++l) {
    const double stddev =
        scheme == "normal" ? 1.0 / std::sqrt(static_cast<double>(model.layer_input_dim(l))) : 1.0;
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& s : w.coeffs[l])
      for (auto& b : s)
        for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = dist(rng);
  }
  return w;
}

std::size_t parameter_count(const GDNNModel& model) {
  return zero_weights(model).trainable_size();
}

std::vector<DenseLayer> materialize(const GDNNModel& model, const LatentWeights& w) {
  std::vector<DenseLayer> out;
  for (int l = 0; l < model.depth(); ++l) {
    const auto& plan = model.layer(l);
    const int kout = plan.channels;
    DenseLayer dl;
    dl.V = Eigen::MatrixXd::Zero(model.layer_output_dim(l), model.layer_input_dim(l));
    for (int s = 0; s <= l; ++s) {
      const auto& block = plan.blocks[s];
      const int kin = model.source_channels(s);
      const int off = model.source_offset(l, s);
      const int cols = block.basis.cols;
      for (int r = 0; r < block.basis.rows; ++r)
        for (int c = 0; c < cols; ++c) {
          const auto idx = static_cast<std::size_t>(r) * cols + c;
          const int b = block.entry_basis[idx];
          if (b < 0) continue;
          const double sg = block.entry_sign[idx];
          dl.V.block(r * kout, off + c * kin, kout, kin) = sg * w.coeffs[l][s][b];
        }
    }
    dl.b = Eigen::VectorXd::Zero(model.layer_output_dim(l));
    for (std::size_t k = 0; k < plan.bias_slots.size(); ++k)
      for (int p = plan.bias_slots[k].begin; p < plan.bias_slots[k].end; ++p)
        for (int co = 0; co < kout; ++co) dl.b(p * kout + co) = w.bias[l](static_cast<Eigen::Index>(k), co);
    out.push_back(std::move(dl));
  }
  return out;
}

// ------------------------------------------------------------------ forward

namespace {

// Per-channel reductions over rows p * k + c.
Eigen::VectorXd channel_sum(const Eigen::MatrixXd& m, int k) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(k);
  for (Eigen::Index r = 0; r < m.rows(); ++r) s(r % k) += m.row(r).sum();
  return s;
}

Eigen::MatrixXd channel_broadcast(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  const auto k = v.size();
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) m.row(r).setConstant(v(r % k));
  return m;
}

}  // namespace

ForwardTrace forward(const GDNNModel& model, const LatentWeights& w, const Eigen::MatrixXd& x,
                     Mode mode) {
  if (x.rows() != model.input_dim()) fail(ErrorCode::ShapeMismatch, "input has wrong dimension");
  const auto dense = materialize(model, w);
  const int d = model.depth();
  ForwardTrace trace;
  trace.mode = mode;
  trace.layers.resize(d);
  Eigen::MatrixXd h = x;
  const Eigen::Index batch = x.cols();
  for (int l = 0; l < d; ++l) {
    auto& t = trace.layers[l];
    t.input = h;
    t.pre = dense[l].V * h;
    t.z = t.pre.colwise() + dense[l].b;
    if (l + 1 == d) {
      trace.output = t.z;
      break;
    }
    t.relu = t.z.cwiseMax(0.0);
    Eigen::MatrixXd u;
    if (model.batchnorm()) {
      const int k = model.layer(l).channels;
      const double count = static_cast<double>(model.layer(l).degree) * static_cast<double>(batch);
      if (mode == Mode::Train) {
        t.mean = channel_sum(t.relu, k) / count;
        Eigen::MatrixXd centred = t.relu - channel_broadcast(t.mean, t.relu.rows(), batch);
        t.var = channel_sum(centred.cwiseProduct(centred), k) / count;
      } else {
        t.mean = w.bn_mean[l];
        t.var = w.bn_var[l];
      }
      Eigen::VectorXd inv_std = (t.var.array() + kBatchNormEps).rsqrt();
      t.scale = w.bn_gamma[l].cwiseProduct(inv_std);
      t.xhat = (t.relu - channel_broadcast(t.mean, t.relu.rows(), batch))
                   .cwiseProduct(channel_broadcast(inv_std, t.relu.rows(), batch));
      Eigen::MatrixXd gamma = channel_broadcast(w.bn_gamma[l], t.relu.rows(), batch);
      Eigen::MatrixXd beta = channel_broadcast(w.bn_beta[l], t.relu.rows(), batch);
      Eigen::MatrixXd scale = channel_broadcast(t.scale, t.relu.rows(), batch);
      u = gamma.cwiseProduct(t.xhat) + beta - 0.5 * scale.cwiseProduct(t.pre);
    } else {
      u = t.relu - 0.5 * t.pre;
    }
    Eigen::MatrixXd next(u.rows() + h.rows(), batch);
    next << u, h;
    h = std::move(next);
  }
  return trace;
}

Eigen::MatrixXd predict(const GDNNModel& model, const LatentWeights& w, const Eigen::MatrixXd& x,
                        Mode mode) {
  return forward(model, w, x, mode).output;
}

double invariance_deviation(const GDNNModel& model, const LatentWeights& w, const Eigen::MatrixXd& x,
                            Mode mode) {
  const Eigen::MatrixXd base = predict(model, w, x, mode);
  double worst = 0.0;
  for (const auto& g : model.group().generator_elements()) {
    Eigen::MatrixXd moved = signed_matrix(g, model.input_channels()) * x;
    worst = std::max(worst, (predict(model, w, moved, mode) - base).cwiseAbs().maxCoeff());
  }
  return worst;
}

LatentWeights backward(const GDNNModel& model, const LatentWeights& w, const ForwardTrace& trace,
                       const Eigen::MatrixXd& dout) {
  const int d = model.depth();
  const auto dense = materialize(model, w);
  LatentWeights grad = zero_weights(model);
  for (auto& v : grad.bn_gamma) v.setZero();
  const Eigen::Index batch = dout.cols();

  std::vector<Eigen::MatrixXd> dpre(d);
  dpre[d - 1] = dout;
  Eigen::MatrixXd dh = dense[d - 1].V.transpose() * dout;
  Eigen::VectorXd db_last = dout.rowwise().sum();
  std::vector<Eigen::VectorXd> db(d);
  db[d - 1] = db_last;

  for (int l = d - 2; l >= 0; --l) {
    const auto& t = trace.layers[l];
    const int rows = model.layer_output_dim(l);
    Eigen::MatrixXd du = dh.topRows(rows);
    Eigen::MatrixXd dh_rest = dh.bottomRows(dh.rows() - rows);
    Eigen::MatrixXd mask = (t.z.array() > 0.0).cast<double>();
    Eigen::MatrixXd dz, dp;
    if (model.batchnorm()) {
      const int k = model.layer(l).channels;
      const double count = static_cast<double>(model.layer(l).degree) * static_cast<double>(batch);
      Eigen::VectorXd inv_std = (t.var.array() + kBatchNormEps).rsqrt();
      Eigen::MatrixXd inv_b = channel_broadcast(inv_std, rows, batch);
      Eigen::MatrixXd gamma_b = channel_broadcast(w.bn_gamma[l], rows, batch);
      grad.bn_beta[l] = channel_sum(du, k);
      grad.bn_gamma[l] = channel_sum(du.cwiseProduct(t.xhat), k) -
                         0.5 * channel_sum(du.cwiseProduct(t.pre), k).cwiseProduct(inv_std);
      Eigen::MatrixXd dxhat = du.cwiseProduct(gamma_b);
      Eigen::MatrixXd dr;
      if (trace.mode == Mode::Train) {
        Eigen::VectorXd sum_dx = channel_sum(dxhat, k);
        Eigen::VectorXd sum_dx_x = channel_sum(dxhat.cwiseProduct(t.xhat), k);
        // Dependence of the -1/2 * scale * pre term on the batch variance.
        Eigen::VectorXd ds = 0.5 * channel_sum(du.cwiseProduct(t.pre), k)
                                      .cwiseProduct(w.bn_gamma[l])
                                      .cwiseProduct(inv_std.cwiseProduct(inv_std));
        dr = (count * dxhat - channel_broadcast(sum_dx, rows, batch) -
              t.xhat.cwiseProduct(channel_broadcast(sum_dx_x, rows, batch)))
                 .cwiseProduct(inv_b) /
             count;
        dr += t.xhat.cwiseProduct(channel_broadcast(ds, rows, batch)) / count;
      } else {
        dr = dxhat.cwiseProduct(inv_b);
      }
      dz = dr.cwiseProduct(mask);
      dp = dz - 0.5 * channel_broadcast(t.scale, rows, batch).cwiseProduct(du);
    } else {
      dz = du.cwiseProduct(mask);
      dp = dz - 0.5 * du;
    }
    db[l] = dz.rowwise().sum();
    dpre[l] = dp;
    dh = dh_rest + dense[l].V.transpose() * dp;
  }

  for (int l = 0; l < d; ++l) {
    const auto& plan = model.layer(l);
    const int kout = plan.channels;
    Eigen::MatrixXd dv = dpre[l] * trace.layers[l].input.transpose();
    for (int s = 0; s <= l; ++s) {
      const auto& block = plan.blocks[s];
      const int kin = model.source_channels(s);
      const int off = model.source_offset(l, s);
      const int cols = block.basis.cols;
      for (int r = 0; r < block.basis.rows; ++r)
        for (int c = 0; c < cols; ++c) {
          const auto idx = static_cast<std::size_t>(r) * cols + c;
          const int b = block.entry_basis[idx];
          if (b < 0) continue;
          grad.coeffs[l][s][b] += static_cast<double>(block.entry_sign[idx]) * dv.block(r * kout, off + c * kin, kout, kin);
        }
    }
    for (std::size_t k = 0; k < plan.bias_slots.size(); ++k)
      for (int p = plan.bias_slots[k].begin; p < plan.bias_slots[k].end; ++p)
        for (int co = 0; co < kout; ++co)
          grad.bias[l](static_cast<Eigen::Index>(k), co) += db[l](p * kout + co);
  }
  return grad;
}

void update_batchnorm_stats(LatentWeights& w, const ForwardTrace& trace, double momentum) {
  for (std::size_t l = 0; l < w.bn_mean.size(); ++l) {
    w.bn_mean[l] = momentum * w.bn_mean[l] + (1.0 - momentum) * trace.layers[l].mean;
    w.bn_var[l] = momentum * w.bn_var[l] + (1.0 - momentum) * trace.layers[l].var;
  }
}

// ----------------------------------------------------------------- apparent

std::vector<DenseLayer> apparent_weights(const GDNNModel& model, const LatentWeights& w) {
  auto dense = materialize(model, w);
  std::vector<DenseLayer> out;
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(model.input_dim(), model.input_dim());
  for (int l = 0; l < model.depth(); ++l) {
    DenseLayer dl{dense[l].V * a, dense[l].b};
    if (l + 1 < model.depth()) {
      const auto rows = dl.V.rows();
      Eigen::MatrixXd next = Eigen::MatrixXd::Zero(rows + a.rows(), rows + a.cols());
      next.topLeftCorner(rows, rows).setIdentity();
      next.topRightCorner(rows, a.cols()) = -0.5 * dl.V;
      next.bottomRightCorner(a.rows(), a.cols()) = a;
      a = std::move(next);
    }
    out.push_back(std::move(dl));
  }
  return out;
}

Eigen::MatrixXd plain_forward(const std::vector<DenseLayer>& apparent, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd f = x;
  for (std::size_t l = 0; l < apparent.size(); ++l) {
    Eigen::MatrixXd z = (apparent[l].V * f).colwise() + apparent[l].b;
    if (l + 1 == apparent.size()) return z;
    Eigen::MatrixXd next(z.rows() + f.rows(), f.cols());
    next << z.cwiseMax(0.0), f;
    f = std::move(next);
  }
  return f;
}

double apparent_equivariance_defect(const GDNNModel& model, const std::vector<DenseLayer>& w) {
  double worst = 0.0;
  std::vector<int> gens = model.group().generators();
  if (gens.empty()) gens.push_back(0);
  for (int g : gens) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(model.input_dim(), model.input_dim());
    Eigen::MatrixXd big_pi = signed_matrix(model.source_perm(0, g), model.source_channels(0));
    for (int l = 0; l < model.depth(); ++l) {
      const auto& W = w[l].V;
      Eigen::MatrixXd psi = a.inverse() * big_pi * a;
      Eigen::MatrixXd rho = signed_matrix(model.layer(l).images[g], model.layer(l).channels);
      worst = std::max(worst, (rho * W - W * psi).cwiseAbs().maxCoeff());
      worst = std::max(worst, (rho * w[l].b - w[l].b).cwiseAbs().maxCoeff());
      if (l + 1 == model.depth()) break;
      const auto rows = W.rows();
      Eigen::MatrixXd next = Eigen::MatrixXd::Zero(rows + a.rows(), rows + a.cols());
      next.topLeftCorner(rows, rows).setIdentity();
      next.topRightCorner(rows, a.cols()) = -0.5 * W;
      next.bottomRightCorner(a.rows(), a.cols()) = a;
      a = std::move(next);
      Eigen::MatrixXd pi_next = Eigen::MatrixXd::Zero(rows + big_pi.rows(), rows + big_pi.cols());
      pi_next.topLeftCorner(rows, rows) = signed_matrix(model.source_perm(l + 1, g), model.layer(l).channels);
      pi_next.bottomRightCorner(big_pi.rows(), big_pi.cols()) = big_pi;
      big_pi = std::move(pi_next);
    }
  }
  return worst;
}

double cpz_reparam_audit(const std::vector<DenseLayer>& apparent, int layer,
                         const Eigen::VectorXd& c, const std::vector<int>& p,
                         const Eigen::VectorXd& z, const Eigen::MatrixXd& x) {
  const int d = static_cast<int>(apparent.size());
  if (layer < 0 || layer + 1 >= d) fail(ErrorCode::InvalidArgument, "layer must be a hidden layer");
  const auto n = apparent[layer].V.rows();
  if (c.size() != n || z.size() != n || static_cast<Eigen::Index>(p.size()) != n)
    fail(ErrorCode::ShapeMismatch, "C, P, Z must match the layer width");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (c(i) <= 0) fail(ErrorCode::InvalidArgument, "C must be positive");
    if (z(i) != 1.0 && z(i) != -1.0) fail(ErrorCode::InvalidArgument, "Z must be +-1");
  }
  Eigen::MatrixXd perm = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) perm(p[i], i) = 1.0;
  Eigen::MatrixXd cpz = c.asDiagonal() * perm * z.asDiagonal();
  Eigen::MatrixXd cp_inv = (c.asDiagonal() * perm).inverse();
  Eigen::VectorXd flip = (1.0 - z.array()) / 2.0;  // heavi(-Z)

  auto moved = apparent;
  const auto& wl = apparent[layer];
  moved[layer].V = cpz * wl.V;
  moved[layer].b = cpz * wl.b;
  // Later layers see [top; f] with top the changed block; fix their tail.
  const auto tail = n + wl.V.cols();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(tail, tail);
  m.topLeftCorner(n, n) = cp_inv;
  m.topRightCorner(n, wl.V.cols()) = flip.asDiagonal() * wl.V;
  m.bottomRightCorner(wl.V.cols(), wl.V.cols()).setIdentity();
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(tail);
  shift.head(n) = flip.asDiagonal() * wl.b;
  for (int l = layer + 1; l < d; ++l) {
    Eigen::MatrixXd w_tail = apparent[l].V.rightCols(tail);
    moved[l].V.rightCols(tail) = w_tail * m;
    moved[l].b = apparent[l].b + w_tail * shift;
  }
  return (plain_forward(apparent, x) - plain_forward(moved, x)).cwiseAbs().maxCoeff();
}

// -------------------------------------------------------------- projections

std::optional<std::vector<Eigen::MatrixXd>> project_block(const BlockBasis& block,
                                                         const Eigen::MatrixXd& dense, int kout,
                                                         int kin, double tol) {
  if (dense.rows() != block.basis.rows * kout || dense.cols() != block.basis.cols * kin)
    fail(ErrorCode::ShapeMismatch, "dense block has the wrong shape");
  std::vector<Eigen::MatrixXd> coeffs(block.basis.size(), Eigen::MatrixXd::Zero(kout, kin));
  std::vector<bool> set(block.basis.size(), false);
  for (int r = 0; r < block.basis.rows; ++r)
    for (int c = 0; c < block.basis.cols; ++c) {
      const auto idx = static_cast<std::size_t>(r) * block.basis.cols + c;
      Eigen::MatrixXd piece = dense.block(r * kout, c * kin, kout, kin);
      const int b = block.entry_basis[idx];
      if (b < 0) {
        if (piece.cwiseAbs().maxCoeff() > tol) return std::nullopt;
        continue;
      }
      Eigen::MatrixXd value = static_cast<double>(block.entry_sign[idx]) * piece;
      if (!set[b]) {
        coeffs[b] = value;
        set[b] = true;
      } else if ((coeffs[b] - value).cwiseAbs().maxCoeff() > tol) {
        return std::nullopt;
      }
    }
  return coeffs;
}

LatentWeights project_dense(const GDNNModel& model,
                            const std::vector<std::vector<Eigen::MatrixXd>>& blocks, double tol) {
  LatentWeights w = zero_weights(model);
  for (int l = 0; l < model.depth() && l < static_cast<int>(blocks.size()); ++l)
    for (int s = 0; s <= l && s < static_cast<int>(blocks[l].size()); ++s) {
      if (blocks[l][s].size() == 0) continue;
      auto coeffs = project_block(model.layer(l).blocks[s], blocks[l][s], model.layer(l).channels,
                                  model.source_channels(s), tol);
      if (!coeffs)
        fail(ErrorCode::NotInSpan, "layer " + std::to_string(l + 1) + " block " +
                                       std::to_string(s) +
                                       " is not in the span of the equivariant basis");
      w.coeffs[l][s] = std::move(*coeffs);
    }
  return w;
}

LatentWeights import_crelu(const GDNNModel& model, const std::vector<Eigen::MatrixXd>& u,
                           double tol) {
  const int d = model.depth();
  if (static_cast<int>(u.size()) != d) fail(ErrorCode::ShapeMismatch, "need one matrix per layer");
  for (int s = 0; s <= d; ++s)
    if (model.spec().channel(s) != 1) fail(ErrorCode::ShapeMismatch, "CReLU import needs one channel");
  const auto& g = model.group();

  for (int l = 0; l < d; ++l) {
    const int rows = model.layer(l).degree;
    const int cols = l == 0 ? g.degree() : 2 * model.layer(l - 1).degree;
    if (u[l].rows() != rows || u[l].cols() != cols)
      fail(ErrorCode::ShapeMismatch, "CReLU weight " + std::to_string(l + 1) + " has the wrong shape");
    for (std::size_t x = 0; x < g.order(); ++x) {
      const int xi = static_cast<int>(x);
      Eigen::MatrixXd rho = signed_matrix(model.layer(l).images[xi]);
      Eigen::MatrixXd pi = l == 0 ? signed_matrix(g.element(xi))
                                  : signed_matrix(unravel_raw(model.layer(l - 1).images[xi]));
      if ((rho * u[l] - u[l] * pi).cwiseAbs().maxCoeff() > tol)
        fail(ErrorCode::NotEquivariant, "CReLU weight " + std::to_string(l + 1) + " is not equivariant");
    }
  }

  // V^(1) = U^(1); V^(i+1) = [U1 + U2, (U1 - U2) V^(i) / 2], newest block first.
  std::vector<std::vector<Eigen::MatrixXd>> blocks(d);
  blocks[0].push_back(u[0]);
  for (int l = 1; l < d; ++l) {
    const int n = model.layer(l - 1).degree;
    Eigen::MatrixXd u1 = u[l].leftCols(n), u2 = u[l].rightCols(n);
    blocks[l].resize(l + 1);
    blocks[l][l] = u1 + u2;
    Eigen::MatrixXd diff = 0.5 * (u1 - u2);
    for (int s = 0; s < l; ++s) blocks[l][s] = diff * blocks[l - 1][s];
  }
  return project_dense(model, blocks, tol);
}

}  // namespace gdnn
