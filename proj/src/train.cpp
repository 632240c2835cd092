#include "gdnn/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <thread>

#include "gdnn/error.hpp"
#include "gdnn/named_groups.hpp"

namespace gdnn {

double bce_with_logits(const Eigen::MatrixXd& logits, const Eigen::VectorXd& labels) {
  if (logits.rows() != 1 || logits.cols() != labels.size())
    fail(ErrorCode::ShapeMismatch, "logits must be 1 x batch");
  if (labels.size() == 0) fail(ErrorCode::ShapeMismatch, "empty batch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const double z = logits(0, i);
    total += std::max(z, 0.0) - z * labels(i) + std::log1p(std::exp(-std::abs(z)));
  }
  return total / static_cast<double>(labels.size());
}

LossAndGradient loss_and_gradient(const GDNNModel& model, const LatentWeights& w,
                                  const Eigen::MatrixXd& x, const Eigen::VectorXd& labels,
                                  Mode mode, ForwardTrace* trace_out) {
  if (model.output_dim() != 1) fail(ErrorCode::ShapeMismatch, "binary loss needs a scalar output");
  if (x.cols() == 0 || x.cols() != labels.size())
    fail(ErrorCode::ShapeMismatch, "batch and labels disagree");
  ForwardTrace trace = forward(model, w, x, mode);
  LossAndGradient out;
  out.loss = bce_with_logits(trace.output, labels);
  const double n = static_cast<double>(labels.size());
  Eigen::MatrixXd dout(1, labels.size());
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    dout(0, i) = (1.0 / (1.0 + std::exp(-trace.output(0, i))) - labels(i)) / n;
  out.grad = backward(model, w, trace, dout);
  if (trace_out) *trace_out = std::move(trace);
  return out;
}

// ------------------------------------------------------------------ Adam

Adam::Adam(std::size_t size, double lr, double decay, double beta1, double beta2, double eps)
    : lr_(lr), decay_(decay), beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {
  if (!(lr > 0)) fail(ErrorCode::InvalidArgument, "learning rate must be positive");
}

double Adam::learning_rate(long step) const {
  return lr_ * std::pow(decay_, static_cast<double>(step));
}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    fail(ErrorCode::ShapeMismatch, "Adam state has a different size");
  const double lr = learning_rate(t_);
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

// ------------------------------------------------------------------ data

Split stratified_split(const Eigen::VectorXd& labels, double fraction, std::uint64_t seed) {
  if (!(fraction > 0 && fraction < 1)) fail(ErrorCode::InvalidArgument, "fraction must be in (0, 1)");
  std::vector<int> pos, neg;
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    (labels(i) > 0.5 ? pos : neg).push_back(static_cast<int>(i));
  std::mt19937_64 rng(seed);
  Split split;
  for (auto* cls : {&neg, &pos}) {
    std::shuffle(cls->begin(), cls->end(), rng);
    const auto take = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(cls->size())));
    split.train.insert(split.train.end(), cls->begin(), cls->begin() + static_cast<std::ptrdiff_t>(take));
    split.val.insert(split.val.end(), cls->begin() + static_cast<std::ptrdiff_t>(take), cls->end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  return split;
}

namespace {

Eigen::MatrixXd take_columns(const Eigen::MatrixXd& x, const std::vector<int>& idx) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = x.col(idx[i]);
  return out;
}

Eigen::VectorXd take_entries(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(idx[i]);
  return out;
}

}  // namespace

Metrics evaluate(const GDNNModel& model, const LatentWeights& w, const Eigen::MatrixXd& x,
                 const Eigen::VectorXd& labels, const std::vector<int>& rows) {
  Eigen::MatrixXd xs = take_columns(x, rows);
  Eigen::VectorXd ys = take_entries(labels, rows);
  Eigen::MatrixXd z = predict(model, w, xs, Mode::Eval);
  Metrics m;
  m.loss = bce_with_logits(z, ys);
  int correct = 0;
  for (Eigen::Index i = 0; i < ys.size(); ++i) correct += (z(0, i) > 0) == (ys(i) > 0.5);
  m.accuracy = static_cast<double>(correct) / static_cast<double>(ys.size());
  return m;
}

RunResult train_run(const GDNNModel& model, LatentWeights& w, const Eigen::MatrixXd& x,
                    const Eigen::VectorXd& labels, const Split& split, const TrainConfig& config,
                    std::uint64_t seed) {
  if (config.batch_size < 1) fail(ErrorCode::InvalidArgument, "batch size must be positive");
  RunResult r;
  r.initial_train = evaluate(model, w, x, labels, split.train);
  r.initial_val = evaluate(model, w, x, labels, split.val);
  Adam adam(w.trainable_size(), config.lr, config.lr_decay);
  std::mt19937_64 rng(seed);
  std::vector<int> order = split.train;
  std::vector<double> params = w.flatten();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<int> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
      ForwardTrace trace;
      auto lg = loss_and_gradient(model, w, take_columns(x, batch), take_entries(labels, batch),
                                  Mode::Train, &trace);
      adam.step(params, lg.grad.flatten());
      w.assign(params);
      if (model.batchnorm()) update_batchnorm_stats(w, trace);
    }
  }
  r.final_train = evaluate(model, w, x, labels, split.train);
  r.final_val = evaluate(model, w, x, labels, split.val);
  return r;
}

// ------------------------------------------------------------ binary product

BinProdTask binprod_task(int m) {
  if (m < 8 || (m & (m - 1)) != 0) fail(ErrorCode::BadDimension, "m must be 2^d with d >= 3");
  const int pairs = m / 2;
  const long n = 1L << pairs;
  BinProdTask t;
  t.m = m;
  t.x = Eigen::MatrixXd::Zero(m, n);
  t.target.resize(n);
  t.labels.resize(n);
  for (long k = 0; k < n; ++k) {
    double prod = 1.0;
    for (int i = 0; i < pairs; ++i) {
      const bool flipped = (k >> i) & 1;
      t.x(2 * i + (flipped ? 1 : 0), k) = 1.0;
      if (flipped) prod = -prod;
    }
    t.target(k) = prod;
    t.labels(k) = prod > 0 ? 1.0 : 0.0;
  }
  return t;
}

namespace {

int log2_exact(int m) {
  int d = 0;
  while ((1 << d) < m) ++d;
  return d;
}

struct Placement {
  int position = 0;  // first coordinate of the copy in the unraveled layer
  std::vector<int> map;  // raw 2n coordinate -> offset inside the copy
};

// Unraveled version of a layer: summands with equal K merged. For every
// coordinate copy of the original layer (in layout order), where its raw
// unraveled coordinates land.
struct UnraveledLayer {
  LayerRep rep;
  std::vector<Placement> copies;  // one per (summand, copy) of the original
};

UnraveledLayer unravel_layer(const LayerRep& layer) {
  std::vector<Summand> out;
  std::vector<std::pair<int, int>> where;  // (output summand, copy index)
  for (const auto& s : layer.summands()) {
    const auto& rho = *s.irrep;
    const Subgroup& target = rho.type() == 2 ? rho.K() : rho.H();
    const int per_copy = rho.type() == 2 ? 1 : 2;
    int idx = -1;
    for (std::size_t i = 0; i < out.size(); ++i)
      if (out[i].irrep->H() == target) idx = static_cast<int>(i);
    if (idx < 0) {
      out.push_back({make_irrep(target, target), 0});
      idx = static_cast<int>(out.size()) - 1;
    }
    for (int c = 0; c < s.multiplicity; ++c) {
      where.emplace_back(idx, out[idx].multiplicity);
      out[idx].multiplicity += per_copy;
    }
  }
  UnraveledLayer u{LayerRep(out), {}};
  std::vector<int> start(out.size(), 0);
  for (std::size_t i = 1; i < out.size(); ++i)
    start[i] = start[i - 1] + out[i - 1].multiplicity * out[i - 1].irrep->degree();
  std::size_t w = 0;
  for (const auto& s : layer.summands()) {
    const auto& rho = *s.irrep;
    const int n = rho.degree();
    for (int c = 0; c < s.multiplicity; ++c, ++w) {
      auto [idx, copy] = where[w];
      Placement p;
      p.position = start[idx] + copy * out[idx].irrep->degree();
      if (rho.type() == 2) {
        p.map = unravel_embedding(rho);
      } else {
        p.map.resize(2 * n);
        std::iota(p.map.begin(), p.map.end(), 0);
      }
      u.copies.push_back(std::move(p));
    }
  }
  return u;
}

// Dense map from the raw unraveled coordinates [g; -g] of every copy to
// the unraveled layer: row r of the result picks raw coordinate e.
Eigen::MatrixXd raw_to_unraveled(const LayerRep& layer, const UnraveledLayer& u) {
  const int n = layer.degree();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(u.rep.degree(), 2 * n);
  std::size_t w = 0;
  int offset = 0;
  for (const auto& s : layer.summands()) {
    const int deg = s.irrep->degree();
    for (int c = 0; c < s.multiplicity; ++c, ++w, offset += deg) {
      const auto& p = u.copies[w];
      for (int r = 0; r < 2 * deg; ++r) {
        const int raw = r < deg ? offset + r : n + offset + (r - deg);
        q(p.position + p.map[r], raw) = 1.0;
      }
    }
  }
  return q;
}

Subgroup subgroup_where(const GroupPtr& g, const std::function<bool(const GroupElement&)>& pred) {
  std::vector<int> members;
  for (std::size_t x = 0; x < g->order(); ++x)
    if (pred(g->element(static_cast<int>(x)))) members.push_back(static_cast<int>(x));
  return Subgroup::from_members(g, std::move(members));
}

}  // namespace

BinProdArchitectures binprod_architectures(int m) {
  GroupPtr g = named_group("BinProd" + std::to_string(m));
  const int d = log2_exact(m);

  std::vector<Subgroup> hs, ks;
  for (int j = 0; j < m / 4; ++j) {
    std::vector<double> v(m, 0.0);
    v[4 * j] = 1;
    v[4 * j + 1] = -1;
    v[4 * j + 2] = 1;
    v[4 * j + 3] = -1;
    auto moved = [&](const GroupElement& e) {
      return e.apply(std::span<const double>(v));
    };
    auto neg = v;
    for (auto& c : neg) c = -c;
    ks.push_back(subgroup_where(g, [&](const GroupElement& e) { return moved(e) == v; }));
    hs.push_back(subgroup_where(g, [&](const GroupElement& e) {
      auto w = moved(e);
      return w == v || w == neg;
    }));
  }

  BinProdArchitectures out;
  std::vector<LayerRep> type2;
  for (int i = 1; i <= d - 1; ++i) {
    if (i == d - 1) {
      type2.emplace_back(std::vector<Summand>{{make_irrep(hs[0], ks[0]), 2}});
      break;
    }
    std::vector<Summand> layer;
    for (std::size_t j = 0; j < hs.size(); ++j) layer.push_back({make_irrep(hs[j], ks[j]), 1});
    type2.emplace_back(std::move(layer));

    std::vector<Subgroup> nh, nk;
    for (std::size_t j = 0; 2 * j + 1 < hs.size(); ++j) {
      const auto& a = hs[2 * j];
      const auto& b = hs[2 * j + 1];
      nk.push_back(a.intersect(b));
      ElementSet both_out = a.set().complement() & b.set().complement();
      nh.push_back(Subgroup::from_members(g, ((a.set() & b.set()) | both_out).members()));
    }
    hs = std::move(nh);
    ks = std::move(nk);
  }
  type2.push_back(trivial_layer(g));

  out.type2.group = out.type1.group = out.unraveled.group = g;
  out.type2.layers = type2;
  for (std::size_t l = 0; l < type2.size(); ++l) {
    if (l + 1 == type2.size()) {
      out.type1.layers.push_back(type2[l]);
      out.unraveled.layers.push_back(type2[l]);
      continue;
    }
    std::vector<Summand> t1;
    for (const auto& s : type2[l].summands()) {
      auto it = std::find_if(t1.begin(), t1.end(),
                             [&](const Summand& e) { return e.irrep->H() == s.irrep->H(); });
      if (it == t1.end())
        t1.push_back({tunnel(*s.irrep), s.multiplicity});
      else
        it->multiplicity += s.multiplicity;
    }
    out.type1.layers.emplace_back(std::move(t1));
    out.unraveled.layers.push_back(unravel_layer(type2[l]).rep);
  }
  return out;
}

LatentWeights binprod_closed_form(const GDNNModel& type2) {
  const int d = type2.depth();
  const int m = type2.input_dim();
  if (d < 2 || type2.group().degree() != m || (1 << d) != m)
    fail(ErrorCode::BadDimension, "model is not a binary product architecture");
  Eigen::Matrix<double, 2, 4> cell;
  cell << 1, -1, 1, -1, 1, -1, -1, 1;

  std::vector<std::vector<Eigen::MatrixXd>> blocks(d);
  for (int l = 0; l < d; ++l) {
    blocks[l].resize(l + 1);
    Eigen::MatrixXd target;
    if (l + 1 == d) {
      target.resize(1, 2);
      target << 1, -1;
      blocks[l][l] = target;
      continue;
    }
    const int copies = m >> (l + 2);
    target = Eigen::MatrixXd::Zero(2 * copies, 4 * copies);
    for (int c = 0; c < copies; ++c) target.block(2 * c, 4 * c, 2, 4) = cell;

    // Zero biases make every hidden unit even in its preactivation, so each
    // row may be negated to match the sign convention of the irreps.
    const auto& plan = type2.layer(l);
    const auto& block = plan.blocks[l];
    Eigen::MatrixXd chosen = Eigen::MatrixXd::Zero(target.rows(), target.cols());
    int row = 0;
    for (const auto& s : plan.rep.summands())
      for (int c = 0; c < s.multiplicity; ++c) {
        const int deg = s.irrep->degree();
        bool found = false;
        for (int mask = 0; mask < (1 << deg) && !found; ++mask) {
          Eigen::MatrixXd trial = Eigen::MatrixXd::Zero(target.rows(), target.cols());
          for (int r = 0; r < deg; ++r)
            trial.row(row + r) = ((mask >> r) & 1 ? -1.0 : 1.0) * target.row(row + r);
          if (project_block(block, trial, 1, 1)) {
            chosen.middleRows(row, deg) = trial.middleRows(row, deg);
            found = true;
          }
        }
        if (!found) fail(ErrorCode::NotInSpan, "closed form weights are not equivariant");
        row += deg;
      }
    blocks[l][l] = chosen;
  }
  return project_dense(type2, blocks);
}

LatentWeights embed_unraveled(const GDNNModel& type2, const LatentWeights& w,
                              const GDNNModel& unraveled) {
  const int d = type2.depth();
  if (unraveled.depth() != d) fail(ErrorCode::ShapeMismatch, "depths differ");
  for (int s = 0; s <= d; ++s)
    if (type2.spec().channel(s) != 1 || unraveled.spec().channel(s) != 1)
      fail(ErrorCode::ShapeMismatch, "embedding needs one channel per layer");
  if (type2.batchnorm() || unraveled.batchnorm())
    fail(ErrorCode::ShapeMismatch, "embedding does not support batch norm");

  // Hidden layer l of the unraveled model carries Q [g; -g], whose units are
  // Q [u; u]. Rows therefore map through Q [I; -I] and columns through
  // (1/2) [I, I] Q^T.
  std::vector<Eigen::MatrixXd> rows(d), cols(d);
  for (int l = 0; l + 1 < d; ++l) {
    const auto& layer = type2.layer(l).rep;
    auto u = unravel_layer(layer);
    if (u.rep.degree() != unraveled.layer(l).degree)
      fail(ErrorCode::ShapeMismatch, "unraveled model does not match the type 2 model");
    Eigen::MatrixXd q = raw_to_unraveled(layer, u);
    const int n = layer.degree();
    Eigen::MatrixXd stack(2 * n, n), half(n, 2 * n);
    stack << Eigen::MatrixXd::Identity(n, n), -Eigen::MatrixXd::Identity(n, n);
    half << Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n);
    rows[l] = q * stack;
    cols[l] = 0.5 * half * q.transpose();
  }

  const auto dense = materialize(type2, w);
  std::vector<std::vector<Eigen::MatrixXd>> blocks(d);
  std::vector<Eigen::VectorXd> biases(d);
  for (int l = 0; l < d; ++l) {
    blocks[l].resize(l + 1);
    for (int s = 0; s <= l; ++s) {
      Eigen::MatrixXd b = dense[l].V.block(0, type2.source_offset(l, s), type2.layer_output_dim(l),
                                           type2.source_dim(s));
      if (s > 0) b = b * cols[s - 1];
      if (l + 1 < d) b = rows[l] * b;
      blocks[l][s] = b;
    }
    biases[l] = l + 1 < d ? Eigen::VectorXd(rows[l] * dense[l].b) : dense[l].b;
  }
  LatentWeights out = project_dense(unraveled, blocks);
  for (int l = 0; l < d; ++l) {
    const auto& slots = unraveled.layer(l).bias_slots;
    for (std::size_t k = 0; k < slots.size(); ++k)
      out.bias[l](static_cast<Eigen::Index>(k), 0) = biases[l](slots[k].begin);
  }
  return out;
}

// ------------------------------------------------------------ experiment

std::vector<ArchitectureResult> run_binprod_experiment(const ExperimentConfig& config) {
  const auto task = binprod_task(config.m);
  const auto archs = binprod_architectures(config.m);
  const GDNNModel type2 = GDNNModel::compile(archs.type2);
  const GDNNModel type1 = GDNNModel::compile(archs.type1, {false});
  const GDNNModel unraveled = GDNNModel::compile(archs.unraveled, {false});

  auto model_of = [&](const std::string& name) -> const GDNNModel& {
    if (name == "type2") return type2;
    if (name == "type1") return type1;
    if (name == "unraveled" || name == "unraveled_type2_init") return unraveled;
    fail(ErrorCode::InvalidArgument, "unknown architecture: " + name);
  };

  std::vector<ArchitectureResult> results;
  for (const auto& name : config.architectures) {
    ArchitectureResult r;
    r.name = name;
    r.parameters = parameter_count(model_of(name));
    r.runs.resize(static_cast<std::size_t>(std::max(0, config.seeds)));
    results.push_back(std::move(r));
  }

  const std::size_t per_arch = static_cast<std::size_t>(std::max(0, config.seeds));
  const std::size_t jobs = results.size() * per_arch;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next.fetch_add(1); job < jobs; job = next.fetch_add(1)) {
      auto& result = results[job / per_arch];
      const std::uint64_t seed = config.base_seed + job % per_arch;
      const GDNNModel& model = model_of(result.name);
      LatentWeights w;
      if (result.name == "unraveled_type2_init")
        w = embed_unraveled(type2, init_weights(type2, seed, config.init_scheme), unraveled);
      else
        w = init_weights(model, seed, config.init_scheme);
      Split split = stratified_split(task.labels, config.train_fraction, seed);
      result.runs[job % per_arch] = train_run(model, w, task.x, task.labels, split, config.train, seed);
    }
  };
  const int threads = std::max(1, config.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd r;
  if (values.empty()) return r;
  const double n = static_cast<double>(values.size());
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.stddev = std::sqrt(ss / n);
  return r;
}

}  // namespace gdnn
