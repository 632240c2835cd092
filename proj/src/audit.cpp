#include "gdnn/audit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "gdnn/error.hpp"

namespace gdnn {

ModelBases model_bases(const GDNNModel& model) {
  ModelBases out(model.depth());
  for (int l = 0; l < model.depth(); ++l)
    for (int s = 0; s <= l; ++s) out[l].push_back(model.layer(l).blocks[s].basis);
  return out;
}

json bases_to_json(const ModelBases& bases) {
  json layers = json::array();
  for (const auto& l : bases) {
    json sources = json::array();
    for (const auto& b : l) sources.push_back(basis_to_json(b));
    layers.push_back(sources);
  }
  return {{"layers", layers}};
}

ModelBases bases_from_json(const json& j) {
  ModelBases out;
  try {
    for (const auto& l : j.at("layers")) {
      std::vector<BasisSet> sources;
      for (const auto& b : l) sources.push_back(basis_from_json(b));
      out.push_back(std::move(sources));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bases: ") + e.what());
  }
  return out;
}

BasisAudit audit_bases(const GDNNModel& model, const ModelBases& bases) {
  BasisAudit r;
  auto bad = [&](int l, int s, std::string why) {
    r.ok = false;
    r.layer = l;
    r.source = s;
    r.reason = std::move(why);
    return r;
  };
  if (static_cast<int>(bases.size()) != model.depth()) return bad(-1, -1, "wrong number of layers");
  const auto order = static_cast<int>(model.group().order());
  for (int l = 0; l < model.depth(); ++l) {
    if (static_cast<int>(bases[l].size()) != l + 1) return bad(l, -1, "wrong number of sources");
    std::vector<GroupElement> rho(model.layer(l).images.begin(), model.layer(l).images.end());
    for (int s = 0; s <= l; ++s) {
      const auto& b = bases[l][s];
      const auto& own = model.layer(l).blocks[s].basis;
      if (b.rows != own.rows || b.cols != own.cols) return bad(l, s, "shape mismatch");
      std::vector<GroupElement> pi;
      for (int g = 0; g < order; ++g) pi.push_back(model.source_perm(s, g));
      auto check = verify_basis(b, rho, pi);
      if (!check.equivariant) return bad(l, s, "not equivariant");
      if (!check.independent) return bad(l, s, "not independent");
      if (b.size() != own.size()) return bad(l, s, "wrong dimension");
    }
  }
  return r;
}

double gradient_check(const GDNNModel& model, const LatentWeights& w, const Eigen::MatrixXd& x,
                      const Eigen::VectorXd& labels, int coords, std::uint64_t seed, double step,
                      Mode mode) {
  const auto analytic = loss_and_gradient(model, w, x, labels, mode).grad.flatten();
  const auto base = w.flatten();
  std::vector<std::size_t> idx(base.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  if (coords >= 0 && static_cast<std::size_t>(coords) < idx.size()) idx.resize(coords);

  LatentWeights probe = w;
  double worst = 0.0;
  for (std::size_t i : idx) {
    auto p = base;
    p[i] = base[i] + step;
    probe.assign(p);
    const double up = bce_with_logits(forward(model, probe, x, mode).output, labels);
    p[i] = base[i] - step;
    probe.assign(p);
    const double down = bce_with_logits(forward(model, probe, x, mode).output, labels);
    const double numeric = (up - down) / (2 * step);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), kGradientFloor});
    worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
  }
  return worst;
}

Eigen::MatrixXd group_closed_batch(const GDNNModel& model, const Eigen::MatrixXd& x) {
  const auto& g = model.group();
  Eigen::MatrixXd out(x.rows(), x.cols() * static_cast<Eigen::Index>(g.order()));
  for (std::size_t e = 0; e < g.order(); ++e)
    out.middleCols(static_cast<Eigen::Index>(e) * x.cols(), x.cols()) =
        signed_matrix(g.element(static_cast<int>(e)), model.input_channels()) * x;
  return out;
}

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

std::vector<AuditCheck> audit_spec(const ArchitectureSpec& spec, const AuditOptions& options) {
  std::vector<AuditCheck> checks;
  auto report = check_admissible(spec);
  {
    AuditCheck c{"admissible", report.admissible, 0.0, ""};
    if (!report.admissible)
      c.detail = "layer " + std::to_string(report.failure->layer) + ": " + report.failure->reason;
    checks.push_back(c);
  }
  GDNNModel model = GDNNModel::compile(spec, {false});

  {
    auto r = audit_bases(model, options.bases ? *options.bases : model_bases(model));
    AuditCheck c{"basis", r.ok, 0.0, ""};
    if (!r.ok)
      c.detail = "layer " + std::to_string(r.layer + 1) + " source " + std::to_string(r.source) +
                 ": " + r.reason;
    checks.push_back(c);
  }

  std::mt19937_64 rng(options.seed);
  LatentWeights w = init_weights(model, options.seed, "normal");
  for (auto& b : w.bias) b = random_matrix(b.rows(), b.cols(), rng);
  Eigen::MatrixXd x = random_matrix(model.input_dim(), options.samples, rng);

  {
    const double dev = invariance_deviation(model, w, x);
    checks.push_back({"invariance", dev <= 1e-9, dev, "max |f(gx) - f(x)|"});
  }

  if (!model.batchnorm()) {
    auto apparent = apparent_weights(model, w);
    const double defect = apparent_equivariance_defect(model, apparent);
    checks.push_back({"equivariance", defect <= 1e-9, defect, "apparent weights"});

    if (model.depth() >= 2) {
      double worst = 0.0;
      std::uniform_int_distribution<int> pick(0, model.depth() - 2);
      std::uniform_real_distribution<double> scale(0.5, 2.0);
      for (int trial = 0; trial < 5; ++trial) {
        const int layer = pick(rng);
        const auto n = apparent[layer].V.rows();
        Eigen::VectorXd c(n), z(n);
        std::vector<int> p(static_cast<std::size_t>(n));
        std::iota(p.begin(), p.end(), 0);
        std::shuffle(p.begin(), p.end(), rng);
        for (Eigen::Index i = 0; i < n; ++i) {
          c(i) = scale(rng);
          z(i) = rng() % 2 ? 1.0 : -1.0;
        }
        worst = std::max(worst, cpz_reparam_audit(apparent, layer, c, p, z, x));
      }
      checks.push_back({"reparametrization", worst <= 1e-8, worst, "positive scaling, permutation, sign flips"});
    }
  } else {
    Eigen::MatrixXd batch = group_closed_batch(model, x.leftCols(std::min<Eigen::Index>(x.cols(), 2)));
    const double dev = invariance_deviation(model, w, batch, Mode::Train);
    checks.push_back({"batchnorm_invariance", dev <= 1e-8, dev, "training mode on a group-closed batch"});
  }

  if (model.output_dim() == 1) {
    Eigen::VectorXd labels(x.cols());
    for (Eigen::Index i = 0; i < labels.size(); ++i) labels(i) = static_cast<double>(rng() % 2);
    const double err = gradient_check(model, w, x, labels, 100, options.seed);
    checks.push_back({"gradient", err <= 1e-5, err, "relative error against central differences, h = " + fmt(1e-5)});
  }
  return checks;
}

json audit_to_json(const std::vector<AuditCheck>& checks) {
  json out = json::array();
  bool all = true;
  for (const auto& c : checks) {
    out.push_back({{"check", c.name}, {"pass", c.pass}, {"deviation", c.deviation}, {"detail", c.detail}});
    all = all && c.pass;
  }
  return {{"pass", all}, {"checks", out}};
}

}  // namespace gdnn
