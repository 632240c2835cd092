#include "doctest.h"
#include "gdnn/audit.hpp"
#include "gdnn/error.hpp"
#include "gdnn/named_groups.hpp"
#include "helpers.hpp"

using namespace gdnn;
using namespace testing_support;

namespace {

// u = relu(V h + b) - V h / 2, h' = [u; h]; the last layer is affine.
Eigen::MatrixXd reference_forward(const GDNNModel& model, const LatentWeights& w, const Eigen::MatrixXd& x) {
  auto layers = materialize(model, w);
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd g = layers[l].V * h;
    Eigen::MatrixXd z = g.colwise() + layers[l].b;
    if (l + 1 == layers.size()) return z;
    Eigen::MatrixXd u = z.cwiseMax(0.0) - 0.5 * g;
    Eigen::MatrixXd next(u.rows() + h.rows(), h.cols());
    next << u, h;
    h = next;
  }
  return h;
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST_CASE("compile rejects malformed architectures") {
  GroupContext ctx(named_group("D4_min"));
  auto spec = chain(ctx, {0}, false);
  CHECK_THROWS_AS(GDNNModel::compile(spec), Error);
  auto ok = chain(ctx, {});
  ok.channels = {1, 2, 3};
  CHECK_THROWS_AS(GDNNModel::compile(ok), Error);

  for (std::size_t c = 0; c < ctx.pair_classes().size(); ++c) {
    auto s = chain(ctx, {static_cast<int>(c)});
    if (is_admissible(s)) continue;
    try {
      GDNNModel::compile(s);
      FAIL("expected NotAdmissible");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NotAdmissible);
    }
    try {
      const bool admissible = GDNNModel::compile(s, {false}).admissible();
      CHECK(!admissible);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BasisEmpty);
    }
  }
}

TEST_CASE("materialized blocks are equivariant") {
  std::mt19937_64 rng(1);
  for (std::string name : {"Z6", "D4", "Icosahedral"}) {
    CAPTURE(name);
    GroupContext ctx(named_group(name));
    for (int t = 0; t < 5; ++t) {
      auto model = GDNNModel::compile(random_admissible(ctx, rng));
      auto layers = materialize(model, random_weights(model, rng));
      for (int l = 0; l < model.depth(); ++l) {
        const int kout = model.layer(l).channels;
        for (std::size_t x = 0; x < model.group().order(); ++x) {
          const int xi = static_cast<int>(x);
          Eigen::MatrixXd rho = signed_matrix(model.layer(l).images[xi], kout);
          for (int s = 0; s <= l; ++s) {
            Eigen::MatrixXd pi = signed_matrix(model.source_perm(s, xi), model.source_channels(s));
            auto block = layers[l].V.middleCols(model.source_offset(l, s), model.source_dim(s));
            CHECK(max_abs(rho * block - block * pi) < 1e-12);
          }
        }
      }
    }
  }
}

TEST_CASE("forward agrees with the reference and with the apparent network") {
  std::mt19937_64 rng(2);
  for (std::string name : {"Z6", "Q8", "Icosahedral"}) {
    CAPTURE(name);
    GroupContext ctx(named_group(name));
    for (int t = 0; t < 5; ++t) {
      auto model = GDNNModel::compile(random_admissible(ctx, rng));
      auto w = random_weights(model, rng);
      Eigen::MatrixXd x = gaussian(model.input_dim(), 7, rng);
      auto out = predict(model, w, x);
      CHECK(max_abs(out - reference_forward(model, w, x)) < 1e-12);
      CHECK(max_abs(out - plain_forward(apparent_weights(model, w), x)) < 1e-9);
      CHECK(apparent_equivariance_defect(model, apparent_weights(model, w)) < 1e-9);
      CHECK(invariance_deviation(model, w, x) < 1e-9);
    }
  }
}

TEST_CASE("parameter count") {
  GroupContext ctx(named_group("Z6"));
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    auto model = GDNNModel::compile(random_admissible(ctx, rng));
    std::size_t expected = 0;
    for (int l = 0; l < model.depth(); ++l) {
      for (int s = 0; s <= l; ++s)
        expected += model.layer(l).blocks[s].basis.size() * model.layer(l).channels * model.source_channels(s);
      expected += model.layer(l).bias_slots.size() * model.layer(l).channels;
    }
    CHECK(parameter_count(model) == expected);
    auto w = init_weights(model, 1);
    auto flat = w.flatten();
    CHECK(flat.size() == expected);
    LatentWeights v = zero_weights(model);
    v.assign(flat);
    CHECK(v.flatten() == flat);
  }
  CHECK_THROWS_AS(init_weights(GDNNModel::compile(chain(ctx, {})), 0, "uniform"), Error);
}

TEST_CASE("biases only live on type 1 irreps") {
  GroupContext ctx(named_group("Z6"));
  for (std::size_t c = 0; c < ctx.pair_classes().size(); ++c) {
    auto spec = chain(ctx, {static_cast<int>(c)});
    if (!is_admissible(spec)) continue;
    auto model = GDNNModel::compile(spec);
    const auto& rho = *ctx.irrep(static_cast<int>(c));
    CHECK(model.layer(0).bias_slots.size() == (rho.type() == 1 ? 1u : 0u));
  }
}

TEST_CASE("backward matches central differences") {
  std::mt19937_64 rng(4);
  for (std::string name : {"Z6", "D4", "Icosahedral"}) {
    for (bool bn : {false, true}) {
      CAPTURE(name);
      CAPTURE(bn);
      GroupContext ctx(named_group(name));
      auto spec = random_admissible(ctx, rng);
      spec.batchnorm = bn;
      auto model = GDNNModel::compile(spec);
      auto w = random_weights(model, rng);
      Eigen::MatrixXd x = gaussian(model.input_dim(), 6, rng);
      Eigen::VectorXd y(6);
      y << 0, 1, 1, 0, 1, 0;
      // A unit within h of its kink spoils one step size but not both.
      const double err = std::min(gradient_check(model, w, x, y, 100, 9, 1e-5),
                                  gradient_check(model, w, x, y, 100, 9, 1e-6));
      CHECK(err < 1e-5);
    }
  }
}

TEST_CASE("batch-norm model is invariant on group-closed batches") {
  std::mt19937_64 rng(5);
  GroupContext ctx(named_group("D4"));
  for (int t = 0; t < 5; ++t) {
    auto spec = random_admissible(ctx, rng);
    spec.batchnorm = true;
    auto model = GDNNModel::compile(spec);
    auto w = random_weights(model, rng);
    auto batch = group_closed_batch(model, gaussian(model.input_dim(), 2, rng));
    CHECK(invariance_deviation(model, w, batch, Mode::Train) < 1e-8);
    CHECK(invariance_deviation(model, w, batch, Mode::Eval) < 1e-9);
    auto trace = forward(model, w, batch, Mode::Train);
    auto before = w.bn_mean;
    update_batchnorm_stats(w, trace);
    for (std::size_t l = 0; l < before.size(); ++l)
      CHECK(max_abs(w.bn_mean[l] - (kBatchNormMomentum * before[l] + (1 - kBatchNormMomentum) * trace.layers[l].mean)) < 1e-12);
  }
}

TEST_CASE("reparametrization by C P Z leaves the function unchanged") {
  std::mt19937_64 rng(6);
  GroupContext ctx(named_group("Z6"));
  int draws = 0;
  while (draws < 20) {
    auto model = GDNNModel::compile(random_admissible(ctx, rng, 3, false));
    if (model.depth() < 2) continue;
    auto apparent = apparent_weights(model, random_weights(model, rng));
    const int layer = static_cast<int>(rng() % (model.depth() - 1));
    const auto n = apparent[layer].V.rows();
    Eigen::VectorXd c(n), z(n);
    std::vector<int> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    std::uniform_real_distribution<double> scale(0.1, 3.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      c(i) = scale(rng);
      z(i) = rng() % 2 ? 1.0 : -1.0;
    }
    CHECK(cpz_reparam_audit(apparent, layer, c, p, z, gaussian(model.input_dim(), 10, rng)) < 1e-8);
    ++draws;
  }
  auto model = GDNNModel::compile(chain(ctx, {0}));
  auto apparent = apparent_weights(model, init_weights(model, 0));
  Eigen::VectorXd bad = Eigen::VectorXd::Constant(apparent[0].V.rows(), -1.0);
  std::vector<int> id(static_cast<std::size_t>(bad.size()));
  std::iota(id.begin(), id.end(), 0);
  CHECK_THROWS_AS(cpz_reparam_audit(apparent, 0, bad, id, -bad, gaussian(model.input_dim(), 1, rng)), Error);
}

TEST_CASE("CReLU networks import exactly") {
  std::mt19937_64 rng(7);
  GroupContext ctx(named_group("Z6"));
  int imported = 0;
  const int n = static_cast<int>(ctx.pair_classes().size());
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      auto model = GDNNModel::compile(chain(ctx, {a, b}), {false});
      auto u = random_crelu(model, rng);
      LatentWeights w;
      try {
        w = import_crelu(model, u);
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotInSpan);
        continue;
      }
      Eigen::MatrixXd x = gaussian(model.input_dim(), 100, rng);
      CHECK(max_abs(predict(model, w, x) - crelu_forward(u, x)) < 1e-9);
      ++imported;
    }
  CHECK(imported > 0);
  auto model = GDNNModel::compile(chain(ctx, {0}), {false});
  auto u = random_crelu(model, rng);
  u[0](0, 0) += 1.0;
  CHECK_THROWS_AS(import_crelu(model, u), Error);
}

TEST_CASE("projection of dense blocks round-trips") {
  std::mt19937_64 rng(8);
  GroupContext ctx(named_group("D4"));
  for (int t = 0; t < 5; ++t) {
    auto model = GDNNModel::compile(random_admissible(ctx, rng));
    auto w = random_weights(model, rng);
    auto layers = materialize(model, w);
    std::vector<std::vector<Eigen::MatrixXd>> blocks(model.depth());
    for (int l = 0; l < model.depth(); ++l)
      for (int s = 0; s <= l; ++s)
        blocks[l].push_back(layers[l].V.middleCols(model.source_offset(l, s), model.source_dim(s)));
    auto back = project_dense(model, blocks);
    for (int l = 0; l < model.depth(); ++l)
      for (int s = 0; s <= l; ++s)
        for (std::size_t b = 0; b < w.coeffs[l][s].size(); ++b)
          CHECK(max_abs(back.coeffs[l][s][b] - w.coeffs[l][s][b]) < 1e-12);
  }
}
