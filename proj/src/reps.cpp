#include "gdnn/reps.hpp"

#include <algorithm>

#include "gdnn/error.hpp"

namespace gdnn {

SignedPermIrrep::SignedPermIrrep(SubgroupPair pair) : pair_(std::move(pair)) {
  const auto& g = group();
  CosetSpace cosets(pair_.H);
  transversal_.reserve(cosets.size());
  for (std::size_t c = 0; c < cosets.size(); ++c)
    transversal_.push_back(cosets.representative(static_cast<int>(c)));

  const int n = degree();
  images_.reserve(g.order());
  for (std::size_t x = 0; x < g.order(); ++x) {
    std::vector<int> perm(n), signs(n);
    for (int i = 0; i < n; ++i) {
      int y = g.mul(static_cast<int>(x), transversal_[i]);
      int j = cosets.coset_of(y);
      int h = g.mul(g.inv(transversal_[j]), y);
      perm[i] = j;
      signs[i] = pair_.K.contains(h) ? 1 : -1;
    }
    images_.emplace_back(std::move(perm), std::move(signs));
  }
}

GroupElement SignedPermIrrep::evaluate(const GroupElement& g) const {
  auto idx = group().index_of(g);
  if (!idx) fail(ErrorCode::InvalidArgument, "element is not in the group");
  return images_[*idx];
}

IrrepPtr make_irrep(const SubgroupPair& pair) {
  return std::make_shared<const SignedPermIrrep>(pair);
}

IrrepPtr make_irrep(const Subgroup& h, const Subgroup& k) {
  return make_irrep(SubgroupPair(h, k));
}

bool equivalent(const SignedPermIrrep& a, const SignedPermIrrep& b) {
  if (&a.group() != &b.group()) return false;
  return conjugating_element(a.pair(), b.pair()).has_value();
}

LayerRep::LayerRep(std::vector<Summand> summands) : summands_(std::move(summands)) {
  if (summands_.empty()) fail(ErrorCode::InvalidArgument, "layer has no summands");
  for (std::size_t i = 0; i < summands_.size(); ++i) {
    const auto& s = summands_[i];
    if (!s.irrep || s.multiplicity < 1)
      fail(ErrorCode::InvalidArgument, "summand needs an irrep and positive multiplicity");
    if (&s.irrep->group() != &summands_[0].irrep->group())
      fail(ErrorCode::InvalidArgument, "summands belong to different groups");
    for (std::size_t j = 0; j < i; ++j)
      if (equivalent(*s.irrep, *summands_[j].irrep))
        fail(ErrorCode::InvalidArgument, "summands must be pairwise inequivalent");
    degree_ += s.irrep->degree() * s.multiplicity;
  }
}

GroupElement LayerRep::evaluate(int g) const {
  std::vector<int> perm, signs;
  perm.reserve(degree_);
  signs.reserve(degree_);
  int offset = 0;
  for (const auto& s : summands_) {
    const auto& e = s.irrep->evaluate(g);
    const int n = e.degree();
    for (int c = 0; c < s.multiplicity; ++c) {
      for (int i = 0; i < n; ++i) {
        perm.push_back(offset + e.image(i));
        signs.push_back(e.sign(i));
      }
      offset += n;
    }
  }
  return GroupElement(std::move(perm), std::move(signs));
}

int LayerRep::min_irrep_degree() const {
  int d = summands_.front().irrep->degree();
  for (const auto& s : summands_) d = std::min(d, s.irrep->degree());
  return d;
}

bool LayerRep::is_trivial() const {
  return summands_.size() == 1 && summands_[0].irrep->degree() == 1 &&
         summands_[0].irrep->type() == 1;
}

LayerRep trivial_layer(const GroupPtr& g, int multiplicity) {
  Subgroup all = Subgroup::whole(g);
  return LayerRep({{make_irrep(all, all), multiplicity}});
}

LayerRep unravel(const SignedPermIrrep& rho) {
  if (rho.type() == 2) return LayerRep({{make_irrep(rho.K(), rho.K()), 1}});
  return LayerRep({{make_irrep(rho.H(), rho.H()), 2}});
}

GroupElement unravel_raw(const SignedPermIrrep& rho, int g) {
  return unravel_raw(rho.evaluate(g));
}

GroupElement unravel_raw(const GroupElement& e) {
  const int n = e.degree();
  std::vector<int> perm(2 * n);
  for (int i = 0; i < n; ++i) {
    int j = e.image(i);
    bool pos = e.sign(i) > 0;
    perm[i] = pos ? j : n + j;
    perm[n + i] = pos ? n + j : j;
  }
  return GroupElement(std::move(perm));
}

std::vector<int> unravel_embedding(const SignedPermIrrep& rho) {
  if (rho.type() != 2) fail(ErrorCode::InvalidArgument, "embedding needs a type 2 irrep");
  const auto& g = rho.group();
  CosetSpace cosets(rho.K());
  std::vector<int> map(2 * rho.degree(), -1);
  for (std::size_t x = 0; x < g.order(); ++x) {
    int raw = unravel_raw(rho, static_cast<int>(x)).image(0);
    map[raw] = cosets.coset_of(static_cast<int>(x));
  }
  return map;
}

IrrepPtr tunnel(const SignedPermIrrep& rho) { return make_irrep(rho.H(), rho.H()); }

int fixed_space_dim(const SignedPermIrrep& rho) { return rho.type() == 1 ? 1 : 0; }

RationalMatrix fixed_space_projector(const SubgroupPair& pair) {
  if (pair.index() == 1) return projection(pair.H);
  return projection(pair.K) - projection(pair.H);
}

RationalMatrix orbit_weight_matrix(const SignedPermIrrep& rho, const std::vector<Rational>& w) {
  const auto& g = rho.group();
  const int m = g.degree();
  if (static_cast<int>(w.size()) != m) fail(ErrorCode::ShapeMismatch, "w has wrong length");
  RationalMatrix wv(m, 1);
  for (int i = 0; i < m; ++i) wv(i, 0) = w[i];
  if (!(fixed_space_projector(rho.pair()) * wv == wv))
    fail(ErrorCode::NotInFixedSpace, "w is not in the fixed space of the pair");

  const int n = rho.degree();
  RationalMatrix out(n, m);
  for (int i = 0; i < n; ++i) {
    RationalMatrix row = g.element(rho.transversal()[i]).act(wv);
    for (int c = 0; c < m; ++c) out(i, c) = row(c, 0);
  }
  return out;
}

bool check_orthogonality(const Subgroup& h, const Subgroup& k1, const Subgroup& k2,
                         const std::vector<Rational>& w1, const std::vector<Rational>& w2) {
  SignedPermIrrep r1(SubgroupPair(h, k1)), r2(SubgroupPair(h, k2));
  RationalMatrix a = orbit_weight_matrix(r1, w1);
  RationalMatrix b = orbit_weight_matrix(r2, w2);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    Rational dot = 0;
    for (std::size_t c = 0; c < a.cols(); ++c) dot += a(i, c) * b(i, c);
    if (sgn(dot) != 0) return false;
  }
  return true;
}

}  // namespace gdnn
