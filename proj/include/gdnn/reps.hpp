#pragma once

#include <memory>
#include <vector>

#include "gdnn/group.hpp"

namespace gdnn {

// Signed permutation irrep induced from the sign character of H with
// kernel K. Basis vector i corresponds to the coset g_i H, where the
// transversal g_1 = identity, g_2, ... consists of the smallest element of
// each left coset of H in increasing order.
class SignedPermIrrep {
 public:
  explicit SignedPermIrrep(SubgroupPair pair);

  const SubgroupPair& pair() const { return pair_; }
  const Subgroup& H() const { return pair_.H; }
  const Subgroup& K() const { return pair_.K; }
  const FiniteMatrixGroup& group() const { return pair_.H.parent(); }
  const GroupPtr& group_ptr() const { return pair_.H.parent_ptr(); }
  int degree() const { return static_cast<int>(transversal_.size()); }
  int type() const { return pair_.index(); }
  const std::vector<int>& transversal() const { return transversal_; }

  const GroupElement& evaluate(int g) const { return images_[g]; }
  GroupElement evaluate(const GroupElement& g) const;

 private:
  SubgroupPair pair_;
  std::vector<int> transversal_;
  std::vector<GroupElement> images_;
};

using IrrepPtr = std::shared_ptr<const SignedPermIrrep>;

IrrepPtr make_irrep(const Subgroup& h, const Subgroup& k);
IrrepPtr make_irrep(const SubgroupPair& pair);

bool equivalent(const SignedPermIrrep& a, const SignedPermIrrep& b);

struct Summand {
  IrrepPtr irrep;
  int multiplicity = 1;
};

// Direct sum of pairwise inequivalent irreps with multiplicities. Copies of
// a summand are laid out consecutively, summands in the given order.
class LayerRep {
 public:
  LayerRep() = default;
  explicit LayerRep(std::vector<Summand> summands);

  const std::vector<Summand>& summands() const { return summands_; }
  int degree() const { return degree_; }
  const GroupPtr& group_ptr() const { return summands_.front().irrep->group_ptr(); }
  GroupElement evaluate(int g) const;
  // Smallest irrep degree among the summands.
  int min_irrep_degree() const;
  bool is_trivial() const;

 private:
  std::vector<Summand> summands_;
  int degree_ = 0;
};

LayerRep trivial_layer(const GroupPtr& g, int multiplicity = 1);

// Type 2 irrep rho_HK -> rho_KK; type 1 -> two copies of rho_HH.
LayerRep unravel(const SignedPermIrrep& rho);
// heavi([[1,-1],[-1,1]] (x) rho(g)), a permutation of 2n points.
GroupElement unravel_raw(const GroupElement& rho_g);
GroupElement unravel_raw(const SignedPermIrrep& rho, int g);
// For type 2 irreps: map from raw unraveled coordinates to coordinates of
// the canonical rho_KK such that both representations agree.
std::vector<int> unravel_embedding(const SignedPermIrrep& rho);
// rho_HK -> rho_HH
IrrepPtr tunnel(const SignedPermIrrep& rho);

int fixed_space_dim(const SignedPermIrrep& rho);

// Rows g_i w. w must lie in the range of P_K - P_H (type 2) or of P_H
// (type 1), otherwise NotInFixedSpace.
RationalMatrix orbit_weight_matrix(const SignedPermIrrep& rho, const std::vector<Rational>& w);

// Zero diagonal of W1 W2^T for the orbit matrices of (H,K1) and (H,K2).
bool check_orthogonality(const Subgroup& h, const Subgroup& k1, const Subgroup& k2,
                         const std::vector<Rational>& w1, const std::vector<Rational>& w2);

// P_K - [K != H] P_H in the representation of the group itself.
RationalMatrix fixed_space_projector(const SubgroupPair& pair);

}  // namespace gdnn
