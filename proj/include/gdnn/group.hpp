#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gdnn/rational.hpp"

namespace gdnn {

// Signed permutation matrix of size n. Column i has the single nonzero
// entry signs[i] in row perm[i], so (g x)[perm[i]] = signs[i] * x[i].
class GroupElement {
 public:
  GroupElement() = default;
  GroupElement(std::vector<int> perm, std::vector<int> signs);
  explicit GroupElement(std::vector<int> perm);

  static GroupElement identity(int n);

  int degree() const { return static_cast<int>(perm_.size()); }
  int image(int i) const { return perm_[i]; }
  int sign(int i) const { return signs_[i]; }
  const std::vector<int>& perm() const { return perm_; }
  std::vector<int> signs() const { return {signs_.begin(), signs_.end()}; }

  GroupElement operator*(const GroupElement& o) const;
  GroupElement inverse() const;
  bool is_unsigned() const;
  bool is_identity() const;
  GroupElement unsigned_part() const;

  std::vector<double> apply(std::span<const double> x) const;
  // Dense matrix as rows of integers.
  std::vector<std::vector<int>> dense() const;
  RationalMatrix rational() const;
  // Row action on a matrix: returns g * M.
  RationalMatrix act(const RationalMatrix& m) const;

  bool operator==(const GroupElement&) const = default;
  std::size_t hash() const;

 private:
  std::vector<int> perm_;
  std::vector<std::int8_t> signs_;
};

struct GroupElementHash {
  std::size_t operator()(const GroupElement& g) const { return g.hash(); }
};

class FiniteMatrixGroup;
using GroupPtr = std::shared_ptr<const FiniteMatrixGroup>;

inline constexpr std::size_t kDefaultGroupCap = 512;

class FiniteMatrixGroup {
 public:
  // BFS closure from the identity, right-multiplying by generators in order.
  static GroupPtr from_generators(int degree, std::vector<GroupElement> generators,
                                  std::string name = {},
                                  std::size_t cap = kDefaultGroupCap);

  int degree() const { return degree_; }
  std::size_t order() const { return elements_.size(); }
  const std::string& name() const { return name_; }

  const GroupElement& element(int i) const { return elements_[i]; }
  const std::vector<GroupElement>& elements() const { return elements_; }
  const std::vector<GroupElement>& generator_elements() const { return generators_; }
  const std::vector<int>& generators() const { return generator_indices_; }

  int mul(int a, int b) const { return mult_[static_cast<std::size_t>(a) * order() + b]; }
  int inv(int a) const { return inverse_[a]; }
  int conjugate(int g, int x) const { return mul(mul(g, x), inverse_[g]); }
  std::optional<int> index_of(const GroupElement& g) const;
  bool is_unsigned() const;

 private:
  FiniteMatrixGroup() = default;

  int degree_ = 0;
  std::string name_;
  std::vector<GroupElement> generators_;
  std::vector<int> generator_indices_;
  std::vector<GroupElement> elements_;
  std::vector<int> mult_;
  std::vector<int> inverse_;
  std::unordered_map<GroupElement, int, GroupElementHash> lookup_;
};

// Bitset over group element indices.
class ElementSet {
 public:
  ElementSet() = default;
  explicit ElementSet(std::size_t universe) : n_(universe), words_((universe + 63) / 64) {}

  void insert(int i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  bool contains(int i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }
  std::size_t universe() const { return n_; }
  std::size_t count() const;
  std::vector<int> members() const;
  bool subset_of(const ElementSet& o) const;
  ElementSet operator&(const ElementSet& o) const;
  ElementSet operator|(const ElementSet& o) const;
  ElementSet complement() const;
  bool operator==(const ElementSet&) const = default;
  std::size_t hash() const;
  const std::vector<std::uint64_t>& words() const { return words_; }

 private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> words_;
};

struct ElementSetHash {
  std::size_t operator()(const ElementSet& s) const { return s.hash(); }
};

class Subgroup {
 public:
  Subgroup() = default;
  // Validates closure; throws InvalidArgument otherwise.
  static Subgroup from_members(GroupPtr parent, std::vector<int> members);
  static Subgroup generated_by(GroupPtr parent, std::span<const int> generators);
  static Subgroup whole(GroupPtr parent);
  static Subgroup trivial(GroupPtr parent);
  // Closure under multiplication is assumed.
  static Subgroup from_set_unchecked(GroupPtr parent, ElementSet set);

  const FiniteMatrixGroup& parent() const { return *parent_; }
  const GroupPtr& parent_ptr() const { return parent_; }
  const std::vector<int>& members() const { return members_; }
  const ElementSet& set() const { return set_; }
  std::size_t order() const { return members_.size(); }
  bool contains(int g) const { return set_.contains(g); }
  bool is_subgroup_of(const Subgroup& o) const { return set_.subset_of(o.set_); }
  // Small generating set, greedily chosen by element index.
  std::vector<int> generators() const;

  Subgroup conjugate(int g) const;
  Subgroup intersect(const Subgroup& o) const;

  bool operator==(const Subgroup& o) const { return members_ == o.members_; }
  // Order first, then member indices lexicographically.
  std::strong_ordering operator<=>(const Subgroup& o) const;

 private:
  GroupPtr parent_;
  std::vector<int> members_;
  ElementSet set_;
};

std::vector<Subgroup> subgroups(const GroupPtr& g);
// All subgroups of h of index 2.
std::vector<Subgroup> index_two_subgroups(const Subgroup& h);

struct SubgroupPair {
  Subgroup H;
  Subgroup K;

  SubgroupPair() = default;
  // Throws InvalidPair unless K <= H with index 1 or 2.
  SubgroupPair(Subgroup h, Subgroup k);

  int index() const { return static_cast<int>(H.order() / K.order()); }
  int type() const { return index(); }
  int degree() const { return static_cast<int>(H.parent().order() / H.order()); }
  // Smallest-index element of H \ K; -1 if K == H.
  int h_rep() const;
  SubgroupPair conjugate(int g) const;

  bool operator==(const SubgroupPair& o) const { return H == o.H && K == o.K; }
  // Lexicographic on (H members, K members).
  bool canonical_less(const SubgroupPair& o) const;
};

std::vector<SubgroupPair> subgroup_pairs(const std::vector<Subgroup>& subs);

struct PairClass {
  SubgroupPair representative;
  std::vector<SubgroupPair> members;
};

// Classes under simultaneous conjugation. Each representative is the
// lexicographically smallest member. Classes are ordered by representative.
std::vector<PairClass> pair_conjugacy_classes(const std::vector<SubgroupPair>& pairs);

// Left cosets xJ, each represented by its smallest-index element.
class CosetSpace {
 public:
  explicit CosetSpace(const Subgroup& j);

  std::size_t size() const { return reps_.size(); }
  int coset_of(int g) const { return coset_of_[g]; }
  int representative(int c) const { return reps_[c]; }
  // Coset index of g * (coset c).
  int act(int g, int c) const { return coset_of_[group_->mul(g, reps_[c])]; }
  const FiniteMatrixGroup& group() const { return *group_; }
  const Subgroup& subgroup() const { return j_; }

 private:
  GroupPtr group_;
  Subgroup j_;
  std::vector<int> coset_of_;
  std::vector<int> reps_;
};

struct DoubleCoset {
  int representative;         // smallest element index
  std::vector<int> cosets;    // indices into the coset space of J
};

// K-orbits on G/J, ordered by their smallest coset index.
std::vector<DoubleCoset> double_cosets(const Subgroup& k, const CosetSpace& cosets);

// (1/|S|) sum of the matrices of S.
RationalMatrix projection(const Subgroup& s);

// {g in G : g M = M}
Subgroup stabilizer_of_matrix(const GroupPtr& g, const RationalMatrix& m);

// Setwise stabilizer of a partition of G/J into blocks.
Subgroup partition_stabilizer(const CosetSpace& cosets,
                              const std::vector<std::vector<int>>& blocks);

// Some g with g X g^-1 = Y for both members of the pairs, if any.
std::optional<int> conjugating_element(const SubgroupPair& a, const SubgroupPair& b);

}  // namespace gdnn
