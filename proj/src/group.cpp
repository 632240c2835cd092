#include "gdnn/group.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <numeric>
#include <unordered_set>

#include "gdnn/error.hpp"

namespace gdnn {

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

ElementSet closure(const FiniteMatrixGroup& g, std::span<const int> gens) {
  ElementSet set(g.order());
  std::vector<int> queue{0};
  set.insert(0);
  for (std::size_t q = 0; q < queue.size(); ++q) {
    int x = queue[q];
    for (int s : gens) {
      int y = g.mul(x, s);
      if (!set.contains(y)) {
        set.insert(y);
        queue.push_back(y);
      }
    }
  }
  return set;
}

}  // namespace

// ---------------------------------------------------------------- elements

GroupElement::GroupElement(std::vector<int> perm, std::vector<int> signs)
    : perm_(std::move(perm)) {
  const std::size_t n = perm_.size();
  if (signs.size() != n) fail(ErrorCode::InvalidArgument, "perm/signs length mismatch");
  std::vector<bool> seen(n, false);
  for (int p : perm_) {
    if (p < 0 || static_cast<std::size_t>(p) >= n || seen[p])
      fail(ErrorCode::InvalidArgument, "not a permutation");
    seen[p] = true;
  }
  signs_.reserve(n);
  for (int s : signs) {
    if (s != 1 && s != -1) fail(ErrorCode::InvalidArgument, "signs must be +1 or -1");
    signs_.push_back(static_cast<std::int8_t>(s));
  }
}

GroupElement::GroupElement(std::vector<int> perm)
    : GroupElement(perm, std::vector<int>(perm.size(), 1)) {}

GroupElement GroupElement::identity(int n) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  return GroupElement(std::move(p));
}

GroupElement GroupElement::operator*(const GroupElement& o) const {
  if (o.degree() != degree()) fail(ErrorCode::ShapeMismatch, "degree mismatch in product");
  GroupElement r;
  const int n = degree();
  r.perm_.resize(n);
  r.signs_.resize(n);
  for (int i = 0; i < n; ++i) {
    int j = o.perm_[i];
    r.perm_[i] = perm_[j];
    r.signs_[i] = static_cast<std::int8_t>(o.signs_[i] * signs_[j]);
  }
  return r;
}

GroupElement GroupElement::inverse() const {
  GroupElement r;
  const int n = degree();
  r.perm_.resize(n);
  r.signs_.resize(n);
  for (int i = 0; i < n; ++i) {
    r.perm_[perm_[i]] = i;
    r.signs_[perm_[i]] = signs_[i];
  }
  return r;
}

bool GroupElement::is_unsigned() const {
  return std::all_of(signs_.begin(), signs_.end(), [](std::int8_t s) { return s == 1; });
}

bool GroupElement::is_identity() const {
  for (int i = 0; i < degree(); ++i)
    if (perm_[i] != i || signs_[i] != 1) return false;
  return true;
}

GroupElement GroupElement::unsigned_part() const { return GroupElement(perm_); }

std::vector<double> GroupElement::apply(std::span<const double> x) const {
  if (x.size() != perm_.size()) fail(ErrorCode::ShapeMismatch, "vector length mismatch");
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[perm_[i]] = signs_[i] * x[i];
  return y;
}

std::vector<std::vector<int>> GroupElement::dense() const {
  const int n = degree();
  std::vector<std::vector<int>> m(n, std::vector<int>(n, 0));
  for (int i = 0; i < n; ++i) m[perm_[i]][i] = signs_[i];
  return m;
}

RationalMatrix GroupElement::rational() const {
  const int n = degree();
  RationalMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(perm_[i], i) = signs_[i];
  return m;
}

RationalMatrix GroupElement::act(const RationalMatrix& m) const {
  if (m.rows() != perm_.size()) fail(ErrorCode::ShapeMismatch, "row count mismatch");
  RationalMatrix r(m.rows(), m.cols());
  for (std::size_t i = 0; i < perm_.size(); ++i)
    for (std::size_t c = 0; c < m.cols(); ++c)
      r(perm_[i], c) = signs_[i] < 0 ? Rational(-m(i, c)) : m(i, c);
  return r;
}

std::size_t GroupElement::hash() const {
  std::size_t h = perm_.size();
  for (std::size_t i = 0; i < perm_.size(); ++i)
    h = mix(h, static_cast<std::size_t>(perm_[i]) * 2 + (signs_[i] < 0));
  return h;
}

// ------------------------------------------------------------------ groups

GroupPtr FiniteMatrixGroup::from_generators(int degree, std::vector<GroupElement> generators,
                                            std::string name, std::size_t cap) {
  if (degree <= 0) fail(ErrorCode::InvalidArgument, "degree must be positive");
  for (const auto& s : generators)
    if (s.degree() != degree) fail(ErrorCode::InvalidArgument, "generator degree mismatch");

  auto g = std::shared_ptr<FiniteMatrixGroup>(new FiniteMatrixGroup());
  g->degree_ = degree;
  g->name_ = std::move(name);
  g->generators_ = std::move(generators);

  g->elements_.push_back(GroupElement::identity(degree));
  g->lookup_.emplace(g->elements_[0], 0);
  for (std::size_t q = 0; q < g->elements_.size(); ++q) {
    for (const auto& s : g->generators_) {
      GroupElement y = g->elements_[q] * s;
      if (g->lookup_.contains(y)) continue;
      if (g->elements_.size() >= cap)
        fail(ErrorCode::CapExceeded,
             "group order exceeds cap of " + std::to_string(cap));
      g->lookup_.emplace(y, static_cast<int>(g->elements_.size()));
      g->elements_.push_back(std::move(y));
    }
  }

  const std::size_t n = g->elements_.size();
  g->mult_.resize(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      g->mult_[a * n + b] = g->lookup_.at(g->elements_[a] * g->elements_[b]);
  g->inverse_.resize(n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (g->mult_[a * n + b] == 0) {
        g->inverse_[a] = static_cast<int>(b);
        break;
      }
  for (const auto& s : g->generators_) g->generator_indices_.push_back(g->lookup_.at(s));
  return g;
}

std::optional<int> FiniteMatrixGroup::index_of(const GroupElement& g) const {
  auto it = lookup_.find(g);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

bool FiniteMatrixGroup::is_unsigned() const {
  return std::all_of(generators_.begin(), generators_.end(),
                     [](const GroupElement& s) { return s.is_unsigned(); });
}

// ------------------------------------------------------------- element sets

std::size_t ElementSet::count() const {
  std::size_t c = 0;
  for (auto w : words_) c += std::popcount(w);
  return c;
}

std::vector<int> ElementSet::members() const {
  std::vector<int> out;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    std::uint64_t bits = words_[w];
    while (bits) {
      int b = std::countr_zero(bits);
      out.push_back(static_cast<int>(w * 64 + b));
      bits &= bits - 1;
    }
  }
  return out;
}

bool ElementSet::subset_of(const ElementSet& o) const {
  for (std::size_t w = 0; w < words_.size(); ++w)
    if (words_[w] & ~o.words_[w]) return false;
  return true;
}

ElementSet ElementSet::operator&(const ElementSet& o) const {
  ElementSet r(*this);
  for (std::size_t w = 0; w < words_.size(); ++w) r.words_[w] &= o.words_[w];
  return r;
}

ElementSet ElementSet::operator|(const ElementSet& o) const {
  ElementSet r(*this);
  for (std::size_t w = 0; w < words_.size(); ++w) r.words_[w] |= o.words_[w];
  return r;
}

ElementSet ElementSet::complement() const {
  ElementSet r(*this);
  for (auto& w : r.words_) w = ~w;
  if (n_ % 64) r.words_.back() &= (std::uint64_t{1} << (n_ % 64)) - 1;
  return r;
}

std::size_t ElementSet::hash() const {
  std::size_t h = n_;
  for (auto w : words_) h = mix(h, w);
  return h;
}

// ---------------------------------------------------------------- subgroups

Subgroup Subgroup::from_set_unchecked(GroupPtr parent, ElementSet set) {
  Subgroup s;
  s.parent_ = std::move(parent);
  s.members_ = set.members();
  s.set_ = std::move(set);
  return s;
}

Subgroup Subgroup::from_members(GroupPtr parent, std::vector<int> members) {
  const auto& g = *parent;
  ElementSet set(g.order());
  for (int m : members) {
    if (m < 0 || static_cast<std::size_t>(m) >= g.order())
      fail(ErrorCode::InvalidArgument, "element index out of range");
    set.insert(m);
  }
  if (!set.contains(0)) fail(ErrorCode::InvalidArgument, "subgroup must contain identity");
  auto mem = set.members();
  for (int a : mem)
    for (int b : mem)
      if (!set.contains(g.mul(a, b)))
        fail(ErrorCode::InvalidArgument, "element set is not closed under multiplication");
  return from_set_unchecked(std::move(parent), std::move(set));
}

Subgroup Subgroup::generated_by(GroupPtr parent, std::span<const int> generators) {
  ElementSet set = closure(*parent, generators);
  return from_set_unchecked(std::move(parent), std::move(set));
}

Subgroup Subgroup::whole(GroupPtr parent) {
  ElementSet set(parent->order());
  for (std::size_t i = 0; i < parent->order(); ++i) set.insert(static_cast<int>(i));
  return from_set_unchecked(std::move(parent), std::move(set));
}

Subgroup Subgroup::trivial(GroupPtr parent) {
  ElementSet set(parent->order());
  set.insert(0);
  return from_set_unchecked(std::move(parent), std::move(set));
}

std::vector<int> Subgroup::generators() const {
  std::vector<int> gens;
  ElementSet cur(parent_->order());
  cur.insert(0);
  for (int m : members_) {
    if (cur.contains(m)) continue;
    gens.push_back(m);
    cur = closure(*parent_, gens);
  }
  return gens;
}

Subgroup Subgroup::conjugate(int g) const {
  ElementSet set(parent_->order());
  for (int m : members_) set.insert(parent_->conjugate(g, m));
  return from_set_unchecked(parent_, std::move(set));
}

Subgroup Subgroup::intersect(const Subgroup& o) const {
  return from_set_unchecked(parent_, set_ & o.set_);
}

std::strong_ordering Subgroup::operator<=>(const Subgroup& o) const {
  if (auto c = members_.size() <=> o.members_.size(); c != 0) return c;
  return members_ <=> o.members_;
}

std::vector<Subgroup> subgroups(const GroupPtr& gp) {
  const auto& g = *gp;
  const std::size_t n = g.order();

  std::unordered_set<ElementSet, ElementSetHash> seen;
  std::vector<ElementSet> found;
  std::vector<std::vector<int>> found_gens;
  std::vector<int> cyclic_gen;
  std::vector<ElementSet> cyclic;

  auto add = [&](ElementSet s, std::vector<int> gens) {
    if (seen.insert(s).second) {
      found.push_back(std::move(s));
      found_gens.push_back(std::move(gens));
      return true;
    }
    return false;
  };

  add(closure(g, {}), {});
  for (std::size_t x = 1; x < n; ++x) {
    int xi = static_cast<int>(x);
    ElementSet c = closure(g, std::span<const int>(&xi, 1));
    if (add(c, {xi})) {
      cyclic.push_back(c);
      cyclic_gen.push_back(xi);
    }
  }

  // Join every known subgroup with every cyclic subgroup until nothing new.
  for (std::size_t q = 0; q < found.size(); ++q) {
    for (std::size_t c = 0; c < cyclic.size(); ++c) {
      if (cyclic[c].subset_of(found[q])) continue;
      std::vector<int> gens = found_gens[q];
      gens.push_back(cyclic_gen[c]);
      ElementSet j = closure(g, gens);
      add(std::move(j), std::move(gens));
    }
  }

  std::vector<Subgroup> out;
  out.reserve(found.size());
  for (auto& s : found) out.push_back(Subgroup::from_set_unchecked(gp, std::move(s)));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Subgroup> index_two_subgroups(const Subgroup& h) {
  const auto& g = h.parent();
  const auto gens = h.generators();
  const std::size_t r = gens.size();
  std::vector<Subgroup> out;
  std::unordered_set<ElementSet, ElementSetHash> seen;
  if (r == 0 || r > 20) return out;

  std::vector<int> label(g.order());
  for (std::uint32_t mask = 1; mask < (1U << r); ++mask) {
    // Attempt a homomorphism H -> {+1,-1} with generator values from mask.
    std::fill(label.begin(), label.end(), 0);
    label[0] = 1;
    std::vector<int> queue{0};
    bool ok = true;
    for (std::size_t q = 0; q < queue.size() && ok; ++q) {
      int x = queue[q];
      for (std::size_t i = 0; i < r && ok; ++i) {
        int y = g.mul(x, gens[i]);
        int v = label[x] * (((mask >> i) & 1U) ? -1 : 1);
        if (label[y] == 0) {
          label[y] = v;
          queue.push_back(y);
        } else if (label[y] != v) {
          ok = false;
        }
      }
    }
    if (!ok) continue;
    ElementSet k(g.order());
    for (int m : h.members())
      if (label[m] == 1) k.insert(m);
    if (seen.insert(k).second) out.push_back(Subgroup::from_set_unchecked(h.parent_ptr(), k));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// -------------------------------------------------------------------- pairs

SubgroupPair::SubgroupPair(Subgroup h, Subgroup k) : H(std::move(h)), K(std::move(k)) {
  if (&H.parent() != &K.parent()) fail(ErrorCode::InvalidPair, "subgroups of different groups");
  if (!K.is_subgroup_of(H)) fail(ErrorCode::InvalidPair, "K is not contained in H");
  if (H.order() != K.order() && H.order() != 2 * K.order())
    fail(ErrorCode::InvalidPair, "K must have index 1 or 2 in H");
}

int SubgroupPair::h_rep() const {
  for (int m : H.members())
    if (!K.contains(m)) return m;
  return -1;
}

SubgroupPair SubgroupPair::conjugate(int g) const {
  return SubgroupPair(H.conjugate(g), K.conjugate(g));
}

bool SubgroupPair::canonical_less(const SubgroupPair& o) const {
  if (H.members() != o.H.members()) return H.members() < o.H.members();
  return K.members() < o.K.members();
}

std::vector<SubgroupPair> subgroup_pairs(const std::vector<Subgroup>& subs) {
  std::vector<SubgroupPair> out;
  for (const auto& h : subs) {
    out.emplace_back(h, h);
    if (h.order() % 2) continue;
    for (const auto& k : subs)
      if (2 * k.order() == h.order() && k.is_subgroup_of(h)) out.emplace_back(h, k);
  }
  return out;
}

std::vector<PairClass> pair_conjugacy_classes(const std::vector<SubgroupPair>& pairs) {
  std::vector<PairClass> out;
  if (pairs.empty()) return out;
  const auto& g = pairs.front().H.parent();

  struct Key {
    ElementSet h, k;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const { return mix(k.h.hash(), k.k.hash()); }
  };
  std::unordered_map<Key, std::size_t, KeyHash> index;
  for (std::size_t i = 0; i < pairs.size(); ++i) index.emplace(Key{pairs[i].H.set(), pairs[i].K.set()}, i);

  std::vector<bool> done(pairs.size(), false);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (done[i]) continue;
    PairClass cls;
    std::unordered_set<std::size_t> members;
    for (std::size_t x = 0; x < g.order(); ++x) {
      SubgroupPair c = pairs[i].conjugate(static_cast<int>(x));
      auto it = index.find(Key{c.H.set(), c.K.set()});
      std::size_t j;
      if (it == index.end()) {
        fail(ErrorCode::InvalidArgument, "pair list is not closed under conjugation");
      }
      j = it->second;
      if (members.insert(j).second) {
        done[j] = true;
        cls.members.push_back(pairs[j]);
      }
    }
    std::sort(cls.members.begin(), cls.members.end(),
              [](const SubgroupPair& a, const SubgroupPair& b) { return a.canonical_less(b); });
    cls.representative = cls.members.front();
    out.push_back(std::move(cls));
  }
  std::sort(out.begin(), out.end(), [](const PairClass& a, const PairClass& b) {
    return a.representative.canonical_less(b.representative);
  });
  return out;
}

std::optional<int> conjugating_element(const SubgroupPair& a, const SubgroupPair& b) {
  if (a.H.order() != b.H.order() || a.K.order() != b.K.order()) return std::nullopt;
  const auto& g = a.H.parent();
  for (std::size_t x = 0; x < g.order(); ++x) {
    int xi = static_cast<int>(x);
    bool ok = true;
    for (int m : a.H.members())
      if (!b.H.contains(g.conjugate(xi, m))) { ok = false; break; }
    if (!ok) continue;
    for (int m : a.K.members())
      if (!b.K.contains(g.conjugate(xi, m))) { ok = false; break; }
    if (ok) return xi;
  }
  return std::nullopt;
}

// ------------------------------------------------------------------ cosets

CosetSpace::CosetSpace(const Subgroup& j)
    : group_(j.parent_ptr()), j_(j), coset_of_(j.parent().order(), -1) {
  const auto& g = *group_;
  for (std::size_t x = 0; x < g.order(); ++x) {
    if (coset_of_[x] >= 0) continue;
    int c = static_cast<int>(reps_.size());
    reps_.push_back(static_cast<int>(x));
    for (int m : j.members()) coset_of_[g.mul(static_cast<int>(x), m)] = c;
  }
}

std::vector<DoubleCoset> double_cosets(const Subgroup& k, const CosetSpace& cosets) {
  std::vector<int> block(cosets.size(), -1);
  std::vector<DoubleCoset> out;
  for (std::size_t c = 0; c < cosets.size(); ++c) {
    if (block[c] >= 0) continue;
    DoubleCoset d{cosets.representative(static_cast<int>(c)), {}};
    int b = static_cast<int>(out.size());
    for (int m : k.members()) {
      int e = cosets.act(m, static_cast<int>(c));
      if (block[e] < 0) {
        block[e] = b;
        d.cosets.push_back(e);
        d.representative = std::min(d.representative, cosets.representative(e));
      }
    }
    std::sort(d.cosets.begin(), d.cosets.end());
    out.push_back(std::move(d));
  }
  return out;
}

RationalMatrix projection(const Subgroup& s) {
  const auto& g = s.parent();
  const int n = g.degree();
  std::vector<long> acc(static_cast<std::size_t>(n) * n, 0);
  for (int m : s.members()) {
    const auto& e = g.element(m);
    for (int i = 0; i < n; ++i) acc[static_cast<std::size_t>(e.image(i)) * n + i] += e.sign(i);
  }
  RationalMatrix p(n, n);
  const long order = static_cast<long>(s.order());
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      long v = acc[static_cast<std::size_t>(r) * n + c];
      if (v) {
        p(r, c) = Rational(v) / Rational(order);
      }
    }
  return p;
}

Subgroup stabilizer_of_matrix(const GroupPtr& gp, const RationalMatrix& m) {
  const auto& g = *gp;
  if (m.rows() != static_cast<std::size_t>(g.degree()))
    fail(ErrorCode::ShapeMismatch, "matrix rows must equal the group degree");
  ElementSet set(g.order());
  for (std::size_t x = 0; x < g.order(); ++x) {
    const auto& e = g.element(static_cast<int>(x));
    bool ok = true;
    for (int i = 0; i < g.degree() && ok; ++i) {
      int r = e.image(i);
      int s = e.sign(i);
      for (std::size_t c = 0; c < m.cols(); ++c) {
        const Rational& a = m(i, c);
        const Rational& b = m(r, c);
        if (s > 0 ? (a != b) : (a != -b)) {
          ok = false;
          break;
        }
      }
    }
    if (ok) set.insert(static_cast<int>(x));
  }
  return Subgroup::from_set_unchecked(gp, std::move(set));
}

Subgroup partition_stabilizer(const CosetSpace& cosets,
                              const std::vector<std::vector<int>>& blocks) {
  const std::size_t n = cosets.size();
  std::vector<int> block_of(n, -1);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].empty()) fail(ErrorCode::PartitionInvalid, "empty block");
    for (int c : blocks[b]) {
      if (c < 0 || static_cast<std::size_t>(c) >= n || block_of[c] >= 0)
        fail(ErrorCode::PartitionInvalid, "blocks overlap or are out of range");
      block_of[c] = static_cast<int>(b);
    }
  }
  for (int b : block_of)
    if (b < 0) fail(ErrorCode::PartitionInvalid, "blocks do not cover the coset space");

  const auto& g = cosets.group();
  ElementSet set(g.order());
  for (std::size_t x = 0; x < g.order(); ++x) {
    bool ok = true;
    for (std::size_t c = 0; c < n && ok; ++c)
      ok = block_of[cosets.act(static_cast<int>(x), static_cast<int>(c))] == block_of[c];
    if (ok) set.insert(static_cast<int>(x));
  }
  return Subgroup::from_set_unchecked(cosets.subgroup().parent_ptr(), std::move(set));
}

}  // namespace gdnn
