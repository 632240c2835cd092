#include <map>
#include <set>

#include "doctest.h"
#include "gdnn/error.hpp"
#include "gdnn/group.hpp"
#include "gdnn/named_groups.hpp"
#include "oracles.hpp"

using namespace gdnn;

namespace {

std::set<std::vector<int>> member_lists(const std::vector<Subgroup>& subs) {
  std::set<std::vector<int>> out;
  for (const auto& s : subs) out.insert(s.members());
  return out;
}

int error_code(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return static_cast<int>(e.code());
  }
  return -1;
}

}  // namespace

TEST_CASE("signed permutation product matches dense matrix product") {
  GroupElement a({2, 0, 1}, {1, -1, 1});
  GroupElement b({1, 2, 0}, {-1, -1, 1});
  CHECK((a * b).rational() == a.rational() * b.rational());
  CHECK((a * a.inverse()).is_identity());
  CHECK(oracle::dense(a) == a.rational());
  auto y = a.apply(std::vector<double>{1.0, 2.0, 3.0});
  CHECK(y == std::vector<double>{-2.0, 3.0, 1.0});
  CHECK(a.unsigned_part().is_unsigned());
}

TEST_CASE("invalid elements are rejected") {
  CHECK(error_code([] { GroupElement({0, 0}); }) == static_cast<int>(ErrorCode::InvalidArgument));
  CHECK(error_code([] { GroupElement({0, 1}, {1, 2}); }) == static_cast<int>(ErrorCode::InvalidArgument));
  CHECK(error_code([] { GroupElement({1, 0}) * GroupElement({0, 1, 2}); }) ==
        static_cast<int>(ErrorCode::ShapeMismatch));
}

TEST_CASE("named group orders") {
  const std::map<std::string, std::size_t> orders = {
      {"Z6", 6},     {"C8", 8},          {"C2xC4", 8},     {"C2^3", 8},     {"D4", 8},
      {"Q8", 8},     {"C8_min", 8},      {"C2xC4_min", 8}, {"C2^3_min", 8}, {"D4_min", 8},
      {"Q8_min", 8}, {"Icosahedral", 60}, {"BinProd8", 8},  {"BinProd16", 128}};
  for (const auto& [name, order] : orders) {
    CAPTURE(name);
    auto g = named_group(name);
    CHECK(g->order() == order);
    for (std::size_t i = 0; i < g->order(); ++i) {
      const int x = static_cast<int>(i);
      CHECK(g->mul(x, g->inv(x)) == *g->index_of(GroupElement::identity(g->degree())));
    }
  }
  CHECK(named_group("Icosahedral")->degree() == 12);
  CHECK(named_group("BinProd16")->degree() == 16);
  CHECK(named_group("D4_min")->degree() == 4);
}

TEST_CASE("unknown names and bad binary product sizes") {
  CHECK(named_group("Z6_cyclic_perms") == named_group("Z6"));
  CHECK(error_code([] { named_group("S7"); }) == static_cast<int>(ErrorCode::UnknownName));
  CHECK(error_code([] { binprod_group(12); }) == static_cast<int>(ErrorCode::BadDimension));
  CHECK(error_code([] { binprod_group(4); }) == static_cast<int>(ErrorCode::BadDimension));
  CHECK(error_code([] { binprod_group(32); }) == static_cast<int>(ErrorCode::CapExceeded));
}

TEST_CASE("binary product group is generated by pairs of adjacent swaps") {
  auto g = binprod_group(8);
  for (const auto& e : g->elements()) {
    CHECK(e.is_unsigned());
    int swapped = 0;
    for (int j = 0; j < 4; ++j) {
      const bool a = e.image(2 * j) == 2 * j + 1 && e.image(2 * j + 1) == 2 * j;
      const bool fixed = e.image(2 * j) == 2 * j && e.image(2 * j + 1) == 2 * j + 1;
      CHECK((a || fixed));
      swapped += a;
    }
    CHECK(swapped % 2 == 0);
  }
}

TEST_CASE("closure respects the cap") {
  std::vector<int> p(8);
  for (int i = 0; i < 8; ++i) p[i] = (i + 1) % 8;
  GroupElement shift(p);
  GroupElement swap({1, 0, 2, 3, 4, 5, 6, 7});
  CHECK(error_code([&] { FiniteMatrixGroup::from_generators(8, {shift, swap}, "S8", 512); }) ==
        static_cast<int>(ErrorCode::CapExceeded));
}

TEST_CASE("subgroup enumeration matches brute force on small groups") {
  for (std::string name : {"Z6", "C8", "C2xC4", "C2^3", "D4", "Q8", "D4_min", "BinProd8"}) {
    CAPTURE(name);
    auto g = named_group(name);
    CHECK(member_lists(subgroups(g)) == oracle::subgroups_by_subsets(*g));
  }
}

TEST_CASE("subgroup counts of textbook groups") {
  const std::map<std::string, std::size_t> counts = {{"Z6", 4},  {"C8", 4}, {"C2xC4", 8},
                                                      {"C2^3", 16}, {"D4", 10}, {"Q8", 6},
                                                      {"Icosahedral", 59}};
  for (const auto& [name, n] : counts) {
    CAPTURE(name);
    CHECK(subgroups(named_group(name)).size() == n);
  }
  auto a5 = named_group("Icosahedral");
  CHECK(member_lists(subgroups(a5)) == oracle::two_generated_subgroups(*a5));
}

TEST_CASE("index two subgroups and pair validation") {
  auto g = named_group("D4");
  auto whole = Subgroup::whole(g);
  auto halves = index_two_subgroups(whole);
  CHECK(halves.size() == 3);
  for (const auto& k : halves) {
    SubgroupPair p(whole, k);
    CHECK(p.index() == 2);
    CHECK(p.degree() == 1);
    CHECK(!k.contains(p.h_rep()));
  }
  auto trivial = Subgroup::trivial(g);
  CHECK(error_code([&] { SubgroupPair(whole, trivial); }) == static_cast<int>(ErrorCode::InvalidPair));
  CHECK(error_code([&] { SubgroupPair(trivial, whole); }) == static_cast<int>(ErrorCode::InvalidPair));
  CHECK(error_code([&] { Subgroup::from_members(g, {0, 1}); }) != -1);
}

TEST_CASE("pair conjugacy classes partition the pairs") {
  for (std::string name : {"Z6", "D4", "Q8", "D4_min", "Icosahedral"}) {
    CAPTURE(name);
    auto g = named_group(name);
    auto pairs = subgroup_pairs(subgroups(g));
    auto classes = pair_conjugacy_classes(pairs);
    std::size_t total = 0;
    for (const auto& c : classes) {
      total += c.members.size();
      for (const auto& m : c.members) {
        CHECK(!m.canonical_less(c.representative));
        auto x = conjugating_element(c.representative, m);
        REQUIRE(x.has_value());
        CHECK(oracle::conjugate(*g, c.representative.H.members(), *x) == m.H.members());
        CHECK(oracle::conjugate(*g, c.representative.K.members(), *x) == m.K.members());
      }
    }
    CHECK(total == pairs.size());
    for (std::size_t a = 0; a < classes.size(); ++a)
      for (std::size_t b = a + 1; b < classes.size(); ++b)
        CHECK(!conjugating_element(classes[a].representative, classes[b].representative));
  }
}

TEST_CASE("conjugacy classes of subgroups") {
  auto count_classes = [](const GroupPtr& g) {
    std::set<std::vector<int>> seen;
    int classes = 0;
    for (const auto& s : subgroups(g)) {
      if (seen.count(s.members())) continue;
      ++classes;
      for (std::size_t x = 0; x < g->order(); ++x)
        seen.insert(oracle::conjugate(*g, s.members(), static_cast<int>(x)));
    }
    return classes;
  };
  CHECK(count_classes(named_group("D4")) == 8);
  CHECK(count_classes(named_group("Icosahedral")) == 9);
  CHECK(count_classes(named_group("Q8")) == 6);
}

TEST_CASE("coset space and double cosets") {
  auto g = named_group("D4");
  for (const auto& j : subgroups(g)) {
    CosetSpace cs(j);
    CHECK(cs.size() * j.order() == g->order());
    for (std::size_t c = 0; c < cs.size(); ++c)
      CHECK(cs.coset_of(cs.representative(static_cast<int>(c))) == static_cast<int>(c));
    for (const auto& k : subgroups(g)) {
      auto dc = double_cosets(k, cs);
      std::size_t covered = 0;
      for (const auto& d : dc) covered += d.cosets.size();
      CHECK(covered == cs.size());
    }
  }
}

TEST_CASE("projection is idempotent and stabilized by the subgroup") {
  auto g = named_group("Icosahedral");
  for (const auto& s : subgroups(g)) {
    auto p = projection(s);
    CHECK(p * p == p);
    CHECK(stabilizer_of_matrix(g, p).members() == oracle::phi_first(*g, s.members(), s.members()));
    for (int x : s.members()) CHECK(g->element(x).act(p) == p);
  }
}

TEST_CASE("partition stabilizer validation") {
  auto g = named_group("Z6");
  CosetSpace cs(Subgroup::trivial(g));
  CHECK(error_code([&] { partition_stabilizer(cs, {{0, 1}, {1, 2, 3, 4, 5}}); }) ==
        static_cast<int>(ErrorCode::PartitionInvalid));
  CHECK(error_code([&] { partition_stabilizer(cs, {{0, 1, 2}}); }) ==
        static_cast<int>(ErrorCode::PartitionInvalid));
  CHECK(partition_stabilizer(cs, {{0, 2, 4}, {1, 3, 5}}).order() == 3);
  CHECK(partition_stabilizer(cs, {{0, 3}, {1, 4}, {2, 5}}).order() == 2);
  CHECK(partition_stabilizer(cs, {{0}, {1, 2, 3, 4, 5}}).order() == 1);
}

TEST_CASE("rational matrix rank") {
  RationalMatrix m(3, 3);
  m(0, 0) = 1;
  m(0, 1) = 2;
  m(1, 0) = 2;
  m(1, 1) = 4;
  m(2, 2) = Rational(1, 3);
  CHECK(m.rank() == 2);
  CHECK(RationalMatrix::identity(4).rank() == 4);
  CHECK((m - m).is_zero());
}
