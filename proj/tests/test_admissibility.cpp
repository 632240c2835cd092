#include <random>

#include "doctest.h"
#include "gdnn/admissibility.hpp"
#include "gdnn/error.hpp"
#include "gdnn/named_groups.hpp"
#include "oracles.hpp"

using namespace gdnn;

namespace {

ArchitectureSpec spec_of(const GroupContext& ctx, const std::vector<int>& classes, bool output = true) {
  ArchitectureSpec s;
  s.group = ctx.group_ptr();
  for (int c : classes) s.layers.emplace_back(std::vector<Summand>{{ctx.irrep(c), 1}});
  if (output) s.layers.push_back(trivial_layer(s.group));
  return s;
}

// phi of the pair at the end of a chain of pair classes, from the
// projection definitions.
std::vector<int> oracle_phi(const GroupContext& ctx, const std::vector<int>& prefix, const SubgroupPair& p,
                            CountMode mode) {
  const auto& g = ctx.group();
  if (prefix.empty()) return oracle::phi_first(g, p.H.members(), p.K.members());
  if (mode == CountMode::CReLU)
    return oracle::theta(g, p.H.members(), p.K.members(), ctx.pair(prefix.back()).K.members());
  std::vector<int> out = oracle::phi_first(g, p.H.members(), p.K.members());
  for (int c : prefix) {
    auto t = oracle::theta(g, p.H.members(), p.K.members(), ctx.pair(c).H.members());
    std::vector<int> both;
    std::set_intersection(out.begin(), out.end(), t.begin(), t.end(), std::back_inserter(both));
    out = both;
  }
  return out;
}

void oracle_count(const GroupContext& ctx, CountMode mode, int max_layers, std::vector<int>& chosen,
                  bool ok, std::vector<long long>& adm, std::vector<long long>& tot) {
  if (static_cast<int>(chosen.size()) == max_layers) return;
  for (std::size_t c = 0; c < ctx.pair_classes().size(); ++c) {
    const auto& p = ctx.pair(static_cast<int>(c));
    if (p.degree() <= 1) continue;
    if (!chosen.empty() && p.degree() >= ctx.pair(chosen.back()).degree()) continue;
    const bool here = ok && oracle_phi(ctx, chosen, p, mode) == p.K.members();
    tot[chosen.size()] += 1;
    adm[chosen.size()] += here;
    chosen.push_back(static_cast<int>(c));
    oracle_count(ctx, mode, max_layers, chosen, here, adm, tot);
    chosen.pop_back();
  }
}

}  // namespace

TEST_CASE("theta equals the projection stabilizer on small groups") {
  for (std::string name : {"Z6", "C8", "C2xC4", "C2^3", "D4", "Q8", "D4_min"}) {
    CAPTURE(name);
    auto g = named_group(name);
    auto subs = subgroups(g);
    for (const auto& p : subgroup_pairs(subs))
      for (const auto& j : subs)
        CHECK(theta(p, j).members() == oracle::theta(*g, p.H.members(), p.K.members(), j.members()));
  }
}

TEST_CASE("theta on random icosahedral triples") {
  auto g = named_group("Icosahedral");
  auto subs = subgroups(g);
  auto pairs = subgroup_pairs(subs);
  std::mt19937_64 rng(11);
  for (int t = 0; t < 40; ++t) {
    const auto& p = pairs[rng() % pairs.size()];
    const auto& j = subs[rng() % subs.size()];
    CHECK(theta(p, j).members() == oracle::theta(*g, p.H.members(), p.K.members(), j.members()));
  }
}

TEST_CASE("theta conjugation audit") {
  for (std::string name : {"D4", "Q8", "Icosahedral"}) {
    CAPTURE(name);
    auto g = named_group(name);
    auto subs = subgroups(g);
    auto pairs = subgroup_pairs(subs);
    std::mt19937_64 rng(5);
    for (int t = 0; t < 60; ++t) {
      const auto& p = pairs[rng() % pairs.size()];
      const auto& j = subs[rng() % subs.size()];
      auto r = theta_conjugation_audit(p, j, static_cast<int>(rng() % g->order()));
      CHECK(r.equivariant);
      CHECK(r.invariant);
    }
  }
}

TEST_CASE("theta cache returns the computed values") {
  auto g = named_group("D4");
  auto subs = subgroups(g);
  ThetaCache cache;
  for (const auto& p : subgroup_pairs(subs))
    for (const auto& j : subs) CHECK(cache.get(p, j) == theta(p, j));
  const auto n = cache.size();
  for (const auto& p : subgroup_pairs(subs)) cache.get(p, subs.front());
  CHECK(cache.size() == n);
  CHECK(cache.hits() > 0);
}

TEST_CASE("first-layer phi") {
  for (std::string name : {"Z6", "D4", "Q8", "C2^3", "Icosahedral"}) {
    CAPTURE(name);
    auto g = named_group(name);
    for (const auto& p : subgroup_pairs(subgroups(g))) {
      auto f = phi_first(p);
      CHECK(f.members() == oracle::phi_first(*g, p.H.members(), p.K.members()));
      CHECK(p.K.is_subgroup_of(f));
    }
  }
  // rho_(3,2) of Z6: (Z2, Z1) has phi = Z1.
  auto g = named_group("Z6");
  Subgroup z2, z1 = Subgroup::trivial(g);
  for (const auto& s : subgroups(g))
    if (s.order() == 2) z2 = s;
  CHECK(phi_first(SubgroupPair(z2, z1)).order() == 1);
}

TEST_CASE("phi shrinks as the prefix grows and always contains K") {
  for (std::string name : {"D4", "Icosahedral"}) {
    CAPTURE(name);
    GroupContext ctx(named_group(name));
    std::mt19937_64 rng(2);
    const int n = static_cast<int>(ctx.pair_classes().size());
    for (int t = 0; t < 30; ++t) {
      std::vector<int> chain;
      for (int l = 0; l < 3; ++l) chain.push_back(static_cast<int>(rng() % n));
      auto spec = spec_of(ctx, chain, false);
      const auto& p = ctx.pair(static_cast<int>(rng() % n));
      Subgroup prev = phi(spec, 0, p);
      for (std::size_t l = 1; l <= chain.size(); ++l) {
        Subgroup cur = phi(spec, l, p);
        CHECK(cur.is_subgroup_of(prev));
        CHECK(p.K.is_subgroup_of(cur));
        prev = cur;
      }
    }
  }
}

TEST_CASE("admissibility of small architectures") {
  GroupContext ctx(named_group("Z6"));
  int r32 = -1;
  for (std::size_t c = 0; c < ctx.pair_classes().size(); ++c) {
    const auto& p = ctx.pair(static_cast<int>(c));
    if (p.degree() == 3 && p.index() == 2) r32 = static_cast<int>(c);
  }
  REQUIRE(r32 >= 0);
  CHECK(is_admissible(spec_of(ctx, {r32})));

  // A failure names the layer and reports phi.
  GroupContext d4(named_group("D4_min"));
  bool found = false;
  const int n = static_cast<int>(d4.pair_classes().size());
  for (int a = 0; a < n && !found; ++a)
    for (int b = 0; b < n && !found; ++b) {
      const bool first_ok = is_admissible(spec_of(d4, {a}, false));
      auto report = check_admissible(spec_of(d4, {a, b}));
      if (report.admissible) continue;
      found = true;
      REQUIRE(report.failure);
      CHECK(report.failure->layer == (first_ok ? 2 : 1));
      CHECK(report.failure->expected_K == d4.pair(first_ok ? b : a).K.members());
      CHECK(report.failure->phi != report.failure->expected_K);
    }
  CHECK(found);
}

TEST_CASE("admissible_next agrees with check_admissible") {
  GroupContext ctx(named_group("D4_min"));
  auto empty = spec_of(ctx, {}, false);
  auto first = admissible_next(ctx, empty, true);
  CHECK(!first.empty());
  for (int c : first) {
    auto prefix = spec_of(ctx, {c}, false);
    CHECK(is_admissible(prefix));
    auto next = admissible_next(ctx, prefix, true);
    for (std::size_t d = 0; d < ctx.pair_classes().size(); ++d) {
      auto spec = spec_of(ctx, {c, static_cast<int>(d)}, false);
      const bool listed = std::find(next.begin(), next.end(), static_cast<int>(d)) != next.end();
      const bool smaller = ctx.pair(static_cast<int>(d)).degree() < ctx.pair(c).degree();
      CHECK(listed == (smaller && is_admissible(spec)));
    }
  }
  for (std::size_t c = 0; c < ctx.pair_classes().size(); ++c) {
    auto prefix = spec_of(ctx, {static_cast<int>(c)}, false);
    if (!is_admissible(prefix)) CHECK_THROWS_AS(admissible_next(ctx, prefix, true), Error);
  }
}

TEST_CASE("architecture counts match a direct enumeration") {
  for (std::string name : {"C8", "D4", "C2^3", "Q8", "Z6", "D4_min", "Q8_min", "C2xC4_min"}) {
    for (auto mode : {CountMode::GDNN, CountMode::CReLU}) {
      CAPTURE(name);
      CAPTURE(static_cast<int>(mode));
      GroupContext ctx(named_group(name));
      auto rows = count_architectures(ctx, mode, 4, 2);
      std::vector<long long> adm(3, 0), tot(3, 0);
      std::vector<int> chosen;
      oracle_count(ctx, mode, 3, chosen, true, adm, tot);
      for (const auto& r : rows) {
        CAPTURE(r.depth);
        CHECK(r.admissible == adm[r.depth - 2]);
        CHECK(r.total == tot[r.depth - 2]);
        CHECK(r.admissible <= r.total);
      }
    }
  }
  GroupContext c8(named_group("C8"));
  auto rows = count_architectures(c8, CountMode::GDNN, 2);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].admissible == 5);
  CHECK(rows[0].total == 5);
}

TEST_CASE("counting is independent of the thread count") {
  GroupContext ctx(named_group("C2^3"));
  auto a = count_architectures(ctx, CountMode::GDNN, 0, 1);
  auto b = count_architectures(ctx, CountMode::GDNN, 0, 3);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].admissible == b[i].admissible);
    CHECK(a[i].total == b[i].total);
  }
}
