#include "gdnn/named_groups.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <map>
#include <mutex>

#include "gdnn/error.hpp"

namespace gdnn {

namespace {

using Table = std::vector<std::vector<int>>;

Table table_from(int n, const std::function<int(int, int)>& mul) {
  Table t(n, std::vector<int>(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) t[a][b] = mul(a, b);
  return t;
}

GroupElement cycles(int n, const std::vector<std::vector<int>>& cs) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  for (const auto& c : cs)
    for (std::size_t i = 0; i < c.size(); ++i) p[c[i]] = c[(i + 1) % c.size()];
  return GroupElement(std::move(p));
}

// Quaternion units: label = 2*k + s, k in {1,i,j,k}, s the sign bit.
int quat_mul(int a, int b) {
  static const int idx[4][4] = {{0, 1, 2, 3}, {1, 0, 3, 2}, {2, 3, 0, 1}, {3, 2, 1, 0}};
  static const int sgn[4][4] = {{0, 0, 0, 0}, {0, 1, 0, 1}, {0, 1, 1, 0}, {0, 0, 1, 1}};
  int ka = a / 2, kb = b / 2;
  int s = (a % 2) ^ (b % 2) ^ sgn[ka][kb];
  return idx[ka][kb] * 2 + s;
}

GroupPtr icosahedral() {
  // A5 on 5 letters, generated by a 3-cycle and a 5-cycle, acting on the
  // 12 left cosets of the cyclic subgroup of order 5.
  auto a5 = FiniteMatrixGroup::from_generators(
      5, {cycles(5, {{0, 1, 2}}), cycles(5, {{0, 1, 2, 3, 4}})}, "A5");
  Subgroup c5 = Subgroup::generated_by(a5, std::vector<int>{a5->generators()[1]});
  CosetSpace cosets(c5);
  std::vector<GroupElement> gens;
  for (int s : a5->generators()) {
    std::vector<int> p(cosets.size());
    for (std::size_t c = 0; c < cosets.size(); ++c) p[c] = cosets.act(s, static_cast<int>(c));
    gens.emplace_back(std::move(p));
  }
  return FiniteMatrixGroup::from_generators(static_cast<int>(cosets.size()), std::move(gens),
                                            "Icosahedral");
}

GroupPtr build(const std::string& name) {
  if (name == "Z6")
    return FiniteMatrixGroup::from_generators(6, {cycles(6, {{0, 1, 2, 3, 4, 5}})}, name);
  if (name == "C8")
    return regular_representation(table_from(8, [](int a, int b) { return (a + b) % 8; }),
                                  {1}, name);
  if (name == "C2xC4")
    return regular_representation(
        table_from(8,
                   [](int a, int b) {
                     return ((a / 4 + b / 4) % 2) * 4 + (a % 4 + b % 4) % 4;
                   }),
        {4, 1}, name);
  if (name == "C2^3")
    return regular_representation(table_from(8, [](int a, int b) { return a ^ b; }), {1, 2, 4},
                                  name);
  if (name == "D4")
    // label = 4*e + k for r^k s^e
    return regular_representation(
        table_from(8,
                   [](int a, int b) {
                     int k1 = a % 4, e1 = a / 4, k2 = b % 4, e2 = b / 4;
                     int k = (k1 + (e1 ? 4 - k2 : k2)) % 4;
                     return ((e1 + e2) % 2) * 4 + k;
                   }),
        {1, 4}, name);
  if (name == "Q8") return regular_representation(table_from(8, quat_mul), {2, 4}, name);
  if (name == "C8_min")
    return FiniteMatrixGroup::from_generators(8, {cycles(8, {{0, 1, 2, 3, 4, 5, 6, 7}})}, name);
  if (name == "C2xC4_min")
    return FiniteMatrixGroup::from_generators(
        6, {cycles(6, {{0, 1}}), cycles(6, {{2, 3, 4, 5}})}, name);
  if (name == "C2^3_min")
    return FiniteMatrixGroup::from_generators(
        6, {cycles(6, {{0, 1}}), cycles(6, {{2, 3}}), cycles(6, {{4, 5}})}, name);
  if (name == "D4_min")
    return FiniteMatrixGroup::from_generators(
        4, {cycles(4, {{0, 1, 2, 3}}), cycles(4, {{1, 3}})}, name);
  if (name == "Q8_min") {
    auto g = build("Q8");
    return FiniteMatrixGroup::from_generators(g->degree(), g->generator_elements(), name);
  }
  if (name == "Icosahedral") return icosahedral();
  if (name.rfind("BinProd", 0) == 0) {
    std::string digits = name.substr(7);
    if (!digits.empty() && digits.front() == '(' && digits.back() == ')')
      digits = digits.substr(1, digits.size() - 2);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), ::isdigit) ||
        digits.size() > 4)
      fail(ErrorCode::UnknownName, "unknown group: " + name);
    return binprod_group(std::stoi(digits));
  }
  fail(ErrorCode::UnknownName, "unknown group: " + name);
}

}  // namespace

GroupPtr regular_representation(const Table& table, const std::vector<int>& generator_labels,
                                const std::string& name) {
  const int n = static_cast<int>(table.size());
  std::vector<GroupElement> gens;
  for (int s : generator_labels) {
    std::vector<int> p(n);
    for (int x = 0; x < n; ++x) p[x] = table[s][x];
    gens.emplace_back(std::move(p));
  }
  return FiniteMatrixGroup::from_generators(n, std::move(gens), name);
}

GroupPtr binprod_group(int m) {
  if (m < 8 || (m & (m - 1)) != 0)
    fail(ErrorCode::BadDimension, "binary product dimension must be 2^d with d >= 3");
  auto swap_pair = [m](int i) {
    std::vector<int> p(m);
    for (int x = 0; x < m; ++x) p[x] = x;
    std::swap(p[2 * i], p[2 * i + 1]);
    return GroupElement(std::move(p));
  };
  std::vector<GroupElement> gens;
  for (int j = 1; j < m / 2; ++j) gens.push_back(swap_pair(0) * swap_pair(j));
  return FiniteMatrixGroup::from_generators(m, std::move(gens),
                                            "BinProd" + std::to_string(m));
}

GroupPtr named_group(const std::string& name) {
  if (name == "Z6_cyclic_perms") return named_group("Z6");
  static std::mutex mu;
  static std::map<std::string, GroupPtr> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(name);
  if (it != cache.end()) return it->second;
  GroupPtr g = build(name);
  cache.emplace(name, g);
  return g;
}

std::vector<NamedGroupInfo> named_group_list() {
  return {
      {"Z6", "cyclic group of order 6 shifting 6 coordinates"},
      {"C8", "cyclic group of order 8, regular representation"},
      {"C2xC4", "C2 x C4, regular representation"},
      {"C2^3", "elementary abelian group of order 8, regular representation"},
      {"D4", "dihedral group of order 8, regular representation"},
      {"Q8", "quaternion group, regular representation"},
      {"C8_min", "C8 on 8 points"},
      {"C2xC4_min", "C2 x C4 on 2 + 4 points"},
      {"C2^3_min", "C2^3 on 2 + 2 + 2 points"},
      {"D4_min", "D4 acting on the 4 vertices of a square"},
      {"Q8_min", "Q8 on 8 points (its smallest faithful permutation action)"},
      {"Icosahedral", "rotation group of the icosahedron (A5) on 12 points"},
      {"BinProd8", "binary product task group for m = 8"},
      {"BinProd16", "binary product task group for m = 16"},
  };
}

}  // namespace gdnn
