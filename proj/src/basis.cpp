#include "gdnn/basis.hpp"

#include <algorithm>
#include <map>

#include <gmpxx.h>

#include "gdnn/error.hpp"
#include "gdnn/rational.hpp"

namespace gdnn {

namespace {

void check_shapes(std::span<const GroupElement> rho, std::span<const GroupElement> pi) {
  if (rho.size() != pi.size() || rho.empty())
    fail(ErrorCode::ShapeMismatch, "rho and pi need the same nonzero number of images");
  for (std::size_t i = 1; i < rho.size(); ++i)
    if (rho[i].degree() != rho[0].degree() || pi[i].degree() != pi[0].degree())
      fail(ErrorCode::ShapeMismatch, "images have inconsistent degrees");
}

}  // namespace

std::vector<std::vector<int>> BasisSet::dense(std::size_t b) const {
  std::vector<std::vector<int>> m(rows, std::vector<int>(cols, 0));
  for (const auto& e : matrices.at(b)) m[e.row][e.col] = e.sign;
  return m;
}

BasisSet build_basis(std::span<const GroupElement> rho_gens, std::span<const GroupElement> pi_gens) {
  check_shapes(rho_gens, pi_gens);
  const int n = rho_gens[0].degree();
  const int p = pi_gens[0].degree();
  const int nodes = n * p;

  struct Arc {
    int to;
    int sign;
  };
  std::vector<std::vector<Arc>> adj(nodes);
  for (std::size_t g = 0; g < rho_gens.size(); ++g) {
    const auto& r = rho_gens[g];
    const auto& q = pi_gens[g];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) {
        int from = i * p + j;
        int to = r.image(i) * p + q.image(j);
        int s = r.sign(i) * q.sign(j);
        adj[from].push_back({to, s});
        adj[to].push_back({from, s});
      }
  }

  BasisSet out;
  out.rows = n;
  out.cols = p;
  std::vector<int> colour(nodes, 0), parent(nodes, -1);
  std::vector<int> component;
  for (int root = 0; root < nodes; ++root) {
    if (colour[root]) continue;
    component.assign(1, root);
    colour[root] = 1;
    bool consistent = true;
    std::vector<int> witness;
    for (std::size_t q = 0; q < component.size(); ++q) {
      int u = component[q];
      for (const auto& a : adj[u]) {
        int want = colour[u] * a.sign;
        if (!colour[a.to]) {
          colour[a.to] = want;
          parent[a.to] = u;
          component.push_back(a.to);
        } else if (colour[a.to] != want && consistent) {
          consistent = false;
          // Tree paths from both ends to the root close an odd cycle.
          std::vector<int> left, right;
          for (int x = u; x >= 0; x = parent[x]) left.push_back(x);
          for (int x = a.to; x >= 0; x = parent[x]) right.push_back(x);
          while (left.size() > 1 && right.size() > 1 &&
                 left[left.size() - 2] == right[right.size() - 2]) {
            left.pop_back();
            right.pop_back();
          }
          witness = left;
          for (auto it = right.rbegin() + 1; it != right.rend(); ++it) witness.push_back(*it);
        }
      }
    }
    if (!consistent) {
      out.negative_cycles.push_back(std::move(witness));
      continue;
    }
    std::sort(component.begin(), component.end());
    std::vector<BasisEntry> m;
    m.reserve(component.size());
    for (int v : component) m.push_back({v / p, v % p, colour[v]});
    out.matrices.push_back(std::move(m));
  }
  return out;
}

BasisSet build_basis_checked(std::span<const GroupElement> rho_gens,
                             std::span<const GroupElement> pi_gens) {
  for (const auto& q : pi_gens)
    if (!q.is_unsigned())
      fail(ErrorCode::NotOrdinaryPerm, "pi must be an ordinary permutation representation");
  return build_basis(rho_gens, pi_gens);
}

BasisCheck verify_basis(const BasisSet& basis, std::span<const GroupElement> rho_all,
                        std::span<const GroupElement> pi_all) {
  check_shapes(rho_all, pi_all);
  if (rho_all[0].degree() != basis.rows || pi_all[0].degree() != basis.cols)
    fail(ErrorCode::ShapeMismatch, "basis shape does not match the representations");
  BasisCheck check;

  for (std::size_t b = 0; b < basis.matrices.size() && check.equivariant; ++b) {
    std::map<std::pair<int, int>, int> entries;
    for (const auto& e : basis.matrices[b])
      if (e.sign != 0) entries[{e.row, e.col}] += e.sign;
    std::erase_if(entries, [](const auto& kv) { return kv.second == 0; });
    for (std::size_t g = 0; g < rho_all.size() && check.equivariant; ++g) {
      std::map<std::pair<int, int>, int> moved;
      for (const auto& [rc, v] : entries) {
        auto [r, c] = rc;
        moved[{rho_all[g].image(r), pi_all[g].image(c)}] =
            v * rho_all[g].sign(r) * pi_all[g].sign(c);
      }
      if (moved != entries) {
        check.equivariant = false;
        check.failing_element = static_cast<int>(g);
        check.failing_matrix = static_cast<int>(b);
      }
    }
  }

  // Disjoint supports imply independence; otherwise fall back to rank.
  std::vector<int> owner(static_cast<std::size_t>(basis.rows) * basis.cols, -1);
  bool disjoint = true;
  for (std::size_t b = 0; b < basis.matrices.size(); ++b)
    for (const auto& e : basis.matrices[b]) {
      auto& o = owner[static_cast<std::size_t>(e.row) * basis.cols + e.col];
      if (o >= 0 && o != static_cast<int>(b)) disjoint = false;
      o = static_cast<int>(b);
    }
  if (!disjoint || std::any_of(basis.matrices.begin(), basis.matrices.end(),
                               [](const auto& m) { return m.empty(); })) {
    RationalMatrix m(basis.matrices.size(), static_cast<std::size_t>(basis.rows) * basis.cols);
    for (std::size_t b = 0; b < basis.matrices.size(); ++b)
      for (const auto& e : basis.matrices[b])
        m(b, static_cast<std::size_t>(e.row) * basis.cols + e.col) += e.sign;
    check.independent = m.rank() == basis.matrices.size();
  }
  return check;
}

int oracle_basis_dim(std::span<const GroupElement> rho_gens, std::span<const GroupElement> pi_gens,
                     int cap) {
  check_shapes(rho_gens, pi_gens);
  const int n = rho_gens[0].degree();
  const int p = pi_gens[0].degree();
  const int vars = n * p;
  if (vars > cap) fail(ErrorCode::SizeCap, "oracle size cap exceeded");

  // Sparse integer rows, column -> coefficient.
  using Row = std::map<int, mpz_class>;
  std::vector<Row> rows;
  for (std::size_t g = 0; g < rho_gens.size(); ++g)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) {
        int from = i * p + j;
        int to = rho_gens[g].image(i) * p + pi_gens[g].image(j);
        int s = rho_gens[g].sign(i) * pi_gens[g].sign(j);
        Row row;
        row[to] += 1;
        row[from] -= s;
        std::erase_if(row, [](const auto& kv) { return sgn(kv.second) == 0; });
        if (!row.empty()) rows.push_back(std::move(row));
      }

  int rank = 0;
  std::vector<bool> used(rows.size(), false);
  for (int col = 0; col < vars; ++col) {
    int piv = -1;
    for (std::size_t r = 0; r < rows.size(); ++r)
      if (!used[r] && rows[r].count(col)) {
        piv = static_cast<int>(r);
        break;
      }
    if (piv < 0) continue;
    used[piv] = true;
    ++rank;
    const Row& pr = rows[piv];
    const mpz_class a = pr.at(col);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (used[r]) continue;
      auto it = rows[r].find(col);
      if (it == rows[r].end()) continue;
      const mpz_class b = it->second;
      Row next;
      for (const auto& [c, v] : rows[r]) next[c] += a * v;
      for (const auto& [c, v] : pr) next[c] -= b * v;
      std::erase_if(next, [](const auto& kv) { return sgn(kv.second) == 0; });
      mpz_class g = 0;
      for (const auto& [c, v] : next) g = gcd(g, v);
      if (g > 1)
        for (auto& [c, v] : next) v /= g;
      rows[r] = std::move(next);
    }
  }
  return vars - rank;
}

}  // namespace gdnn
