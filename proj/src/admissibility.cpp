#include "gdnn/admissibility.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <thread>

#include <json.hpp>

#include "gdnn/error.hpp"

namespace gdnn {

Subgroup theta(const SubgroupPair& pair, const Subgroup& j) {
  CosetSpace cosets(j);
  auto blocks = double_cosets(pair.K, cosets);
  std::vector<std::vector<int>> partition;
  if (pair.index() == 2) {
    const int h = pair.h_rep();
    std::vector<int> merged;
    for (auto& b : blocks) {
      int image = cosets.act(h, b.cosets.front());
      if (std::binary_search(b.cosets.begin(), b.cosets.end(), image))
        merged.insert(merged.end(), b.cosets.begin(), b.cosets.end());
      else
        partition.push_back(std::move(b.cosets));
    }
    if (!merged.empty()) partition.push_back(std::move(merged));
  } else {
    for (auto& b : blocks) partition.push_back(std::move(b.cosets));
  }
  return partition_stabilizer(cosets, partition);
}

std::size_t ThetaCache::KeyHash::operator()(const Key& k) const {
  std::size_t h = k.h.hash();
  h ^= k.k.hash() + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= k.j.hash() + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

Subgroup ThetaCache::get(const SubgroupPair& pair, const Subgroup& j) {
  Key key{pair.H.set(), pair.K.set(), j.set()};
  {
    std::shared_lock lock(mu_);
    auto it = table_.find(key);
    if (it != table_.end()) {
      ++hits_;
      return it->second;
    }
  }
  Subgroup value = theta(pair, j);
  std::unique_lock lock(mu_);
  return table_.try_emplace(std::move(key), std::move(value)).first->second;
}

std::size_t ThetaCache::size() const {
  std::shared_lock lock(mu_);
  return table_.size();
}

void ThetaCache::load(const GroupPtr& g, const std::string& path) {
  std::ifstream in(path);
  if (!in) return;
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception&) {
    return;
  }
  if (!doc.is_object() || doc.value("order", std::size_t{0}) != g->order()) return;
  auto to_set = [&](const nlohmann::json& arr) {
    ElementSet s(g->order());
    for (int m : arr.get<std::vector<int>>()) s.insert(m);
    return s;
  };
  std::unique_lock lock(mu_);
  for (const auto& e : doc.at("entries")) {
    Key key{to_set(e.at(0)), to_set(e.at(1)), to_set(e.at(2))};
    table_.try_emplace(std::move(key), Subgroup::from_set_unchecked(g, to_set(e.at(3))));
  }
}

void ThetaCache::save(const std::string& path) const {
  std::shared_lock lock(mu_);
  nlohmann::json entries = nlohmann::json::array();
  std::size_t order = 0;
  for (const auto& [key, value] : table_) {
    order = value.parent().order();
    entries.push_back({key.h.members(), key.k.members(), key.j.members(), value.members()});
  }
  std::sort(entries.begin(), entries.end());
  nlohmann::json doc{{"order", order}, {"entries", std::move(entries)}};
  std::ofstream out(path);
  out << doc.dump() << '\n';
}

Subgroup phi_first(const SubgroupPair& pair) {
  return stabilizer_of_matrix(pair.H.parent_ptr(), fixed_space_projector(pair));
}

namespace {

Subgroup theta_with(const SubgroupPair& pair, const Subgroup& j, ThetaCache* cache) {
  return cache ? cache->get(pair, j) : theta(pair, j);
}

// Distinct H subgroups of the irreps in layers [0, layer).
std::vector<Subgroup> prefix_subgroups(const ArchitectureSpec& arch, std::size_t layer) {
  std::vector<Subgroup> out;
  for (std::size_t l = 0; l < layer; ++l)
    for (const auto& s : arch.layers[l].summands()) {
      const auto& h = s.irrep->H();
      if (std::find(out.begin(), out.end(), h) == out.end()) out.push_back(h);
    }
  return out;
}

}  // namespace

Subgroup phi(const ArchitectureSpec& arch, std::size_t layer, const SubgroupPair& pair,
             ThetaCache* cache) {
  if (layer > arch.layers.size()) fail(ErrorCode::InvalidArgument, "layer out of range");
  Subgroup result = phi_first(pair);
  for (const auto& h : prefix_subgroups(arch, layer))
    result = result.intersect(theta_with(pair, h, cache));
  return result;
}

AdmissibilityReport check_admissible(const ArchitectureSpec& arch, ThetaCache* cache) {
  AdmissibilityReport report;
  const auto& g = arch.group;
  const bool input_fixed = !projection(Subgroup::whole(g)).is_zero();
  for (std::size_t l = 0; l < arch.layers.size(); ++l) {
    const auto& summands = arch.layers[l].summands();
    for (std::size_t s = 0; s < summands.size(); ++s) {
      const auto& pair = summands[s].irrep->pair();
      if (l == 0 && pair.H.order() == g->order() && !input_fixed) {
        report.admissible = false;
        report.failure = AdmissibilityFailure{1, static_cast<int>(s),
                                              "input representation has no fixed vector",
                                              pair.H.members(), pair.K.members()};
        return report;
      }
      Subgroup p = phi(arch, l, pair, cache);
      if (!(p == pair.K)) {
        report.admissible = false;
        report.failure = AdmissibilityFailure{static_cast<int>(l + 1), static_cast<int>(s),
                                              "phi differs from K", p.members(),
                                              pair.K.members()};
        return report;
      }
    }
  }
  return report;
}

// ------------------------------------------------------------------ context

GroupContext::GroupContext(GroupPtr g)
    : group_(std::move(g)), theta_(std::make_unique<ThetaCache>()) {
  subgroups_ = gdnn::subgroups(group_);
  classes_ = pair_conjugacy_classes(subgroup_pairs(subgroups_));
  std::stable_sort(classes_.begin(), classes_.end(), [](const PairClass& a, const PairClass& b) {
    return a.representative.degree() > b.representative.degree();
  });
  for (const auto& c : classes_) phi1_.push_back(gdnn::phi_first(c.representative));
  irreps_.resize(classes_.size());
  input_fixed_ = !projection(Subgroup::whole(group_)).is_zero();
}

IrrepPtr GroupContext::irrep(int cls) const {
  std::lock_guard lock(irrep_mu_);
  auto& slot = irreps_.at(cls);
  if (!slot) slot = make_irrep(classes_[cls].representative);
  return slot;
}

int GroupContext::class_of(const SubgroupPair& p) const {
  for (std::size_t c = 0; c < classes_.size(); ++c)
    for (const auto& m : classes_[c].members)
      if (m == p) return static_cast<int>(c);
  return -1;
}

std::vector<int> admissible_next(const GroupContext& ctx, const ArchitectureSpec& prefix,
                                 bool strict_decrease) {
  auto& cache = ctx.theta_cache();
  if (!check_admissible(prefix, &cache).admissible)
    fail(ErrorCode::PrefixNotAdmissible, "prefix is not admissible");
  const std::size_t layer = prefix.layers.size();
  const auto hs = prefix_subgroups(prefix, layer);
  const int bound = layer ? prefix.layers.back().min_irrep_degree() : 0;

  std::vector<int> out;
  for (std::size_t c = 0; c < ctx.pair_classes().size(); ++c) {
    const auto& pair = ctx.pair(static_cast<int>(c));
    if (strict_decrease && layer && pair.degree() >= bound) continue;
    if (layer == 0 && pair.H.order() == ctx.group().order() && !ctx.input_has_fixed_vector())
      continue;
    ElementSet p = ctx.phi_first(static_cast<int>(c)).set();
    for (const auto& h : hs) p = p & cache.get(pair, h).set();
    if (p == pair.K.set()) out.push_back(static_cast<int>(c));
  }
  return out;
}

namespace {

struct Counter {
  const GroupContext& ctx;
  CountMode mode;
  int max_layers;  // nontrivial layers
  std::vector<int> candidates;
  std::vector<long long> admissible, total;
  std::vector<int> chosen;

  void visit(int last_degree, bool ok_so_far) {
    const int layer = static_cast<int>(chosen.size());
    if (layer >= max_layers) return;
    for (int c : candidates) {
      const auto& pair = ctx.pair(c);
      if (last_degree && pair.degree() >= last_degree) continue;
      bool ok = ok_so_far && layer_ok(c);
      chosen.push_back(c);
      total[layer + 1] += 1;
      admissible[layer + 1] += ok ? 1 : 0;
      visit(pair.degree(), ok);
      chosen.pop_back();
    }
  }

  bool layer_ok(int c) const {
    const auto& pair = ctx.pair(c);
    auto& cache = ctx.theta_cache();
    const int layer = static_cast<int>(chosen.size());
    if (layer == 0) return ctx.phi_first(c) == pair.K;
    if (mode == CountMode::CReLU)
      return cache.get(pair, ctx.pair(chosen.back()).K) == pair.K;
    ElementSet p = ctx.phi_first(c).set();
    for (int prev : chosen) p = p & cache.get(pair, ctx.pair(prev).H).set();
    return p == pair.K.set();
  }
};

}  // namespace

std::vector<CountRow> count_architectures(const GroupContext& ctx, CountMode mode, int max_depth,
                                          int threads) {
  std::vector<int> candidates;
  for (std::size_t c = 0; c < ctx.pair_classes().size(); ++c)
    if (ctx.pair(static_cast<int>(c)).degree() > 1) candidates.push_back(static_cast<int>(c));
  int max_layers = static_cast<int>(candidates.size());
  if (max_depth > 0) max_layers = std::min(max_layers, max_depth - 1);

  const std::size_t slots = static_cast<std::size_t>(max_layers) + 1;
  std::vector<long long> admissible(slots, 0), total(slots, 0);
  std::mutex merge_mu;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    Counter counter{ctx, mode, max_layers, candidates, std::vector<long long>(slots, 0),
                    std::vector<long long>(slots, 0), {}};
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= candidates.size() || max_layers == 0) break;
      int c = candidates[i];
      bool ok = counter.layer_ok(c);
      counter.chosen.push_back(c);
      counter.total[1] += 1;
      counter.admissible[1] += ok ? 1 : 0;
      counter.visit(ctx.pair(c).degree(), ok);
      counter.chosen.pop_back();
    }
    std::lock_guard lock(merge_mu);
    for (std::size_t s = 0; s < slots; ++s) {
      admissible[s] += counter.admissible[s];
      total[s] += counter.total[s];
    }
  };

  threads = std::max(1, threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<CountRow> rows;
  for (std::size_t layers = 1; layers < slots; ++layers) {
    if (total[layers] == 0) break;
    rows.push_back(CountRow{static_cast<int>(layers) + 1, admissible[layers], total[layers]});
  }
  return rows;
}

ThetaAuditResult theta_conjugation_audit(const SubgroupPair& pair, const Subgroup& j, int g) {
  ThetaAuditResult r;
  Subgroup base = theta(pair, j);
  r.equivariant = theta(pair.conjugate(g), j.conjugate(g)) == base.conjugate(g);
  r.invariant = theta(pair, j.conjugate(g)) == base;
  return r;
}

}  // namespace gdnn
