#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "gdnn/group.hpp"
#include "gdnn/reps.hpp"

namespace gdnn {

struct ArchitectureSpec {
  GroupPtr group;
  std::vector<LayerRep> layers;
  // Channel counts k^(0) .. k^(d); empty means one channel everywhere.
  std::vector<int> channels;
  bool batchnorm = false;

  int depth() const { return static_cast<int>(layers.size()); }
  int channel(int i) const { return channels.empty() ? 1 : channels.at(i); }
};

// Stabilizer of the partition of G/J obtained from the K-orbits on G/J,
// with the orbits fixed by an element of H \ K merged when K != H.
Subgroup theta(const SubgroupPair& pair, const Subgroup& j);

// Thread-safe memo of theta values keyed by the exact (H, K, J) triple.
class ThetaCache {
 public:
  Subgroup get(const SubgroupPair& pair, const Subgroup& j);
  std::size_t size() const;
  std::size_t hits() const { return hits_.load(); }

  // JSON file with entries [[H], [K], [J], [theta]] of element indices.
  void load(const GroupPtr& g, const std::string& path);
  void save(const std::string& path) const;

 private:
  struct Key {
    ElementSet h, k, j;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };
  mutable std::shared_mutex mu_;
  std::unordered_map<Key, Subgroup, KeyHash> table_;
  std::atomic<std::size_t> hits_{0};
};

// Stabilizer of P_K - [K != H] P_H under the group acting on its own space.
Subgroup phi_first(const SubgroupPair& pair);

// phi for an irrep placed at layer `layer` (0-based) after layers
// 0 .. layer-1 of `arch`.
Subgroup phi(const ArchitectureSpec& arch, std::size_t layer, const SubgroupPair& pair,
             ThetaCache* cache = nullptr);

struct AdmissibilityFailure {
  int layer = 0;    // 1-based
  int summand = 0;  // 0-based index inside the layer
  std::string reason;
  std::vector<int> phi;
  std::vector<int> expected_K;
};

struct AdmissibilityReport {
  bool admissible = true;
  std::optional<AdmissibilityFailure> failure;
};

AdmissibilityReport check_admissible(const ArchitectureSpec& arch, ThetaCache* cache = nullptr);
inline bool is_admissible(const ArchitectureSpec& arch, ThetaCache* cache = nullptr) {
  return check_admissible(arch, cache).admissible;
}

// Subgroup lattice, pair classes and memo tables of one group.
class GroupContext {
 public:
  explicit GroupContext(GroupPtr g);

  const GroupPtr& group_ptr() const { return group_; }
  const FiniteMatrixGroup& group() const { return *group_; }
  const std::vector<Subgroup>& subgroups() const { return subgroups_; }
  // Ordered by degree descending, then canonical representative order.
  const std::vector<PairClass>& pair_classes() const { return classes_; }
  const SubgroupPair& pair(int cls) const { return classes_.at(cls).representative; }
  const Subgroup& phi_first(int cls) const { return phi1_.at(cls); }
  IrrepPtr irrep(int cls) const;
  // Class index of an arbitrary pair, or -1.
  int class_of(const SubgroupPair& p) const;
  bool input_has_fixed_vector() const { return input_fixed_; }
  ThetaCache& theta_cache() const { return *theta_; }

 private:
  GroupPtr group_;
  std::vector<Subgroup> subgroups_;
  std::vector<PairClass> classes_;
  std::vector<Subgroup> phi1_;
  bool input_fixed_ = false;
  mutable std::vector<IrrepPtr> irreps_;
  mutable std::mutex irrep_mu_;
  std::unique_ptr<ThetaCache> theta_;
};

// Pair class indices that can be appended to an admissible prefix.
std::vector<int> admissible_next(const GroupContext& ctx, const ArchitectureSpec& prefix,
                                 bool strict_decrease);

enum class CountMode { GDNN, CReLU };

struct CountRow {
  int depth = 0;
  long long admissible = 0;
  long long total = 0;
};

// Counting over sequences of pair classes of strictly decreasing degree
// (all of degree > 1) closed by the trivial irrep. depth = layers incl. the
// trivial one; rows start at depth 2. max_depth <= 0 means until exhaustion.
std::vector<CountRow> count_architectures(const GroupContext& ctx, CountMode mode,
                                          int max_depth = 0, int threads = 1);

struct ThetaAuditResult {
  bool equivariant = true;  // theta(gHg^-1, gKg^-1, gJg^-1) = g theta g^-1
  bool invariant = true;    // theta(H, K, gJg^-1) = theta(H, K, J)
};
ThetaAuditResult theta_conjugation_audit(const SubgroupPair& pair, const Subgroup& j, int g);

}  // namespace gdnn
