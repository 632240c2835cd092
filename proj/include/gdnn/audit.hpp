#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gdnn/io.hpp"
#include "gdnn/train.hpp"

namespace gdnn {

// Bases of every block of a compiled model: blocks[l][s].
using ModelBases = std::vector<std::vector<BasisSet>>;

ModelBases model_bases(const GDNNModel& model);
json bases_to_json(const ModelBases& bases);
ModelBases bases_from_json(const json& j);

// Checks every basis against the full group and its size against the
// model's own basis. Returns the first failing (layer, source) or nothing.
struct BasisAudit {
  bool ok = true;
  int layer = -1;
  int source = -1;
  std::string reason;
};
BasisAudit audit_bases(const GDNNModel& model, const ModelBases& bases);

// Largest relative error between backward() and central differences over
// `coords` random coordinates of the flattened weights, for the mean BCE
// against labels. The relative error is |a - b| / max(|a|, |b|, floor).
inline constexpr double kGradientFloor = 1e-4;
double gradient_check(const GDNNModel& model, const LatentWeights& w, const Eigen::MatrixXd& x,
                      const Eigen::VectorXd& labels, int coords, std::uint64_t seed,
                      double step = 1e-5, Mode mode = Mode::Train);

// x followed by g x for every group element g, for each column of x.
Eigen::MatrixXd group_closed_batch(const GDNNModel& model, const Eigen::MatrixXd& x);

struct AuditCheck {
  std::string name;
  bool pass = true;
  double deviation = 0.0;
  std::string detail;
};

struct AuditOptions {
  std::uint64_t seed = 0;
  int samples = 20;
  std::optional<ModelBases> bases;  // checked instead of the rebuilt ones
};

std::vector<AuditCheck> audit_spec(const ArchitectureSpec& spec, const AuditOptions& options);
json audit_to_json(const std::vector<AuditCheck>& checks);

}  // namespace gdnn
