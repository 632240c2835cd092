#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "gdnn/admissibility.hpp"
#include "gdnn/basis.hpp"
#include "gdnn/model.hpp"

namespace gdnn {

using nlohmann::json;

// Permutations are written 1-based.
json element_to_json(const GroupElement& e);
GroupElement element_from_json(const json& j);

// {name, degree, order, generators: [[perm], [signs]]}
json group_to_json(const FiniteMatrixGroup& g);
// A registered name or an object as written by group_to_json.
GroupPtr group_from_json(const json& j);

json subgroup_to_json(const Subgroup& s);
Subgroup subgroup_from_json(const GroupPtr& g, const json& j);

json irrep_to_json(const SignedPermIrrep& rho);
json layer_to_json(const LayerRep& layer);

// {group, layers: [{irreps: [{H, K, mult}]}], channels, batchnorm}
json spec_to_json(const ArchitectureSpec& spec);
ArchitectureSpec spec_from_json(const json& j);

json basis_to_json(const BasisSet& b);
BasisSet basis_from_json(const json& j);

// {tensors: [{name, shape, data}]}
json weights_to_json(const LatentWeights& w);
LatentWeights weights_from_json(const GDNNModel& model, const json& j);

std::string count_csv(const std::vector<CountRow>& rows, CountMode mode);
const char* mode_name(CountMode mode);
CountMode mode_from_name(const std::string& name);

json failure_to_json(const AdmissibilityFailure& f);

json read_json_file(const std::string& path);

}  // namespace gdnn
