#pragma once

#include <string>
#include <vector>

#include "gdnn/group.hpp"

namespace gdnn {

struct NamedGroupInfo {
  std::string name;
  std::string description;
};

// Z6, C8, C2xC4, C2^3, D4, Q8 (regular representations), the *_min
// variants on fewer points, Icosahedral (A5 on 12 points), BinProd<m>.
GroupPtr named_group(const std::string& name);
std::vector<NamedGroupInfo> named_group_list();

// Group of the binary product task: products t_1 t_j of the swaps of
// adjacent coordinate pairs. m must be 2^d with d >= 3.
GroupPtr binprod_group(int m);

// Left regular representation of an abstract group given by its
// multiplication table over labels 0..n-1 (label 0 the identity).
GroupPtr regular_representation(const std::vector<std::vector<int>>& table,
                                const std::vector<int>& generator_labels,
                                const std::string& name);

}  // namespace gdnn
