#include "gdnn/io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "gdnn/error.hpp"
#include "gdnn/named_groups.hpp"

namespace gdnn {

namespace {

template <typename F>
auto parsing(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string(what) + ": " + e.what());
  }
}

}  // namespace

json element_to_json(const GroupElement& e) {
  std::vector<int> perm(e.perm().begin(), e.perm().end());
  for (auto& p : perm) ++p;
  return {{"perm", perm}, {"signs", e.signs()}};
}

GroupElement element_from_json(const json& j) {
  return parsing("element", [&] {
    auto perm = j.at("perm").get<std::vector<int>>();
    for (auto& p : perm) --p;
    if (!j.contains("signs")) return GroupElement(std::move(perm));
    return GroupElement(std::move(perm), j.at("signs").get<std::vector<int>>());
  });
}

json group_to_json(const FiniteMatrixGroup& g) {
  json gens = json::array();
  for (const auto& e : g.generator_elements()) {
    json ej = element_to_json(e);
    gens.push_back({ej["perm"], ej["signs"]});
  }
  return {{"name", g.name()}, {"degree", g.degree()}, {"order", g.order()}, {"generators", gens}};
}

GroupPtr group_from_json(const json& j) {
  if (j.is_string()) return named_group(j.get<std::string>());
  return parsing("group", [&] {
    const int degree = j.at("degree").get<int>();
    std::vector<GroupElement> gens;
    for (const auto& g : j.at("generators")) {
      if (g.is_object()) {
        gens.push_back(element_from_json(g));
      } else {
        json e{{"perm", g.at(0)}};
        if (g.size() > 1) e["signs"] = g.at(1);
        gens.push_back(element_from_json(e));
      }
    }
    for (const auto& g : gens)
      if (g.degree() != degree) fail(ErrorCode::InvalidArgument, "generator has the wrong degree");
    return FiniteMatrixGroup::from_generators(degree, std::move(gens), j.value("name", ""));
  });
}

json subgroup_to_json(const Subgroup& s) { return s.members(); }

Subgroup subgroup_from_json(const GroupPtr& g, const json& j) {
  auto members = parsing("subgroup", [&] { return j.get<std::vector<int>>(); });
  for (int m : members)
    if (m < 0 || static_cast<std::size_t>(m) >= g->order())
      fail(ErrorCode::InvalidArgument, "element index out of range");
  return Subgroup::from_members(g, std::move(members));
}

json irrep_to_json(const SignedPermIrrep& rho) {
  return {{"H", rho.H().members()},
          {"K", rho.K().members()},
          {"degree", rho.degree()},
          {"type", rho.type()}};
}

json layer_to_json(const LayerRep& layer) {
  json out = json::array();
  for (const auto& s : layer.summands())
    out.push_back({{"irrep", irrep_to_json(*s.irrep)}, {"multiplicity", s.multiplicity}});
  return out;
}

json spec_to_json(const ArchitectureSpec& spec) {
  json group;
  const auto& name = spec.group->name();
  bool registered = false;
  if (!name.empty()) {
    try {
      registered = named_group(name).get() == spec.group.get();
    } catch (const Error&) {
    }
  }
  group = registered ? json(name) : group_to_json(*spec.group);
  json layers = json::array();
  for (const auto& l : spec.layers) {
    json irreps = json::array();
    for (const auto& s : l.summands())
      irreps.push_back(
          {{"H", s.irrep->H().members()}, {"K", s.irrep->K().members()}, {"mult", s.multiplicity}});
    layers.push_back({{"irreps", irreps}});
  }
  std::vector<int> channels = spec.channels;
  if (channels.empty()) channels.assign(spec.layers.size() + 1, 1);
  return {{"group", group}, {"layers", layers}, {"channels", channels}, {"batchnorm", spec.batchnorm}};
}

ArchitectureSpec spec_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::ParseError, "spec must be an object");
  ArchitectureSpec spec;
  spec.group = group_from_json(parsing("spec", [&] { return j.at("group"); }));
  parsing("spec", [&] {
    for (const auto& l : j.at("layers")) {
      std::vector<Summand> summands;
      for (const auto& ir : l.at("irreps")) {
        Subgroup h = subgroup_from_json(spec.group, ir.at("H"));
        Subgroup k = subgroup_from_json(spec.group, ir.at("K"));
        int mult = ir.value("mult", 1);
        if (mult < 1) fail(ErrorCode::InvalidArgument, "multiplicity must be positive");
        summands.push_back({make_irrep(h, k), mult});
      }
      if (summands.empty()) fail(ErrorCode::InvalidArgument, "layer without irreps");
      spec.layers.emplace_back(std::move(summands));
    }
    if (j.contains("channels")) spec.channels = j.at("channels").get<std::vector<int>>();
    spec.batchnorm = j.value("batchnorm", false);
    return 0;
  });
  if (!spec.channels.empty() && spec.channels.size() != spec.layers.size() + 1)
    fail(ErrorCode::ShapeMismatch, "channels needs one entry per layer plus the input");
  for (int k : spec.channels)
    if (k < 1) fail(ErrorCode::ShapeMismatch, "channel counts must be positive");
  return spec;
}

json basis_to_json(const BasisSet& b) {
  json mats = json::array();
  for (const auto& m : b.matrices) {
    json entries = json::array();
    for (const auto& e : m) entries.push_back({e.row, e.col, e.sign});
    mats.push_back(entries);
  }
  return {{"shape", {b.rows, b.cols}}, {"matrices", mats}};
}

BasisSet basis_from_json(const json& j) {
  return parsing("basis", [&] {
    BasisSet b;
    b.rows = j.at("shape").at(0).get<int>();
    b.cols = j.at("shape").at(1).get<int>();
    for (const auto& m : j.at("matrices")) {
      std::vector<BasisEntry> entries;
      for (const auto& e : m) {
        BasisEntry be{e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<int>()};
        if (be.row < 0 || be.row >= b.rows || be.col < 0 || be.col >= b.cols ||
            (be.sign != 1 && be.sign != -1))
          fail(ErrorCode::InvalidArgument, "basis entry out of range");
        entries.push_back(be);
      }
      b.matrices.push_back(std::move(entries));
    }
    return b;
  });
}

namespace {

json tensor(const std::string& name, const Eigen::MatrixXd& m) {
  std::vector<double> data;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"name", name}, {"shape", {m.rows(), m.cols()}}, {"data", data}};
}

void read_tensor(const json& t, Eigen::MatrixXd& m) {
  auto shape = t.at("shape").get<std::vector<Eigen::Index>>();
  auto data = t.at("data").get<std::vector<double>>();
  if (shape.size() != 2 || shape[0] != m.rows() || shape[1] != m.cols() ||
      static_cast<Eigen::Index>(data.size()) != m.size())
    fail(ErrorCode::ShapeMismatch, "tensor " + t.at("name").get<std::string>() + " has the wrong shape");
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = data[i++];
}

template <typename F>
void each_tensor(LatentWeights& w, F&& f) {
  for (std::size_t l = 0; l < w.coeffs.size(); ++l)
    for (std::size_t s = 0; s < w.coeffs[l].size(); ++s)
      for (std::size_t b = 0; b < w.coeffs[l][s].size(); ++b)
        f("coeffs." + std::to_string(l) + "." + std::to_string(s) + "." + std::to_string(b),
          w.coeffs[l][s][b]);
  for (std::size_t l = 0; l < w.bias.size(); ++l) f("bias." + std::to_string(l), w.bias[l]);
  auto vectors = [&](const char* name, std::vector<Eigen::VectorXd>& vs) {
    for (std::size_t l = 0; l < vs.size(); ++l) {
      Eigen::MatrixXd m = vs[l];
      f(std::string(name) + "." + std::to_string(l), m);
      vs[l] = m.col(0);
    }
  };
  vectors("bn_gamma", w.bn_gamma);
  vectors("bn_beta", w.bn_beta);
  vectors("bn_mean", w.bn_mean);
  vectors("bn_var", w.bn_var);
}

}  // namespace

json weights_to_json(const LatentWeights& w) {
  json tensors = json::array();
  LatentWeights copy = w;
  each_tensor(copy, [&](const std::string& name, Eigen::MatrixXd& m) {
    tensors.push_back(tensor(name, m));
  });
  return {{"tensors", tensors}};
}

LatentWeights weights_from_json(const GDNNModel& model, const json& j) {
  LatentWeights w = zero_weights(model);
  return parsing("weights", [&] {
    std::map<std::string, const json*> by_name;
    for (const auto& t : j.at("tensors")) by_name[t.at("name").get<std::string>()] = &t;
    std::size_t used = 0;
    each_tensor(w, [&](const std::string& name, Eigen::MatrixXd& m) {
      auto it = by_name.find(name);
      if (it == by_name.end()) fail(ErrorCode::ShapeMismatch, "missing tensor " + name);
      read_tensor(*it->second, m);
      ++used;
    });
    if (used != by_name.size()) fail(ErrorCode::ShapeMismatch, "unexpected tensors in checkpoint");
    return w;
  });
}

const char* mode_name(CountMode mode) { return mode == CountMode::GDNN ? "gdnn" : "crelu"; }

CountMode mode_from_name(const std::string& name) {
  if (name == "gdnn") return CountMode::GDNN;
  if (name == "crelu") return CountMode::CReLU;
  fail(ErrorCode::InvalidArgument, "mode must be gdnn or crelu");
}

std::string count_csv(const std::vector<CountRow>& rows, CountMode mode) {
  std::ostringstream out;
  out << "depth,admissible,total,mode\n";
  for (const auto& r : rows)
    out << r.depth << ',' << r.admissible << ',' << r.total << ',' << mode_name(mode) << '\n';
  return out.str();
}

json failure_to_json(const AdmissibilityFailure& f) {
  return {{"failing_layer", f.layer},
          {"summand", f.summand},
          {"reason", f.reason},
          {"phi_subgroup", f.phi},
          {"expected_K", f.expected_K}};
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::InvalidArgument, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, path + ": " + e.what());
  }
}

}  // namespace gdnn
