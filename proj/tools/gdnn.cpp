#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "gdnn/audit.hpp"
#include "gdnn/error.hpp"
#include "gdnn/io.hpp"
#include "gdnn/named_groups.hpp"
#include "gdnn/service.hpp"
#include "gdnn/train.hpp"

using namespace gdnn;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitError = 2;

int default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out);
  if (!f) fail(ErrorCode::InvalidArgument, "cannot write " + out);
  f << text;
}

std::string cache_path(const std::string& group) {
  const char* dir = std::getenv("GDNN_CACHE_DIR");
  if (!dir || !*dir) return {};
  std::string safe;
  for (char c : group) safe += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return (std::filesystem::path(dir) / ("theta-" + safe + ".json")).string();
}

std::string layer_label(const GroupContext& ctx, int cls) {
  const auto& p = ctx.pair(cls);
  std::ostringstream s;
  s << cls << "  degree " << p.degree() << "  type " << p.index() << "  |H| " << p.H.order()
    << "  |K| " << p.K.order();
  return s.str();
}

bool strictly_decreasing(const ArchitectureSpec& spec) {
  int bound = 0;
  for (const auto& layer : spec.layers) {
    if (layer.is_trivial()) continue;
    int top = 0;
    for (const auto& s : layer.summands()) top = std::max(top, s.irrep->degree());
    if (bound && top >= bound) return false;
    bound = layer.min_irrep_degree();
  }
  return true;
}

// ------------------------------------------------------------------ commands

int cmd_groups_list() {
  std::cout << "name,order,degree,subgroups\n";
  for (const auto& info : named_group_list()) {
    auto g = named_group(info.name);
    std::cout << info.name << ',' << g->order() << ',' << g->degree() << ',';
    if (g->order() <= 64)
      std::cout << subgroups(g).size();
    else
      std::cout << "";
    std::cout << '\n';
  }
  return 0;
}

int cmd_groups_show(const std::string& name) {
  auto g = named_group(name);
  json out = group_to_json(*g);
  if (g->order() <= 64) {
    GroupContext ctx(g);
    out["subgroups"] = ctx.subgroups().size();
    json pairs = json::array();
    for (std::size_t c = 0; c < ctx.pair_classes().size(); ++c) {
      const auto& p = ctx.pair(static_cast<int>(c));
      pairs.push_back({{"id", c},
                       {"H", p.H.members()},
                       {"K", p.K.members()},
                       {"degree", p.degree()},
                       {"type", p.index()},
                       {"class_size", ctx.pair_classes()[c].members.size()}});
    }
    out["pair_classes"] = pairs;
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_count(const std::string& group, const std::string& mode, int max_depth, int threads,
              const std::string& out) {
  GroupContext ctx(named_group(group));
  const std::string cache = cache_path(group);
  if (!cache.empty()) ctx.theta_cache().load(ctx.group_ptr(), cache);
  const CountMode m = mode_from_name(mode);
  auto rows = count_architectures(ctx, m, max_depth, threads);
  if (!cache.empty()) ctx.theta_cache().save(cache);
  emit(count_csv(rows, m), out);
  long long adm = 0, total = 0;
  for (const auto& r : rows) {
    adm += r.admissible;
    total += r.total;
  }
  std::cerr << "total admissible " << adm << " of " << total << '\n';
  return 0;
}

int report_spec(const ArchitectureSpec& spec, bool strict_decrease, const std::string& out) {
  if (strict_decrease && !strictly_decreasing(spec)) {
    std::cerr << "irrep degrees must strictly decrease from layer to layer\n";
    std::cout << json{{"valid", false}, {"reason", "degrees do not strictly decrease"}}.dump() << '\n';
    return kExitFailure;
  }
  if (!spec.layers.back().is_trivial()) {
    std::cerr << "the last layer must be the trivial representation\n";
    std::cout << json{{"valid", false}, {"reason", "last layer is not trivial"}}.dump() << '\n';
    return kExitFailure;
  }
  auto report = check_admissible(spec);
  if (!report.admissible) {
    std::cerr << "not admissible at layer " << report.failure->layer << '\n';
    json j = failure_to_json(*report.failure);
    j["valid"] = false;
    std::cout << j.dump() << '\n';
    return kExitFailure;
  }
  GDNNModel::compile(spec);
  emit(spec_to_json(spec).dump(2) + "\n", out);
  return 0;
}

int cmd_build(const std::string& group, const std::string& spec_file, int binprod,
              const std::string& variant, bool strict_decrease, const std::string& out) {
  if (binprod > 0) {
    auto archs = binprod_architectures(binprod);
    if (variant == "type2") return report_spec(archs.type2, strict_decrease, out);
    if (variant == "type1") return report_spec(archs.type1, strict_decrease, out);
    if (variant == "unraveled") return report_spec(archs.unraveled, strict_decrease, out);
    fail(ErrorCode::InvalidArgument, "unknown variant: " + variant);
  }
  if (!spec_file.empty()) {
    ArchitectureSpec spec = spec_from_json(read_json_file(spec_file));
    if (!group.empty() && named_group(group).get() != spec.group.get())
      fail(ErrorCode::InvalidArgument, "spec belongs to another group");
    return report_spec(spec, strict_decrease, out);
  }
  if (group.empty()) fail(ErrorCode::InvalidArgument, "--group or --spec is required");

  GroupContext ctx(named_group(group));
  ArchitectureSpec spec;
  spec.group = ctx.group_ptr();
  std::string line;
  while (true) {
    auto options = admissible_next(ctx, spec, strict_decrease);
    std::erase_if(options, [&](int c) { return ctx.pair(c).degree() == 1 && ctx.pair(c).index() == 1; });
    std::cerr << "layer " << spec.layers.size() + 1 << " candidates:\n";
    for (int c : options) std::cerr << "  " << layer_label(ctx, c) << '\n';
    std::cerr << "enter pair ids (id or id*mult), 'undo', or 'done': " << std::flush;
    if (!std::getline(std::cin, line)) break;
    std::istringstream in(line);
    std::vector<std::string> words;
    for (std::string w; in >> w;) words.push_back(w);
    if (words.empty() || words[0] == "done") break;
    if (words[0] == "undo") {
      if (!spec.layers.empty()) spec.layers.pop_back();
      continue;
    }
    std::vector<Summand> summands;
    bool ok = true;
    for (const auto& w : words) {
      const auto star = w.find('*');
      int cls = -1, mult = 1;
      try {
        cls = std::stoi(w.substr(0, star));
        if (star != std::string::npos) mult = std::stoi(w.substr(star + 1));
      } catch (const std::exception&) {
        ok = false;
        break;
      }
      if (std::find(options.begin(), options.end(), cls) == options.end() || mult < 1) {
        ok = false;
        break;
      }
      summands.push_back({ctx.irrep(cls), mult});
    }
    if (!ok) {
      std::cerr << "invalid selection: " << line << '\n';
      continue;
    }
    try {
      spec.layers.emplace_back(std::move(summands));
    } catch (const Error& e) {
      std::cerr << e.what() << '\n';
      continue;
    }
    if (!is_admissible(spec, &ctx.theta_cache())) {
      std::cerr << "combination is not admissible\n";
      spec.layers.pop_back();
    }
  }
  spec.layers.push_back(trivial_layer(spec.group));
  return report_spec(spec, strict_decrease, out);
}

int cmd_pattern(const std::string& group, int pair) {
  GroupContext ctx(named_group(group));
  if (pair < 0 || pair >= static_cast<int>(ctx.pair_classes().size()))
    fail(ErrorCode::UnknownName, "unknown pair id " + std::to_string(pair));
  auto rho = ctx.irrep(pair);
  std::vector<GroupElement> rg, pg;
  for (int gen : ctx.group().generators()) {
    rg.push_back(rho->evaluate(gen));
    pg.push_back(ctx.group().element(gen));
  }
  json out = basis_to_json(build_basis(rg, pg));
  out["H"] = rho->H().members();
  out["K"] = rho->K().members();
  std::cout << out.dump() << '\n';
  return 0;
}

int cmd_basis(const std::string& spec_file, const std::string& out) {
  GDNNModel model = GDNNModel::compile(spec_from_json(read_json_file(spec_file)), {false});
  emit(bases_to_json(model_bases(model)).dump() + "\n", out);
  return 0;
}

std::string pm(const MeanStd& v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v.mean << "±" << v.stddev;
  return s.str();
}

int cmd_train_binprod(const std::vector<std::string>& archs, ExperimentConfig cfg, bool per_seed,
                      const std::string& out) {
  cfg.architectures.clear();
  for (auto a : archs) {
    if (a == "unraveled-type2init") a = "unraveled_type2_init";
    if (a == "all") {
      cfg.architectures = {"type2", "type1", "unraveled", "unraveled_type2_init"};
      break;
    }
    if (a != "type1" && a != "type2" && a != "unraveled" && a != "unraveled_type2_init")
      fail(ErrorCode::InvalidArgument, "unknown architecture: " + a);
    cfg.architectures.push_back(a);
  }
  auto results = run_binprod_experiment(cfg);
  std::ostringstream csv;
  if (per_seed) {
    csv << "architecture,seed,initial_train,initial_val,final_train,final_val,initial_accuracy,final_accuracy\n";
    csv << std::setprecision(17);
    for (const auto& r : results)
      for (std::size_t s = 0; s < r.runs.size(); ++s) {
        const auto& run = r.runs[s];
        csv << r.name << ',' << cfg.base_seed + s << ',' << run.initial_train.loss << ','
            << run.initial_val.loss << ',' << run.final_train.loss << ',' << run.final_val.loss << ','
            << run.initial_val.accuracy << ',' << run.final_val.accuracy << '\n';
      }
  } else {
    csv << "architecture,parameters,initial_train,initial_val,final_train,final_val,accuracy\n";
    for (const auto& r : results) {
      std::vector<double> it, iv, ft, fv, acc;
      for (const auto& run : r.runs) {
        it.push_back(run.initial_train.loss);
        iv.push_back(run.initial_val.loss);
        ft.push_back(run.final_train.loss);
        fv.push_back(run.final_val.loss);
        acc.push_back(100.0 * std::min(run.final_train.accuracy, run.final_val.accuracy));
      }
      auto a = mean_std(acc);
      std::ostringstream accs;
      accs << std::fixed << std::setprecision(1) << a.mean << "%";
      csv << r.name << ',' << r.parameters << ',' << pm(mean_std(it)) << ',' << pm(mean_std(iv)) << ','
          << pm(mean_std(ft)) << ',' << pm(mean_std(fv)) << ',' << accs.str() << '\n';
    }
  }
  emit(csv.str(), out);
  return 0;
}

int cmd_audit(const std::string& spec_file, const std::string& basis_file, std::uint64_t seed) {
  AuditOptions opt;
  opt.seed = seed;
  if (!basis_file.empty()) opt.bases = bases_from_json(read_json_file(basis_file));
  auto checks = audit_spec(spec_from_json(read_json_file(spec_file)), opt);
  json report = audit_to_json(checks);
  std::cout << report.dump(2) << '\n';
  for (const auto& c : checks)
    if (!c.pass) std::cerr << "FAIL " << c.name << (c.detail.empty() ? "" : ": " + c.detail) << '\n';
  return report["pass"].get<bool>() ? 0 : kExitFailure;
}

int cmd_serve(const std::string& host, int port, const std::string& snapshot, double ttl_hours,
              int workers) {
  ServiceConfig cfg;
  cfg.snapshot_path = snapshot;
  cfg.session_ttl = std::chrono::seconds(static_cast<long long>(ttl_hours * 3600));
  cfg.count_workers = workers;
  Api api(cfg);
  std::cerr << "listening on " << host << ':' << port << '\n';
  serve(api, host, port);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact toolkit for G-invariant densely connected networks"};
  app.require_subcommand(1);

  auto* groups = app.add_subcommand("groups", "Named groups");
  groups->require_subcommand(1);
  groups->add_subcommand("list", "List named groups as CSV");
  auto* show = groups->add_subcommand("show", "Describe one group as JSON");
  std::string show_name;
  show->add_option("name", show_name)->required();

  std::string group, mode = "gdnn", out, spec_file, basis_file, arch_list;
  int max_depth = 0, threads = default_threads(), pair = -1, port = 8080;
  bool strict_decrease = false, per_seed = false, interactive = false;
  std::uint64_t seed = 0;

  auto* count = app.add_subcommand("count", "Count admissible architectures per depth (CSV)");
  count->add_option("--group", group)->required();
  count->add_option("--mode", mode)->check(CLI::IsMember({"gdnn", "crelu"}));
  count->add_option("--max-depth", max_depth);
  count->add_option("--threads", threads);
  count->add_option("--out", out);

  auto* build = app.add_subcommand("build", "Build or validate an architecture spec (JSON)");
  build->add_option("--group", group);
  build->add_option("--spec", spec_file);
  build->add_flag("--interactive", interactive, "Read layer choices from stdin");
  int binprod_m = 0;
  std::string variant = "type2";
  build->add_option("--binprod", binprod_m, "Emit the binary product architecture for this m");
  build->add_option("--variant", variant, "type2, type1 or unraveled (with --binprod)");
  build->add_flag("--strict-decrease", strict_decrease, "Require strictly decreasing irrep degrees");
  build->add_option("--out", out);

  auto* pattern = app.add_subcommand("pattern", "Weight-sharing basis of one pair class (JSON)");
  pattern->add_option("--group", group)->required();
  pattern->add_option("--pair", pair)->required();

  auto* basis = app.add_subcommand("basis", "Export the bases of every block of a spec (JSON)");
  basis->add_option("--spec", spec_file)->required();
  basis->add_option("--out", out);

  auto* train = app.add_subcommand("train", "Training experiments");
  train->require_subcommand(1);
  auto* binprod = train->add_subcommand("binprod", "Binary product experiment (CSV)");
  std::vector<std::string> archs{"all"};
  ExperimentConfig cfg;
  cfg.threads = default_threads();
  binprod->add_option("--arch", archs, "type1, type2, unraveled, unraveled-type2init or all");
  binprod->add_option("--seeds", cfg.seeds);
  binprod->add_option("--base-seed", cfg.base_seed);
  binprod->add_option("--m", cfg.m);
  binprod->add_option("--epochs", cfg.train.epochs);
  binprod->add_option("--lr", cfg.train.lr);
  binprod->add_option("--lr-decay", cfg.train.lr_decay);
  binprod->add_option("--batch-size", cfg.train.batch_size);
  binprod->add_option("--train-fraction", cfg.train_fraction);
  binprod->add_option("--init", cfg.init_scheme);
  binprod->add_option("--threads", cfg.threads);
  binprod->add_flag("--per-seed", per_seed);
  binprod->add_option("--out", out);

  auto* audit = app.add_subcommand("audit", "Property audit of a spec (JSON report)");
  audit->add_option("--spec", spec_file)->required();
  audit->add_option("--basis", basis_file, "Basis file to check instead of the rebuilt bases");
  audit->add_option("--seed", seed);

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  std::string host = "127.0.0.1", snapshot;
  double ttl_hours = 24;
  int workers = 2;
  serve_cmd->add_option("--port", port);
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--snapshot", snapshot);
  serve_cmd->add_option("--session-ttl-hours", ttl_hours);
  serve_cmd->add_option("--count-workers", workers);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  try {
    if (groups->parsed()) {
      if (show->parsed()) return cmd_groups_show(show_name);
      return cmd_groups_list();
    }
    if (count->parsed()) return cmd_count(group, mode, max_depth, threads, out);
    if (build->parsed()) {
      if (interactive && !spec_file.empty())
        fail(ErrorCode::InvalidArgument, "--interactive and --spec are exclusive");
      return cmd_build(group, spec_file, binprod_m, variant, strict_decrease, out);
    }
    if (pattern->parsed()) return cmd_pattern(group, pair);
    if (basis->parsed()) return cmd_basis(spec_file, out);
    if (binprod->parsed()) return cmd_train_binprod(archs, cfg, per_seed, out);
    if (audit->parsed()) return cmd_audit(spec_file, basis_file, seed);
    if (serve_cmd->parsed()) return cmd_serve(host, port, snapshot, ttl_hours, workers);
  } catch (const Error& e) {
    std::cerr << error_code_name(e.code()) << ": " << e.what() << '\n';
    return e.code() == ErrorCode::NotAdmissible ? kExitFailure : kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
