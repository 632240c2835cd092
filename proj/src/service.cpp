#include "gdnn/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "gdnn/error.hpp"
#include "gdnn/named_groups.hpp"

namespace gdnn {

namespace {

ApiResponse reply(int status, json body) { return {status, std::move(body)}; }

ApiResponse error_reply(int status, const std::string& code, const std::string& message) {
  return {status, {{"error", code}, {"message", message}}};
}

std::string percent_decode(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
        std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out += static_cast<char>(std::stoi(s.substr(i + 1, 2), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    std::size_t end = path.find('/', start);
    if (end == std::string::npos) end = path.size();
    if (end > start) parts.push_back(percent_decode(path.substr(start, end - start)));
    start = end + 1;
  }
  return parts;
}

std::int64_t wall_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownName:
      return 404;
    case ErrorCode::NotAdmissible:
    case ErrorCode::PrefixNotAdmissible:
      return 409;
    default:
      return 422;
  }
}

json pair_json(const GroupContext& ctx, int cls) {
  const auto& c = ctx.pair_classes()[cls];
  const auto& p = c.representative;
  return {{"id", cls},
          {"H", p.H.members()},
          {"K", p.K.members()},
          {"H_order", p.H.order()},
          {"K_order", p.K.order()},
          {"degree", p.degree()},
          {"type", p.index()},
          {"class_size", c.members.size()}};
}

}  // namespace

std::vector<std::string> default_service_groups() {
  std::vector<std::string> out;
  for (const auto& info : named_group_list())
    if (named_group(info.name)->order() <= 64) out.push_back(info.name);
  return out;
}

Api::Api(ServiceConfig config) : config_(std::move(config)), clock_(wall_seconds) {
  if (config_.groups.empty()) config_.groups = default_service_groups();
  load_snapshot();
  for (int i = 0; i < std::max(1, config_.count_workers); ++i)
    workers_.emplace_back([this] { count_worker(); });
}

Api::~Api() {
  {
    std::lock_guard lock(jobs_mu_);
    stopping_ = true;
  }
  jobs_cv_.notify_all();
  for (auto& t : workers_) t.join();
}

void Api::set_clock(Clock clock) { clock_ = std::move(clock); }

std::size_t Api::session_count() const {
  std::shared_lock lock(sessions_mu_);
  return sessions_.size();
}

bool Api::offers(const std::string& group) const {
  return std::find(config_.groups.begin(), config_.groups.end(), group) != config_.groups.end();
}

const GroupContext& Api::context(const std::string& group) {
  if (!offers(group)) fail(ErrorCode::UnknownName, "unknown group: " + group);
  std::lock_guard lock(contexts_mu_);
  auto& slot = contexts_[group];
  if (!slot) slot = std::make_shared<GroupContext>(named_group(group));
  return *slot;
}

std::shared_ptr<Api::Session> Api::find_session(const std::string& id) {
  purge_expired();
  std::shared_lock lock(sessions_mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(ErrorCode::UnknownName, "unknown session: " + id);
  return it->second;
}

void Api::purge_expired() {
  const std::int64_t now = clock_();
  std::unique_lock lock(sessions_mu_);
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    std::int64_t updated;
    {
      std::lock_guard slock(it->second->mu);
      updated = it->second->updated;
    }
    if (now - updated > config_.session_ttl.count())
      it = sessions_.erase(it);
    else
      ++it;
  }
}

ArchitectureSpec Api::session_spec(const Session& s, bool with_output) const {
  const auto& ctx = const_cast<Api*>(this)->context(s.group);
  ArchitectureSpec spec;
  spec.group = ctx.group_ptr();
  for (const auto& layer : s.layers) {
    std::vector<Summand> summands;
    for (auto [cls, mult] : layer) summands.push_back({ctx.irrep(cls), mult});
    spec.layers.emplace_back(std::move(summands));
  }
  if (with_output && (spec.layers.empty() || !spec.layers.back().is_trivial()))
    spec.layers.push_back(trivial_layer(spec.group));
  return spec;
}

json Api::session_json(const Session& s) const {
  json layers = json::array();
  for (const auto& layer : s.layers) {
    json irreps = json::array();
    for (auto [cls, mult] : layer) irreps.push_back({{"pair", cls}, {"multiplicity", mult}});
    layers.push_back(irreps);
  }
  return {{"id", s.id},
          {"group", s.group},
          {"layers", layers},
          {"created", s.created},
          {"updated", s.updated}};
}

void Api::save_snapshot() {
  if (config_.snapshot_path.empty()) return;
  json all = json::array();
  std::uint64_t next = 0;
  {
    std::shared_lock lock(sessions_mu_);
    next = next_session_;
    for (const auto& [id, s] : sessions_) {
      std::lock_guard slock(s->mu);
      all.push_back(session_json(*s));
    }
  }
  std::lock_guard lock(snapshot_mu_);
  const std::string tmp = config_.snapshot_path + ".tmp";
  {
    std::ofstream out(tmp);
    out << json{{"next_session", next}, {"sessions", all}}.dump() << '\n';
  }
  std::rename(tmp.c_str(), config_.snapshot_path.c_str());
}

void Api::load_snapshot() {
  if (config_.snapshot_path.empty()) return;
  std::ifstream in(config_.snapshot_path);
  if (!in) return;
  try {
    json doc = json::parse(in);
    next_session_ = doc.value("next_session", std::uint64_t{1});
    for (const auto& sj : doc.at("sessions")) {
      auto s = std::make_shared<Session>();
      s->id = sj.at("id").get<std::string>();
      s->group = sj.at("group").get<std::string>();
      s->created = sj.at("created").get<std::int64_t>();
      s->updated = sj.at("updated").get<std::int64_t>();
      for (const auto& layer : sj.at("layers")) {
        std::vector<std::pair<int, int>> l;
        for (const auto& ir : layer)
          l.emplace_back(ir.at("pair").get<int>(), ir.at("multiplicity").get<int>());
        s->layers.push_back(std::move(l));
      }
      if (offers(s->group)) sessions_[s->id] = s;
    }
  } catch (const json::exception&) {
  }
}

// ------------------------------------------------------------------ routing

ApiResponse Api::handle(const std::string& method, const std::string& path,
                        const std::map<std::string, std::string>& query, const std::string& body) {
  auto p = split_path(path);
  auto parse_body = [&]() -> json {
    if (body.empty()) return json::object();
    try {
      return json::parse(body);
    } catch (const json::exception& e) {
      fail(ErrorCode::ParseError, std::string("malformed JSON body: ") + e.what());
    }
  };
  try {
    if (p.empty() || p[0] != "api") return error_reply(404, "NotFound", "no such route");
    const std::size_t n = p.size();
    if (n >= 2 && p[1] == "groups") {
      if (n == 2 && method == "GET") return groups();
      if (n == 3 && method == "GET") return group_info(p[2]);
      if (n == 4 && p[3] == "pairs" && method == "GET") return pairs(p[2]);
    }
    if (n >= 2 && p[1] == "sessions") {
      if (n == 2 && method == "POST") return create_session(parse_body());
      if (n == 3 && method == "GET") return get_session(p[2]);
      if (n == 3 && method == "DELETE") return delete_session(p[2]);
      if (n == 4 && p[3] == "admissible-next" && method == "GET") return admissible_next(p[2], query);
      if (n == 4 && p[3] == "layers" && method == "POST") return add_layer(p[2], parse_body());
      if (n == 5 && p[3] == "layers" && p[4] == "last" && method == "DELETE")
        return remove_last_layer(p[2]);
      if (n == 4 && p[3] == "export" && method == "GET") return export_session(p[2]);
      if (n == 4 && p[3] == "smoke" && method == "POST") return smoke(p[2], parse_body());
    }
    if (n == 5 && p[1] == "pairs" && p[4] == "pattern" && method == "GET") return pattern(p[2], p[3]);
    if (n >= 2 && p[1] == "count") {
      if (n == 2 && method == "POST") return start_count(parse_body());
      if (n == 3 && method == "GET") return count_status(p[2]);
    }
    return error_reply(404, "NotFound", "no such route");
  } catch (const Error& e) {
    return error_reply(status_for(e.code()), std::string(error_code_name(e.code())), e.what());
  } catch (const json::exception& e) {
    return error_reply(422, "ParseError", e.what());
  }
}

ApiResponse Api::groups() {
  json out = json::array();
  for (const auto& info : named_group_list()) {
    if (!offers(info.name)) continue;
    auto g = named_group(info.name);
    out.push_back({{"name", info.name},
                   {"description", info.description},
                   {"order", g->order()},
                   {"degree", g->degree()}});
  }
  return reply(200, out);
}

ApiResponse Api::group_info(const std::string& g) {
  const auto& ctx = context(g);
  json out = group_to_json(ctx.group());
  out["subgroups"] = ctx.subgroups().size();
  out["pair_classes"] = ctx.pair_classes().size();
  return reply(200, out);
}

ApiResponse Api::pairs(const std::string& g) {
  const auto& ctx = context(g);
  json out = json::array();
  for (std::size_t c = 0; c < ctx.pair_classes().size(); ++c)
    out.push_back(pair_json(ctx, static_cast<int>(c)));
  return reply(200, out);
}

ApiResponse Api::create_session(const json& body) {
  if (!body.is_object() || !body.contains("group") || !body["group"].is_string())
    return error_reply(422, "ParseError", "body must be {\"group\": name}");
  const std::string group = body["group"].get<std::string>();
  context(group);
  auto s = std::make_shared<Session>();
  s->group = group;
  s->created = s->updated = clock_();
  {
    std::unique_lock lock(sessions_mu_);
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%08llx", static_cast<unsigned long long>(next_session_++));
    s->id = buf;
    sessions_[s->id] = s;
  }
  json out;
  {
    std::lock_guard lock(s->mu);
    out = session_json(*s);
  }
  save_snapshot();
  return reply(201, out);
}

ApiResponse Api::get_session(const std::string& id) {
  auto s = find_session(id);
  std::lock_guard lock(s->mu);
  return reply(200, session_json(*s));
}

ApiResponse Api::delete_session(const std::string& id) {
  find_session(id);
  {
    std::unique_lock lock(sessions_mu_);
    sessions_.erase(id);
  }
  save_snapshot();
  return reply(200, {{"deleted", id}});
}

ApiResponse Api::admissible_next(const std::string& id,
                                 const std::map<std::string, std::string>& query) {
  auto s = find_session(id);
  bool strict = true;
  if (auto it = query.find("strict_decrease"); it != query.end()) {
    if (it->second == "true" || it->second == "1")
      strict = true;
    else if (it->second == "false" || it->second == "0")
      strict = false;
    else
      return error_reply(422, "ParseError", "strict_decrease must be a boolean");
  }
  ArchitectureSpec spec;
  {
    std::lock_guard lock(s->mu);
    spec = session_spec(*s, false);
  }
  const auto& ctx = context(s->group);
  json out = json::array();
  for (int c : gdnn::admissible_next(ctx, spec, strict)) out.push_back(pair_json(ctx, c));
  return reply(200, {{"layer", spec.layers.size() + 1}, {"strict_decrease", strict}, {"candidates", out}});
}

ApiResponse Api::add_layer(const std::string& id, const json& body) {
  auto s = find_session(id);
  const auto& ctx = context(s->group);
  if (!body.is_object() || !body.contains("pairs") || !body["pairs"].is_array() ||
      body["pairs"].empty())
    return error_reply(422, "ParseError", "body must be {\"pairs\": [ids], \"multiplicities\": [..]}");
  std::vector<int> ids, mults;
  for (const auto& v : body["pairs"]) {
    if (!v.is_number_integer()) return error_reply(422, "ParseError", "pair ids must be integers");
    ids.push_back(v.get<int>());
  }
  if (body.contains("multiplicities")) {
    if (!body["multiplicities"].is_array() || body["multiplicities"].size() != ids.size())
      return error_reply(422, "ParseError", "one multiplicity per pair is required");
    for (const auto& v : body["multiplicities"]) {
      if (!v.is_number_integer() || v.get<int>() < 1)
        return error_reply(422, "ParseError", "multiplicities must be positive integers");
      mults.push_back(v.get<int>());
    }
  } else {
    mults.assign(ids.size(), 1);
  }
  std::set<int> seen;
  for (int c : ids) {
    if (c < 0 || c >= static_cast<int>(ctx.pair_classes().size()))
      return error_reply(422, "InvalidPair", "pair id out of range: " + std::to_string(c));
    if (!seen.insert(c).second)
      return error_reply(422, "InvalidPair", "pair id repeated within a layer");
  }

  std::unique_lock lock(s->mu);
  std::vector<std::pair<int, int>> layer;
  for (std::size_t i = 0; i < ids.size(); ++i) layer.emplace_back(ids[i], mults[i]);
  s->layers.push_back(layer);
  auto report = check_admissible(session_spec(*s, false), &ctx.theta_cache());
  if (!report.admissible) {
    s->layers.pop_back();
    json out = failure_to_json(*report.failure);
    out["error"] = "NotAdmissible";
    return reply(409, out);
  }
  s->updated = clock_();
  json out = session_json(*s);
  lock.unlock();
  save_snapshot();
  return reply(200, out);
}

ApiResponse Api::remove_last_layer(const std::string& id) {
  auto s = find_session(id);
  std::unique_lock lock(s->mu);
  if (s->layers.empty()) return error_reply(409, "Empty", "session has no layers");
  s->layers.pop_back();
  s->updated = clock_();
  json out = session_json(*s);
  lock.unlock();
  save_snapshot();
  return reply(200, out);
}

ApiResponse Api::export_session(const std::string& id) {
  auto s = find_session(id);
  ArchitectureSpec spec;
  {
    std::lock_guard lock(s->mu);
    spec = session_spec(*s, true);
  }
  auto report = check_admissible(spec, &context(s->group).theta_cache());
  if (!report.admissible) {
    json out = failure_to_json(*report.failure);
    out["error"] = "NotAdmissible";
    return reply(409, out);
  }
  return reply(200, spec_to_json(spec));
}

ApiResponse Api::smoke(const std::string& id, const json& body) {
  auto s = find_session(id);
  ArchitectureSpec spec;
  {
    std::lock_guard lock(s->mu);
    spec = session_spec(*s, true);
  }
  const std::uint64_t seed = body.value("seed", std::uint64_t{0});
  const int samples = body.value("samples", 20);
  if (samples < 1 || samples > 1000) return error_reply(422, "ParseError", "samples out of range");
  GDNNModel model = GDNNModel::compile(spec);
  LatentWeights w = init_weights(model, seed, "normal");
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> dist;
  Eigen::MatrixXd x(model.input_dim(), samples);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = dist(rng);
  const double dev = invariance_deviation(model, w, x);
  return reply(200, {{"admissible", model.admissible()},
                     {"depth", model.depth()},
                     {"parameters", parameter_count(model)},
                     {"samples", samples},
                     {"invariance_deviation", dev},
                     {"pass", dev <= 1e-9}});
}

ApiResponse Api::pattern(const std::string& g, const std::string& pair) {
  const auto& ctx = context(g);
  int cls = -1;
  try {
    std::size_t used = 0;
    cls = std::stoi(pair, &used);
    if (used != pair.size()) cls = -1;
  } catch (const std::exception&) {
  }
  if (cls < 0 || cls >= static_cast<int>(ctx.pair_classes().size()))
    fail(ErrorCode::UnknownName, "unknown pair: " + pair);
  auto rho = ctx.irrep(cls);
  std::vector<GroupElement> rg, pg;
  for (int gen : ctx.group().generators()) {
    rg.push_back(rho->evaluate(gen));
    pg.push_back(ctx.group().element(gen));
  }
  json out = basis_to_json(build_basis(rg, pg));
  out["pair"] = pair_json(ctx, cls);
  return reply(200, out);
}

ApiResponse Api::start_count(const json& body) {
  if (!body.is_object() || !body.contains("group") || !body["group"].is_string())
    return error_reply(422, "ParseError", "body must be {\"group\", \"mode\", \"max_depth\"}");
  auto job = std::make_shared<CountJob>();
  job->group = body["group"].get<std::string>();
  job->mode = mode_from_name(body.value("mode", std::string("gdnn")));
  job->max_depth = body.value("max_depth", 0);
  if (!offers(job->group)) fail(ErrorCode::UnknownName, "unknown group: " + job->group);
  {
    std::lock_guard lock(jobs_mu_);
    job->id = "c" + std::to_string(next_job_++);
    jobs_[job->id] = job;
    queue_.push_back(job);
  }
  jobs_cv_.notify_one();
  return reply(202, {{"job", job->id}, {"status", "queued"}});
}

ApiResponse Api::count_status(const std::string& id) {
  std::lock_guard lock(jobs_mu_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) return error_reply(404, "UnknownName", "unknown job: " + id);
  const auto& job = *it->second;
  json rows = json::array();
  for (const auto& r : job.rows)
    rows.push_back({{"depth", r.depth}, {"admissible", r.admissible}, {"total", r.total}});
  json out{{"job", job.id},
           {"group", job.group},
           {"mode", mode_name(job.mode)},
           {"status", job.status},
           {"rows", rows}};
  if (!job.error.empty()) out["error"] = job.error;
  return reply(200, out);
}

void Api::count_worker() {
  while (true) {
    std::shared_ptr<CountJob> job;
    {
      std::unique_lock lock(jobs_mu_);
      jobs_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      job = queue_.front();
      queue_.pop_front();
      job->status = "running";
    }
    std::vector<CountRow> rows;
    std::string error;
    try {
      rows = count_architectures(context(job->group), job->mode, job->max_depth);
    } catch (const std::exception& e) {
      error = e.what();
    }
    std::lock_guard lock(jobs_mu_);
    job->rows = std::move(rows);
    job->error = error;
    job->status = error.empty() ? "done" : "failed";
  }
}

// ------------------------------------------------------------------ HTTP

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(Api& api) : impl_(std::make_unique<Impl>()) {
  auto& server = impl_->server;
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  auto handler = [&api](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query[k] = v;
    ApiResponse r = api.handle(req.method, req.path, query, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get(R"(/api/.*)", handler);
  server.Post(R"(/api/.*)", handler);
  server.Delete(R"(/api/.*)", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) fail(ErrorCode::InvalidArgument, "cannot listen on port " + std::to_string(port));
  return bound;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

void serve(Api& api, const std::string& host, int port) {
  HttpServer server(api);
  server.bind(host, port);
  server.run();
}

}  // namespace gdnn
