#include <chrono>
#include <cstdio>
#include <thread>

#include "doctest.h"
#include "gdnn/named_groups.hpp"
#include "gdnn/service.hpp"
#include "helpers.hpp"

#include <httplib.h>

using namespace gdnn;
using namespace testing_support;

namespace {

ApiResponse call(Api& api, const std::string& method, const std::string& path, const json& body = nullptr,
                 const std::map<std::string, std::string>& query = {}) {
  return api.handle(method, path, query, body.is_null() ? "" : body.dump());
}

int z6_class(const GroupContext& ctx, int degree, int type) {
  for (std::size_t c = 0; c < ctx.pair_classes().size(); ++c) {
    const auto& p = ctx.pair(static_cast<int>(c));
    if (p.degree() == degree && p.index() == type) return static_cast<int>(c);
  }
  return -1;
}

json wait_for(Api& api, const std::string& job) {
  for (int i = 0; i < 2000; ++i) {
    auto r = call(api, "GET", "/api/count/" + job);
    if (r.body["status"] == "done" || r.body["status"] == "failed") return r.body;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return nullptr;
}

}  // namespace

TEST_CASE("group routes") {
  Api api;
  auto r = call(api, "GET", "/api/groups");
  CHECK(r.status == 200);
  bool has_z6 = false, has_bp16 = false;
  for (const auto& g : r.body) {
    has_z6 |= g["name"] == "Z6";
    has_bp16 |= g["name"] == "BinProd16";
  }
  CHECK(has_z6);
  CHECK(!has_bp16);

  r = call(api, "GET", "/api/groups/Z6");
  CHECK(r.status == 200);
  CHECK(r.body["order"] == 6);
  CHECK(r.body["subgroups"] == 4);

  r = call(api, "GET", "/api/groups/C2%5E3");
  CHECK(r.status == 200);
  CHECK(r.body["order"] == 8);

  r = call(api, "GET", "/api/groups/Z6/pairs");
  CHECK(r.status == 200);
  CHECK(r.body.size() == 6);
  int previous = 1 << 20;
  for (const auto& p : r.body) {
    CHECK(p["degree"].get<int>() <= previous);
    previous = p["degree"];
  }

  CHECK(call(api, "GET", "/api/groups/S9").status == 404);
  CHECK(call(api, "GET", "/api/groups/BinProd16").status == 404);
  CHECK(call(api, "GET", "/api/nothing").status == 404);
  CHECK(call(api, "PUT", "/api/groups").status == 404);
}

TEST_CASE("session walkthrough") {
  Api api;
  GroupContext ctx(named_group("Z6"));
  const int r32 = z6_class(ctx, 3, 2);
  REQUIRE(r32 >= 0);

  auto r = call(api, "POST", "/api/sessions", {{"group", "Z6"}});
  REQUIRE(r.status == 201);
  const std::string id = r.body["id"];
  const std::string base = "/api/sessions/" + id;

  r = call(api, "GET", base + "/admissible-next");
  CHECK(r.status == 200);
  CHECK(r.body["layer"] == 1);
  bool listed = false;
  for (const auto& c : r.body["candidates"]) listed |= c["id"] == r32;
  CHECK(listed);

  r = call(api, "POST", base + "/layers", {{"pairs", {r32}}});
  CHECK(r.status == 200);
  CHECK(r.body["layers"].size() == 1);

  r = call(api, "GET", base + "/admissible-next", nullptr, {{"strict_decrease", "true"}});
  for (const auto& c : r.body["candidates"]) CHECK(c["degree"].get<int>() < 3);
  CHECK(call(api, "GET", base + "/admissible-next", nullptr, {{"strict_decrease", "maybe"}}).status == 422);

  r = call(api, "GET", base + "/export");
  CHECK(r.status == 200);
  CHECK(r.body == spec_to_json(chain(ctx, {r32})));

  r = call(api, "POST", base + "/smoke", {{"seed", 3}, {"samples", 10}});
  CHECK(r.status == 200);
  CHECK(r.body["pass"] == true);
  CHECK(r.body["invariance_deviation"].get<double>() <= 1e-9);
  CHECK(call(api, "POST", base + "/smoke", {{"samples", 0}}).status == 422);

  r = call(api, "DELETE", base + "/layers/last");
  CHECK(r.status == 200);
  CHECK(r.body["layers"].empty());
  CHECK(call(api, "DELETE", base + "/layers/last").status == 409);

  CHECK(call(api, "DELETE", base).status == 200);
  CHECK(call(api, "GET", base).status == 404);
}

TEST_CASE("first-layer candidates on the icosahedral group") {
  Api api;
  GroupContext ctx(named_group("Icosahedral"));
  auto r = call(api, "POST", "/api/sessions", {{"group", "Icosahedral"}});
  REQUIRE(r.status == 201);
  const std::string id = r.body["id"];
  r = call(api, "GET", "/api/sessions/" + id + "/admissible-next", nullptr, {{"strict_decrease", "true"}});
  REQUIRE(r.status == 200);
  ArchitectureSpec empty;
  empty.group = ctx.group_ptr();
  std::vector<int> ids;
  for (const auto& c : r.body["candidates"]) ids.push_back(c["id"]);
  CHECK(ids == admissible_next(ctx, empty, true));
  int hidden = 0;
  for (int c : ids) hidden += ctx.pair(c).degree() > 1;
  CHECK(hidden == 11);
}

TEST_CASE("layer validation") {
  Api api;
  GroupContext ctx(named_group("D4_min"));
  const std::string id = call(api, "POST", "/api/sessions", {{"group", "D4_min"}}).body["id"];
  const std::string layers = "/api/sessions/" + id + "/layers";
  CHECK(call(api, "POST", layers, {{"pairs", json::array()}}).status == 422);
  CHECK(call(api, "POST", layers, {{"pairs", {0, 0}}}).status == 422);
  CHECK(call(api, "POST", layers, {{"pairs", {999}}}).status == 422);
  CHECK(call(api, "POST", layers, {{"pairs", {0}}, {"multiplicities", {0}}}).status == 422);
  CHECK(call(api, "POST", layers, {{"pairs", {0}}, {"multiplicities", {1, 2}}}).status == 422);
  CHECK(api.handle("POST", layers, {}, "{not json").status == 422);
  CHECK(call(api, "POST", "/api/sessions", {{"grp", "Z6"}}).status == 422);
  CHECK(call(api, "POST", "/api/sessions", {{"group", "nope"}}).status == 404);

  int bad = -1;
  for (std::size_t c = 0; c < ctx.pair_classes().size(); ++c)
    if (!is_admissible(chain(ctx, {static_cast<int>(c)}, false))) bad = static_cast<int>(c);
  REQUIRE(bad >= 0);
  auto r = call(api, "POST", layers, {{"pairs", {bad}}, {"multiplicities", {2}}});
  CHECK(r.status == 409);
  CHECK(r.body["error"] == "NotAdmissible");
  CHECK(r.body["failing_layer"] == 1);
  CHECK(r.body["expected_K"] == json(ctx.pair(bad).K.members()));
  CHECK(call(api, "GET", "/api/sessions/" + id).body["layers"].empty());
}

TEST_CASE("sessions expire") {
  Api api;
  std::int64_t now = 1000;
  api.set_clock([&] { return now; });
  const std::string id = call(api, "POST", "/api/sessions", {{"group", "Z6"}}).body["id"];
  now += 23 * 3600;
  CHECK(call(api, "GET", "/api/sessions/" + id).status == 200);
  CHECK(call(api, "POST", "/api/sessions/" + id + "/layers", {{"pairs", {0}}}).status == 200);
  now += 23 * 3600;
  CHECK(call(api, "GET", "/api/sessions/" + id).status == 200);
  now += 2 * 3600;
  CHECK(call(api, "GET", "/api/sessions/" + id).status == 404);
  CHECK(api.session_count() == 0);
}

TEST_CASE("sessions survive a restart through the snapshot") {
  const std::string path = "service_snapshot_test.json";
  std::remove(path.c_str());
  std::string id;
  {
    ServiceConfig cfg;
    cfg.snapshot_path = path;
    Api api(cfg);
    id = call(api, "POST", "/api/sessions", {{"group", "Q8"}}).body["id"];
    call(api, "POST", "/api/sessions/" + id + "/layers", {{"pairs", {0}}, {"multiplicities", {2}}});
  }
  ServiceConfig cfg;
  cfg.snapshot_path = path;
  Api api(cfg);
  auto r = call(api, "GET", "/api/sessions/" + id);
  CHECK(r.status == 200);
  CHECK(r.body["layers"][0][0]["multiplicity"] == 2);
  auto other = call(api, "POST", "/api/sessions", {{"group", "Q8"}}).body["id"];
  CHECK(other != id);
  std::remove(path.c_str());
}

TEST_CASE("pattern route") {
  Api api;
  GroupContext ctx(named_group("Z6"));
  const int r32 = z6_class(ctx, 3, 2);
  auto r = call(api, "GET", "/api/pairs/Z6/" + std::to_string(r32) + "/pattern");
  CHECK(r.status == 200);
  CHECK(r.body["shape"] == json::array({3, 6}));
  for (const auto& m : r.body["matrices"]) {
    // Each triplet has its partner three columns away with the opposite sign.
    for (const auto& e : m) {
      const int row = e[0], col = e[1], sign = e[2];
      bool partner = false;
      for (const auto& f : m)
        partner |= f[0] == row && f[1] == (col + 3) % 6 && f[2] == -sign;
      CHECK(partner);
    }
  }
  CHECK(call(api, "GET", "/api/pairs/Z6/99/pattern").status == 404);
  CHECK(call(api, "GET", "/api/pairs/Z6/x/pattern").status == 404);
}

TEST_CASE("count jobs") {
  Api api;
  auto r = call(api, "POST", "/api/count", {{"group", "C8"}, {"mode", "gdnn"}, {"max_depth", 2}});
  CHECK(r.status == 202);
  auto done = wait_for(api, r.body["job"]);
  REQUIRE(!done.is_null());
  CHECK(done["status"] == "done");
  CHECK(done["rows"][0]["admissible"] == 5);
  CHECK(done["rows"][0]["total"] == 5);

  std::vector<std::string> jobs;
  for (std::string g : {"D4", "Q8", "C2^3"})
    jobs.push_back(call(api, "POST", "/api/count", {{"group", g}, {"mode", "crelu"}}).body["job"]);
  for (const auto& j : jobs) CHECK(wait_for(api, j)["status"] == "done");

  CHECK(call(api, "POST", "/api/count", {{"group", "C8"}, {"mode", "x"}}).status == 422);
  CHECK(call(api, "POST", "/api/count", {{"group", "BinProd16"}}).status == 404);
  CHECK(call(api, "GET", "/api/count/c999").status == 404);
}

TEST_CASE("http server with CORS") {
  Api api;
  HttpServer server(api);
  const int port = server.bind("127.0.0.1", 0);
  std::thread t([&] { server.run(); });
  httplib::Client client("127.0.0.1", port);
  client.set_connection_timeout(5);
  httplib::Result res;
  for (int i = 0; i < 200 && !(res = client.Get("/api/groups")); ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
  CHECK(json::parse(res->body).is_array());

  auto created = client.Post("/api/sessions", R"({"group": "Z6"})", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const std::string id = json::parse(created->body)["id"];
  auto next = client.Get("/api/sessions/" + id + "/admissible-next?strict_decrease=false");
  REQUIRE(next);
  CHECK(next->status == 200);
  CHECK(json::parse(next->body)["strict_decrease"] == false);

  auto options = client.Options("/api/sessions");
  REQUIRE(options);
  CHECK(options->status == 204);
  CHECK(options->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);

  server.stop();
  t.join();
}
