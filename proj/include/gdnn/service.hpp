#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "gdnn/io.hpp"

namespace gdnn {

struct ApiResponse {
  int status = 200;
  json body;
};

struct ServiceConfig {
  // Groups offered by the service; empty means every registered group
  // small enough for subgroup enumeration.
  std::vector<std::string> groups;
  std::chrono::seconds session_ttl{24 * 3600};
  int count_workers = 2;
  std::string snapshot_path;  // sessions are persisted here when set
};

std::vector<std::string> default_service_groups();

class Api {
 public:
  using Clock = std::function<std::int64_t()>;  // seconds

  explicit Api(ServiceConfig config = {});
  ~Api();
  Api(const Api&) = delete;
  Api& operator=(const Api&) = delete;

  ApiResponse handle(const std::string& method, const std::string& path,
                     const std::map<std::string, std::string>& query, const std::string& body);

  void set_clock(Clock clock);
  std::size_t session_count() const;

 private:
  struct Session {
    std::string id;
    std::string group;
    std::vector<std::vector<std::pair<int, int>>> layers;  // (pair class, multiplicity)
    std::int64_t created = 0;
    std::int64_t updated = 0;
    mutable std::mutex mu;
  };
  struct CountJob {
    std::string id;
    std::string group;
    CountMode mode = CountMode::GDNN;
    int max_depth = 0;
    std::string status = "queued";
    std::vector<CountRow> rows;
    std::string error;
  };

  const GroupContext& context(const std::string& group);
  bool offers(const std::string& group) const;
  std::shared_ptr<Session> find_session(const std::string& id);
  ArchitectureSpec session_spec(const Session& s, bool with_output) const;
  json session_json(const Session& s) const;
  void purge_expired();
  void save_snapshot();
  void load_snapshot();
  void count_worker();

  ApiResponse groups();
  ApiResponse group_info(const std::string& g);
  ApiResponse pairs(const std::string& g);
  ApiResponse create_session(const json& body);
  ApiResponse get_session(const std::string& id);
  ApiResponse delete_session(const std::string& id);
  ApiResponse admissible_next(const std::string& id, const std::map<std::string, std::string>& query);
  ApiResponse add_layer(const std::string& id, const json& body);
  ApiResponse remove_last_layer(const std::string& id);
  ApiResponse export_session(const std::string& id);
  ApiResponse smoke(const std::string& id, const json& body);
  ApiResponse pattern(const std::string& g, const std::string& pair);
  ApiResponse start_count(const json& body);
  ApiResponse count_status(const std::string& job);

  ServiceConfig config_;
  Clock clock_;

  mutable std::mutex contexts_mu_;
  std::map<std::string, std::shared_ptr<GroupContext>> contexts_;

  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_session_ = 1;
  std::mutex snapshot_mu_;

  std::mutex jobs_mu_;
  std::condition_variable jobs_cv_;
  std::map<std::string, std::shared_ptr<CountJob>> jobs_;
  std::deque<std::shared_ptr<CountJob>> queue_;
  std::uint64_t next_job_ = 1;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

// HTTP front end of an Api with CORS headers.
class HttpServer {
 public:
  explicit HttpServer(Api& api);
  ~HttpServer();

  // Port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// bind + run.
void serve(Api& api, const std::string& host, int port);

}  // namespace gdnn
