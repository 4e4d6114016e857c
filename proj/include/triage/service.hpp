#pragma once

// JSON-over-HTTP interface to the prediction engine (/api/v1/...).

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "json.hpp"
#include "triage/predictor.hpp"
#include "triage/testcases.hpp"

namespace httplib {
class Server;
}

namespace triage {

/// Strict decoding of a record object: unknown names raise Error{Usage}
/// naming the field, wrong types Error{Data}, missing required vitals
/// Error{Data}. Range checks are left to validate().
PatientRecord record_from_json(const nlohmann::json& j);
nlohmann::json record_to_json(const PatientRecord& record);

nlohmann::json probability_set_to_json(const ProbabilitySet& set);

struct HttpReply {
  int status = 200;
  std::string body;  // JSON
};

class TriageService {
 public:
  explicit TriageService(std::filesystem::path model_dir);
  ~TriageService();

  TriageService(const TriageService&) = delete;
  TriageService& operator=(const TriageService&) = delete;

  /// Loads (or reloads) the engine synchronously; the previous engine keeps
  /// serving until the new one is ready. Returns false and records the error
  /// when loading fails.
  bool load();
  /// Loads on a background thread.
  void load_async();
  bool ready() const;
  std::string load_error() const;

  /// Engine currently in use (null before the first successful load).
  std::shared_ptr<const PredictionEngine> engine() const;
  /// Installs an already built engine.
  void set_engine(std::shared_ptr<const PredictionEngine> engine);

  /// Transport-independent request handling.
  HttpReply handle(const std::string& method, const std::string& path, const std::string& body) const;

  /// Binds and serves until stop(). Returns false when binding fails.
  bool listen(const std::string& host, int port);
  /// Binds to an ephemeral port and serves on a background thread; returns the port (or -1).
  int start_background(const std::string& host = "127.0.0.1");
  void stop();

 private:
  HttpReply predict(const std::string& body) const;
  HttpReply models() const;
  HttpReply testcases() const;
  HttpReply health() const;

  void install_routes();

  struct Loaded {
    std::shared_ptr<const PredictionEngine> engine;
    std::array<std::string, kComplicationCount> checksums;
  };
  std::shared_ptr<const Loaded> loaded() const;

  std::filesystem::path model_dir_;
  mutable std::mutex mutex_;
  std::shared_ptr<const Loaded> loaded_;
  std::string load_error_;
  std::thread loader_;
  std::unique_ptr<httplib::Server> server_;
  std::thread server_thread_;
};

}  // namespace triage
