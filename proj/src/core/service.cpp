#include "triage/service.hpp"

#include <chrono>
#include <cmath>

#include "httplib.h"
#include "triage/error.hpp"
#include "triage/preprocess.hpp"

namespace triage {

using nlohmann::json;

namespace {

constexpr std::array<Vital, 6> kRequiredVitals = {Vital::RespiratoryRate, Vital::SystolicBp, Vital::DiastolicBp,
                                                  Vital::PulseRate,       Vital::BloodGlucose, Vital::Spo2};

HttpReply reply(int status, const json& body) { return {status, body.dump()}; }

HttpReply error_reply(int status, std::string_view code, const std::string& message, const std::string& field = {}) {
  json err = {{"code", code}, {"message", message}};
  if (!field.empty()) err["field"] = field;
  return reply(status, {{"error", err}});
}

double number_field(const json& v, const std::string& name) {
  if (!v.is_number()) throw Error(ErrorCode::Data, "field " + name + " must be a number", name);
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw Error(ErrorCode::Data, "field " + name + " must be finite", name);
  return d;
}

bool flag_field(const json& v, const std::string& name) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number()) {
    const double d = v.get<double>();
    if (d == 0.0 || d == 1.0) return d == 1.0;
  }
  throw Error(ErrorCode::Data, "flag " + name + " must be true/false or 0/1", name);
}

Deviation deviation_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Data, "deviation must be an object", "deviation");
  Deviation d;
  bool has_targets = false;
  bool has_percent = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "percent") {
      d.percent = number_field(value, "deviation.percent");
      has_percent = true;
    } else if (key == "targets") {
      if (!value.is_array()) throw Error(ErrorCode::Data, "deviation.targets must be an array", "deviation.targets");
      has_targets = true;
      for (const auto& t : value) {
        if (!t.is_string()) throw Error(ErrorCode::Data, "deviation targets must be vital names", "deviation.targets");
        auto v = vital_from_name(t.get<std::string>());
        if (!v) throw Error(ErrorCode::Usage, "unknown vital '" + t.get<std::string>() + "' in deviation.targets",
                            "deviation.targets");
        d.targets.insert(*v);
      }
    } else {
      throw Error(ErrorCode::Usage, "unknown field '" + key + "' in deviation", "deviation." + key);
    }
  }
  if (!has_percent) throw Error(ErrorCode::Data, "deviation.percent is required", "deviation.percent");
  if (!has_targets) d.targets = Deviation::all(d.percent).targets;
  if (!(d.percent >= -90.0 && d.percent <= 300.0)) {
    throw Error(ErrorCode::Range, "deviation percent must lie in [-90, 300]", "deviation.percent");
  }
  return d;
}

}  // namespace

PatientRecord record_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Data, "record must be an object", "record");
  PatientRecord r;
  std::array<bool, kVitalCount> seen{};
  for (const auto& [key, value] : j.items()) {
    if (key == "case_id") {
      if (!value.is_string()) throw Error(ErrorCode::Data, "case_id must be a string", key);
      r.case_id = value.get<std::string>();
    } else if (auto v = vital_from_name(key)) {
      if (value.is_null()) continue;
      const double d = number_field(value, key);
      if ((*v == Vital::GcsTotal || *v == Vital::CirculationState) && d != std::floor(d)) {
        throw Error(ErrorCode::Data, "field " + key + " must be an integer", key);
      }
      r.vitals.set(*v, d);
      seen[static_cast<std::size_t>(*v)] = true;
    } else if (auto f = flag_from_name(key)) {
      r.flags[*f] = flag_field(value, key);
    } else {
      throw Error(ErrorCode::Usage, "unknown field '" + key + "'", key);
    }
  }
  for (auto v : kRequiredVitals) {
    if (!seen[static_cast<std::size_t>(v)]) {
      throw Error(ErrorCode::Data, "missing field " + std::string(vital_name(v)), std::string(vital_name(v)));
    }
  }
  if (!seen[static_cast<std::size_t>(Vital::BodyTemperature)]) r.vitals.body_temperature = 36.8;
  if (!seen[static_cast<std::size_t>(Vital::GcsTotal)]) r.vitals.gcs_total = 15;
  if (!seen[static_cast<std::size_t>(Vital::CirculationState)]) r.vitals.circulation_state = 0;
  if (!seen[static_cast<std::size_t>(Vital::MeanArterialPressure)]) {
    if (r.vitals.systolic_bp < r.vitals.diastolic_bp || r.vitals.diastolic_bp <= 0.0) {
      throw Error(ErrorCode::Range, "systolic_bp must be >= diastolic_bp", "systolic_bp");
    }
    r.vitals.mean_arterial_pressure = derive_map(r.vitals.systolic_bp, r.vitals.diastolic_bp);
  }
  return r;
}

json record_to_json(const PatientRecord& record) {
  json j = json::object();
  j["case_id"] = record.case_id;
  for (std::size_t i = 0; i < kVitalCount; ++i) {
    const auto v = static_cast<Vital>(i);
    if (v == Vital::GcsTotal || v == Vital::CirculationState) {
      j[std::string(vital_name(v))] = static_cast<int>(record.vitals.get(v));
    } else {
      j[std::string(vital_name(v))] = record.vitals.get(v);
    }
  }
  for (std::size_t i = 0; i < kFlagCount; ++i) {
    const auto f = static_cast<Flag>(i);
    j[std::string(flag_name(f))] = record.flags[f];
  }
  return j;
}

json probability_set_to_json(const ProbabilitySet& set) {
  json probs = json::array();
  for (auto c : kAllComplications) {
    probs.push_back({{"complication", key_name(c)},
                     {"display_name", display_name(c)},
                     {"gbt_pct", set.at(c).gbt_pct},
                     {"ann_pct", set.at(c).ann_pct}});
  }
  json ranking = json::array();
  for (auto c : set.ranking) ranking.push_back(key_name(c));
  return {{"probabilities", probs}, {"ranking", ranking}};
}

TriageService::TriageService(std::filesystem::path model_dir) : model_dir_(std::move(model_dir)) {}

TriageService::~TriageService() {
  stop();
  if (loader_.joinable()) loader_.join();
}

std::shared_ptr<const TriageService::Loaded> TriageService::loaded() const {
  std::lock_guard lock(mutex_);
  return loaded_;
}

std::shared_ptr<const PredictionEngine> TriageService::engine() const {
  auto l = loaded();
  return l ? l->engine : nullptr;
}

void TriageService::set_engine(std::shared_ptr<const PredictionEngine> engine) {
  auto l = std::make_shared<Loaded>();
  for (auto c : kAllComplications) l->checksums[index_of(c)] = bundle_checksum(engine->bundle(c));
  l->engine = std::move(engine);
  std::lock_guard lock(mutex_);
  loaded_ = std::move(l);
  load_error_.clear();
}

bool TriageService::load() {
  try {
    set_engine(PredictionEngine::load(model_dir_));
    return true;
  } catch (const std::exception& e) {
    std::lock_guard lock(mutex_);
    load_error_ = e.what();
    return false;
  }
}

void TriageService::load_async() {
  if (loader_.joinable()) loader_.join();
  loader_ = std::thread([this] { load(); });
}

bool TriageService::ready() const { return loaded() != nullptr; }

std::string TriageService::load_error() const {
  std::lock_guard lock(mutex_);
  return load_error_;
}

HttpReply TriageService::health() const {
  if (!ready()) {
    json body = {{"status", "loading"}};
    if (auto err = load_error(); !err.empty()) body["error"] = err;
    return reply(503, body);
  }
  return reply(200, {{"status", "ready"}, {"schema_version", kSchemaVersion}});
}

HttpReply TriageService::models() const {
  auto l = loaded();
  if (!l) return error_reply(503, "not_ready", "models are not loaded");
  json list = json::array();
  for (auto c : kAllComplications) {
    const auto& b = l->engine->bundle(c);
    list.push_back({{"complication", key_name(c)},
                    {"display_name", display_name(c)},
                    {"fingerprint", l->checksums[index_of(c)]},
                    {"training_fingerprint", b.training_fingerprint},
                    {"selected_features", b.selected_features}});
  }
  return reply(200, {{"schema_version", kSchemaVersion}, {"models", list}});
}

HttpReply TriageService::testcases() const {
  json list = json::array();
  for (const auto& c : bundled_test_cases()) {
    list.push_back({{"name", c.name}, {"description", c.description}, {"record", record_to_json(c.record)}});
  }
  return reply(200, list);
}

HttpReply TriageService::predict(const std::string& body) const {
  auto l = loaded();
  if (!l) return error_reply(503, "not_ready", "models are not loaded");
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    return error_reply(400, "invalid_json", std::string("body is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) return error_reply(400, "invalid_field", "body must be a JSON object");
  try {
    std::optional<PatientRecord> record;
    std::optional<Deviation> deviation;
    for (const auto& [key, value] : j.items()) {
      if (key == "record") {
        record = record_from_json(value);
      } else if (key == "deviation") {
        if (!value.is_null()) deviation = deviation_from_json(value);
      } else {
        return error_reply(400, "unknown_field", "unknown field '" + key + "'", key);
      }
    }
    if (!record) return error_reply(400, "invalid_field", "missing field record", "record");
    validate(*record);

    const auto report = deviation ? l->engine->predict_with_deviation(*record, *deviation)
                                  : l->engine->predict(*record);
    json out = {{"case_id", record->case_id},
                {"baseline", probability_set_to_json(report.baseline)},
                {"ranking", probability_set_to_json(report.baseline)["ranking"]}};
    if (report.modified) {
      out["modified"] = probability_set_to_json(*report.modified);
      json targets = json::array();
      for (auto v : deviation->targets) targets.push_back(vital_name(v));
      out["deviation"] = {{"percent", deviation->percent}, {"targets", targets}};
    }
    json fingerprints = json::object();
    for (auto c : kAllComplications) fingerprints[std::string(key_name(c))] = l->checksums[index_of(c)];
    out["models"] = {{"schema_version", kSchemaVersion}, {"fingerprints", fingerprints}};
    return reply(200, out);
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::Range: return error_reply(422, "out_of_range", e.what(), e.field());
      case ErrorCode::Usage: return error_reply(400, "unknown_field", e.what(), e.field());
      default: return error_reply(400, "invalid_field", e.what(), e.field());
    }
  }
}

HttpReply TriageService::handle(const std::string& method, const std::string& path, const std::string& body) const {
  if (path == "/api/v1/predict") {
    if (method != "POST") return error_reply(405, "method_not_allowed", "use POST");
    return predict(body);
  }
  if (path == "/api/v1/testcases" || path == "/api/v1/models" || path == "/api/v1/health") {
    if (method != "GET") return error_reply(405, "method_not_allowed", "use GET");
    if (path == "/api/v1/testcases") return testcases();
    if (path == "/api/v1/models") return models();
    return health();
  }
  return error_reply(404, "not_found", "no route for " + path);
}

void TriageService::install_routes() {
  server_->set_tcp_nodelay(true);
  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    const auto r = handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(r.body, "application/json");
  };
  for (const char* path : {"/api/v1/testcases", "/api/v1/models", "/api/v1/health"}) server_->Get(path, forward);
  server_->Post("/api/v1/predict", forward);
  server_->Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  server_->Post("/api/v1/admin/reload", [this](const httplib::Request&, httplib::Response& res) {
    const bool ok = load();
    res.status = ok ? 200 : 503;
    json body = {{"reloaded", ok}};
    if (!ok) body["error"] = load_error();
    res.set_content(body.dump(), "application/json");
  });
}

bool TriageService::listen(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  install_routes();
  return server_->listen(host, port);
}

int TriageService::start_background(const std::string& host) {
  server_ = std::make_unique<httplib::Server>();
  install_routes();
  const int port = server_->bind_to_any_port(host);
  if (port < 0) return -1;
  server_thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void TriageService::stop() {
  if (server_) server_->stop();
  if (server_thread_.joinable()) server_thread_.join();
}

}  // namespace triage
