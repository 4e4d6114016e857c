#include <filesystem>
#include <unistd.h>

#include "doctest.h"
#include "helpers.hpp"
#include "httplib.h"
#include "triage/service.hpp"

using namespace triage;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<ComplicationBundle>& bundles() {
  static const auto b = testutil::small_training().bundles;
  return b;
}

fs::path model_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("triage_service_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    for (const auto& b : bundles()) save_bundle(b, bundle_path(d, b.complication));
    write_manifest(d);
    return d;
  }();
  return dir;
}

json use_case_body(std::size_t i) { return {{"record", record_to_json(bundled_test_cases().at(i).record)}}; }

json call(const TriageService& s, const std::string& method, const std::string& path, const json& body, int expect) {
  const auto r = s.handle(method, path, body.is_null() ? "" : body.dump());
  CHECK(r.status == expect);
  return json::parse(r.body);
}

}  // namespace

TEST_CASE("record decoding is strict") {
  const auto uc = record_to_json(bundled_test_cases()[0].record);
  CHECK(record_from_json(uc) == bundled_test_cases()[0].record);

  auto typo = uc;
  typo["heihgt"] = 180;
  try {
    record_from_json(typo);
    FAIL("unknown field accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Usage);
    CHECK(e.field() == "heihgt");
  }

  auto wrong = uc;
  wrong["pulse_rate"] = "fast";
  CHECK(testutil::error_code_of([&] { record_from_json(wrong); }) == ErrorCode::Data);
  auto missing = uc;
  missing.erase("spo2");
  CHECK(testutil::error_code_of([&] { record_from_json(missing); }) == ErrorCode::Data);
  auto flag = uc;
  flag["chest_pain"] = 2;
  CHECK(testutil::error_code_of([&] { record_from_json(flag); }) == ErrorCode::Data);

  json minimal = {{"respiratory_rate", 16}, {"systolic_bp", 142}, {"diastolic_bp", 85},
                  {"pulse_rate", 80},       {"blood_glucose", 100}, {"spo2", 98}, {"chest_pain", true}};
  const auto r = record_from_json(minimal);
  CHECK(r.vitals.mean_arterial_pressure == doctest::Approx(104.0));
  CHECK(r.vitals.gcs_total == 15);
  CHECK(r.flags[Flag::ChestPain]);
}

TEST_CASE("endpoints answer 503 until models are loaded") {
  TriageService s(fs::temp_directory_path() / "triage_no_models_here");
  CHECK_FALSE(s.ready());
  CHECK(call(s, "GET", "/api/v1/health", nullptr, 503)["status"] == "loading");
  CHECK(call(s, "POST", "/api/v1/predict", use_case_body(0), 503)["error"]["code"] == "not_ready");
  call(s, "GET", "/api/v1/models", nullptr, 503);
  CHECK_FALSE(s.load());
  CHECK(s.load_error().find("manifest") != std::string::npos);
  CHECK_FALSE(s.ready());
}

TEST_CASE("predict, models and testcases") {
  TriageService s(model_dir());
  REQUIRE(s.load());
  CHECK(call(s, "GET", "/api/v1/health", nullptr, 200)["status"] == "ready");

  const auto r = call(s, "POST", "/api/v1/predict", use_case_body(0), 200);
  CHECK(r["baseline"]["probabilities"].size() == kComplicationCount);
  CHECK(r["ranking"].size() == kComplicationCount);
  CHECK_FALSE(r.contains("modified"));
  CHECK(r["models"]["schema_version"] == kSchemaVersion);
  const auto report = s.engine()->predict(bundled_test_cases()[0].record);
  CHECK(r["ranking"][0] == key_name(report.baseline.ranking[0]));
  CHECK(r["baseline"]["probabilities"][0]["gbt_pct"].get<double>() == report.baseline.by_complication[0].gbt_pct);
  CHECK(r["models"]["fingerprints"]["cardiovascular"] == bundle_checksum(bundles()[0]));

  auto with_dev = use_case_body(2);
  with_dev["deviation"] = {{"percent", 20}};
  const auto d = call(s, "POST", "/api/v1/predict", with_dev, 200);
  REQUIRE(d.contains("modified"));
  CHECK(d["deviation"]["percent"] == 20);

  const auto models = call(s, "GET", "/api/v1/models", nullptr, 200);
  REQUIRE(models["models"].size() == kComplicationCount);
  CHECK(models["models"][5]["complication"] == "metabolic");
  CHECK(models["models"][0]["selected_features"].size() == bundles()[0].selected_features.size());

  const auto cases = call(s, "GET", "/api/v1/testcases", nullptr, 200);
  REQUIRE(cases.size() == 6);
  CHECK(cases[0]["name"] == "Use case 1");
  CHECK(record_from_json(cases[2]["record"]) == bundled_test_cases()[2].record);
}

TEST_CASE("predict error contract") {
  TriageService s(model_dir());
  REQUIRE(s.load());

  auto typo = use_case_body(0);
  typo["record"]["heihgt"] = 180;
  const auto e1 = call(s, "POST", "/api/v1/predict", typo, 400);
  CHECK(e1["error"]["code"] == "unknown_field");
  CHECK(e1["error"]["field"] == "heihgt");

  auto top = use_case_body(0);
  top["heihgt"] = 180;
  CHECK(call(s, "POST", "/api/v1/predict", top, 400)["error"]["field"] == "heihgt");

  auto range = use_case_body(0);
  range["record"]["spo2"] = 140;
  const auto e2 = call(s, "POST", "/api/v1/predict", range, 422);
  CHECK(e2["error"]["code"] == "out_of_range");
  CHECK(e2["error"]["field"] == "spo2");

  auto dev = use_case_body(0);
  dev["deviation"] = {{"percent", 500}};
  call(s, "POST", "/api/v1/predict", dev, 422);
  dev["deviation"] = {{"percent", 10}, {"targets", {"pulse"}}};
  call(s, "POST", "/api/v1/predict", dev, 400);

  CHECK(s.handle("POST", "/api/v1/predict", "{not json").status == 400);
  CHECK(s.handle("POST", "/api/v1/predict", "{}").status == 400);
  CHECK(s.handle("GET", "/api/v1/predict", "").status == 405);
  CHECK(s.handle("GET", "/api/v1/elsewhere", "").status == 404);
}

TEST_CASE("identical requests give identical responses in any order") {
  TriageService s(model_dir());
  REQUIRE(s.load());
  const auto a = use_case_body(0).dump();
  const auto b = use_case_body(4).dump();
  const auto first = s.handle("POST", "/api/v1/predict", a).body;
  s.handle("POST", "/api/v1/predict", b);
  s.handle("GET", "/api/v1/models", "");
  CHECK(s.handle("POST", "/api/v1/predict", a).body == first);
}

TEST_CASE("over a real socket") {
  TriageService s(model_dir());
  s.load_async();
  const int port = s.start_background();
  REQUIRE(port > 0);
  httplib::Client client("127.0.0.1", port);
  for (int i = 0; i < 200 && !s.ready(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(25));
  REQUIRE(s.ready());

  auto health = client.Get("/api/v1/health");
  REQUIRE(health);
  CHECK(health->status == 200);

  auto pred = client.Post("/api/v1/predict", use_case_body(1).dump(), "application/json");
  REQUIRE(pred);
  CHECK(pred->status == 200);
  CHECK(pred->get_header_value("Access-Control-Allow-Origin") == "*");
  CHECK(json::parse(pred->body)["ranking"].size() == kComplicationCount);

  auto options = client.Options("/api/v1/predict");
  REQUIRE(options);
  CHECK(options->status == 204);

  auto reload = client.Post("/api/v1/admin/reload", "", "application/json");
  REQUIRE(reload);
  CHECK(reload->status == 200);
  s.stop();
}
