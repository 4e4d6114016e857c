#include "triage/triage.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "json.hpp"
#include "triage/error.hpp"
#include "triage/predictor.hpp"
#include "triage/preprocess.hpp"
#include "triage/render.hpp"
#include "triage/service.hpp"
#include "triage/synthgen.hpp"
#include "triage/testcases.hpp"
#include "triage/training.hpp"

struct triage_engine {
  std::shared_ptr<const triage::PredictionEngine> engine;
};

struct triage_cases {
  std::vector<triage::PatientRecord> records;
};

struct triage_report {
  triage::ProbabilityReport report;
  std::optional<double> deviation;
};

struct triage_server {
  explicit triage_server(const char* dir) : service(dir) {}
  triage::TriageService service;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_field;

triage_status to_status(triage::ErrorCode code) { return static_cast<triage_status>(static_cast<int>(code) + 1); }

triage_status fail(triage_status status, std::string message, std::string field = {}) {
  g_error = std::move(message);
  g_field = std::move(field);
  return status;
}

template <class F>
triage_status guarded(F&& body) {
  g_error.clear();
  g_field.clear();
  try {
    return body();
  } catch (const triage::Error& e) {
    return fail(to_status(e.code()), e.what(), e.field());
  } catch (const nlohmann::json::exception& e) {
    return fail(TRIAGE_ERR_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(TRIAGE_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(TRIAGE_ERR_INTERNAL, e.what());
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

triage::TrainOptions convert(const triage_train_options* in) {
  triage_train_options defaults;
  triage_train_options_init(&defaults);
  const triage_train_options& o = in ? *in : defaults;
  if (o.tuning < TRIAGE_TUNE_NONE || o.tuning > TRIAGE_TUNE_HALVING) {
    throw triage::Error(triage::ErrorCode::Config, "unknown tuning strategy", "tuning");
  }
  triage::TrainOptions out;
  out.seed = o.seed;
  out.k_folds = o.k_folds;
  out.feature_selection = o.feature_selection != 0;
  out.rfecv_step = o.rfecv_step;
  out.tuning = static_cast<triage::Tuning>(o.tuning);
  out.budget = o.budget;
  if (o.progress) {
    auto fn = o.progress;
    void* user = o.progress_user;
    out.progress = [fn, user](const std::string& line) { fn(line.c_str(), user); };
  }
  return out;
}

triage_status train(const triage::LabeledDataset& data, const triage_train_options* options, const std::string& source,
                    const char* out_dir, char** metrics_table) {
  if (!out_dir) return fail(TRIAGE_ERR_ARGUMENT, "output directory is null");
  const auto result = triage::train_all(data, convert(options), source);
  triage::write_training_outputs(result, out_dir);
  if (metrics_table) *metrics_table = dup(triage::format_metrics_table(result));
  return TRIAGE_OK;
}

const triage::ProbabilitySet* pick(const triage_report* r, int modified) {
  if (!r) return nullptr;
  if (!modified) return &r->report.baseline;
  return r->report.modified ? &*r->report.modified : nullptr;
}

triage_status predict(const triage_engine* engine, const triage::PatientRecord& record, int apply_deviation,
                      double percent, triage_report** out) {
  auto report = std::make_unique<triage_report>();
  if (apply_deviation) {
    report->report = engine->engine->predict_with_deviation(record, triage::Deviation::all(percent));
    report->deviation = percent;
  } else {
    report->report = engine->engine->predict(record);
  }
  *out = report.release();
  return TRIAGE_OK;
}

}  // namespace

extern "C" {

const char* triage_last_error(void) { return g_error.c_str(); }
const char* triage_last_error_field(void) { return g_field.c_str(); }

const char* triage_status_name(triage_status status) {
  switch (status) {
    case TRIAGE_OK: return "ok";
    case TRIAGE_ERR_ARGUMENT: return "argument";
    case TRIAGE_ERR_INTERNAL: return "internal";
    default: break;
  }
  const int code = static_cast<int>(status) - 1;
  if (code < 0 || code > static_cast<int>(triage::ErrorCode::Usage)) return "unknown";
  return triage::error_code_name(static_cast<triage::ErrorCode>(code)).data();
}

void triage_string_free(char* s) { std::free(s); }

int triage_schema_version(void) { return triage::kSchemaVersion; }

const char* triage_complication_name(int c) {
  if (c < 0 || c >= TRIAGE_COMPLICATION_COUNT) return nullptr;
  return triage::display_name(static_cast<triage::Complication>(c)).data();
}

const char* triage_complication_key(int c) {
  if (c < 0 || c >= TRIAGE_COMPLICATION_COUNT) return nullptr;
  return triage::key_name(static_cast<triage::Complication>(c)).data();
}

triage_status triage_generate_csv(uint64_t seed, size_t n_records, size_t noise_features, const char* path) {
  return guarded([&] {
    if (!path) return fail(TRIAGE_ERR_ARGUMENT, "path is null");
    auto config = triage::default_generator_config(seed, n_records);
    config.noise_features = noise_features;
    triage::write_dataset_csv(path, triage::generate(config));
    return TRIAGE_OK;
  });
}

void triage_train_options_init(triage_train_options* options) {
  if (!options) return;
  const triage::TrainOptions d;
  options->seed = d.seed;
  options->k_folds = d.k_folds;
  options->feature_selection = d.feature_selection ? 1 : 0;
  options->rfecv_step = d.rfecv_step;
  options->tuning = static_cast<int>(d.tuning);
  options->budget = d.budget;
  options->progress = nullptr;
  options->progress_user = nullptr;
}

triage_status triage_train_synthetic(uint64_t data_seed, size_t n_records, const triage_train_options* options,
                                     const char* out_dir, char** metrics_table) {
  return guarded([&] {
    const auto config = triage::default_generator_config(data_seed, n_records);
    return train(triage::generate(config), options, config.canonical_string(), out_dir, metrics_table);
  });
}

triage_status triage_train_dataset(const char* dataset_csv, const triage_train_options* options, const char* out_dir,
                                   char** metrics_table) {
  return guarded([&] {
    if (!dataset_csv) return fail(TRIAGE_ERR_ARGUMENT, "dataset path is null");
    std::ifstream in(dataset_csv, std::ios::binary);
    if (!in) return fail(TRIAGE_ERR_IO, std::string("cannot read ") + dataset_csv);
    std::ostringstream text;
    text << in.rdbuf();
    const auto data = triage::dataset_from_csv(text.str(), true);
    return train(data, options, "dataset:" + triage::fnv1a_hex(text.str()), out_dir, metrics_table);
  });
}

triage_status triage_engine_load(const char* model_dir, triage_engine** out) {
  return guarded([&] {
    if (!model_dir || !out) return fail(TRIAGE_ERR_ARGUMENT, "null argument");
    auto engine = std::make_unique<triage_engine>();
    engine->engine = triage::PredictionEngine::load(model_dir);
    *out = engine.release();
    return TRIAGE_OK;
  });
}

void triage_engine_free(triage_engine* engine) { delete engine; }

triage_status triage_engine_evaluate(const triage_engine* engine, const char* dataset_csv, char** metrics_table) {
  return guarded([&] {
    if (!engine || !dataset_csv || !metrics_table) return fail(TRIAGE_ERR_ARGUMENT, "null argument");
    const auto data = triage::read_dataset_csv(dataset_csv, true);
    *metrics_table = dup(triage::format_metrics_table(triage::evaluate_engine(*engine->engine, data)));
    return TRIAGE_OK;
  });
}

triage_status triage_cases_load_csv(const char* path, triage_cases** out) {
  return guarded([&] {
    if (!path || !out) return fail(TRIAGE_ERR_ARGUMENT, "null argument");
    auto cases = std::make_unique<triage_cases>();
    cases->records = triage::read_cases_csv(path);
    *out = cases.release();
    return TRIAGE_OK;
  });
}

triage_status triage_cases_bundled(triage_cases** out) {
  return guarded([&] {
    if (!out) return fail(TRIAGE_ERR_ARGUMENT, "null argument");
    auto cases = std::make_unique<triage_cases>();
    for (const auto& c : triage::bundled_test_cases()) cases->records.push_back(c.record);
    *out = cases.release();
    return TRIAGE_OK;
  });
}

size_t triage_cases_count(const triage_cases* cases) { return cases ? cases->records.size() : 0; }

const char* triage_cases_id(const triage_cases* cases, size_t index) {
  if (!cases || index >= cases->records.size()) return nullptr;
  return cases->records[index].case_id.c_str();
}

void triage_cases_free(triage_cases* cases) { delete cases; }

triage_status triage_cases_write_csv(const triage_cases* cases, const char* path) {
  return guarded([&] {
    if (!cases || !path) return fail(TRIAGE_ERR_ARGUMENT, "null argument");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) return fail(TRIAGE_ERR_IO, std::string("cannot write ") + path);
    out << triage::cases_to_csv(cases->records);
    return TRIAGE_OK;
  });
}

triage_status triage_predict_case(const triage_engine* engine, const triage_cases* cases, size_t index,
                                  int apply_deviation, double deviation_percent, triage_report** out) {
  return guarded([&] {
    if (!engine || !cases || !out) return fail(TRIAGE_ERR_ARGUMENT, "null argument");
    if (index >= cases->records.size()) {
      return fail(TRIAGE_ERR_ARGUMENT, "case index " + std::to_string(index + 1) + " is out of range (1-" +
                                           std::to_string(cases->records.size()) + ")");
    }
    return predict(engine, cases->records[index], apply_deviation, deviation_percent, out);
  });
}

triage_status triage_predict_json(const triage_engine* engine, const char* record_json, int apply_deviation,
                                  double deviation_percent, triage_report** out) {
  return guarded([&] {
    if (!engine || !record_json || !out) return fail(TRIAGE_ERR_ARGUMENT, "null argument");
    const auto record = triage::record_from_json(nlohmann::json::parse(record_json));
    return predict(engine, record, apply_deviation, deviation_percent, out);
  });
}

int triage_report_has_modified(const triage_report* report) {
  return report && report->report.modified.has_value() ? 1 : 0;
}

triage_status triage_report_probability(const triage_report* report, int modified, int complication,
                                        double* gbt_pct, double* ann_pct) {
  const auto* set = pick(report, modified);
  if (!set) return fail(TRIAGE_ERR_ARGUMENT, "no such report");
  if (complication < 0 || complication >= TRIAGE_COMPLICATION_COUNT) {
    return fail(TRIAGE_ERR_ARGUMENT, "complication index out of range");
  }
  const auto& p = set->by_complication[static_cast<std::size_t>(complication)];
  if (gbt_pct) *gbt_pct = p.gbt_pct;
  if (ann_pct) *ann_pct = p.ann_pct;
  return TRIAGE_OK;
}

triage_status triage_report_ranked(const triage_report* report, int modified, size_t rank, int* complication) {
  const auto* set = pick(report, modified);
  if (!set) return fail(TRIAGE_ERR_ARGUMENT, "no such report");
  if (rank >= triage::kComplicationCount || !complication) return fail(TRIAGE_ERR_ARGUMENT, "rank out of range");
  *complication = static_cast<int>(triage::index_of(set->ranking[rank]));
  return TRIAGE_OK;
}

triage_status triage_report_render(const triage_report* report, int format, const char* title, char** out) {
  return guarded([&] {
    if (!report || !out) return fail(TRIAGE_ERR_ARGUMENT, "null argument");
    if (format != TRIAGE_FORMAT_TABLE && format != TRIAGE_FORMAT_CSV) return fail(TRIAGE_ERR_ARGUMENT, "unknown format");
    const auto f = format == TRIAGE_FORMAT_CSV ? triage::RenderFormat::Csv : triage::RenderFormat::Table;
    *out = dup(triage::render_report(report->report, f, title ? title : "", report->deviation));
    return TRIAGE_OK;
  });
}

void triage_report_free(triage_report* report) { delete report; }

triage_status triage_server_create(const char* model_dir, triage_server** out) {
  return guarded([&] {
    if (!model_dir || !out) return fail(TRIAGE_ERR_ARGUMENT, "null argument");
    *out = new triage_server(model_dir);
    return TRIAGE_OK;
  });
}

triage_status triage_server_load(triage_server* server) {
  return guarded([&] {
    if (!server) return fail(TRIAGE_ERR_ARGUMENT, "null argument");
    if (!server->service.load()) return fail(TRIAGE_ERR_MODEL_LOAD, server->service.load_error());
    return TRIAGE_OK;
  });
}

triage_status triage_server_load_async(triage_server* server) {
  return guarded([&] {
    if (!server) return fail(TRIAGE_ERR_ARGUMENT, "null argument");
    server->service.load_async();
    return TRIAGE_OK;
  });
}

int triage_server_ready(const triage_server* server) { return server && server->service.ready() ? 1 : 0; }

triage_status triage_server_handle(const triage_server* server, const char* method, const char* path,
                                   const char* body, int* http_status, char** response_body) {
  return guarded([&] {
    if (!server || !method || !path || !http_status || !response_body) {
      return fail(TRIAGE_ERR_ARGUMENT, "null argument");
    }
    const auto reply = server->service.handle(method, path, body ? body : "");
    *http_status = reply.status;
    *response_body = dup(reply.body);
    return TRIAGE_OK;
  });
}

triage_status triage_server_listen(triage_server* server, const char* host, int port) {
  return guarded([&] {
    if (!server || !host) return fail(TRIAGE_ERR_ARGUMENT, "null argument");
    if (!server->service.listen(host, port)) {
      return fail(TRIAGE_ERR_IO, std::string("cannot bind ") + host + ":" + std::to_string(port));
    }
    return TRIAGE_OK;
  });
}

triage_status triage_server_start(triage_server* server, const char* host, int* port) {
  return guarded([&] {
    if (!server || !host || !port) return fail(TRIAGE_ERR_ARGUMENT, "null argument");
    const int p = server->service.start_background(host);
    if (p < 0) return fail(TRIAGE_ERR_IO, std::string("cannot bind ") + host);
    *port = p;
    return TRIAGE_OK;
  });
}

void triage_server_stop(triage_server* server) {
  if (server) server->service.stop();
}

void triage_server_free(triage_server* server) { delete server; }

}  // extern "C"
