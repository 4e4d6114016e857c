// Command-line front end. Uses only the C interface.

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "triage/triage.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;  // usage, input or data errors
constexpr int kExitModel = 3;  // models missing or incompatible

int exit_code(triage_status s) {
  switch (s) {
    case TRIAGE_OK: return kExitOk;
    case TRIAGE_ERR_MODEL_LOAD:
    case TRIAGE_ERR_VERSION: return kExitModel;
    case TRIAGE_ERR_INTERNAL: return 1;
    default: return kExitUsage;
  }
}

int report_error(triage_status s) {
  std::cerr << "error: " << triage_last_error();
  const std::string field = triage_last_error_field();
  if (!field.empty()) std::cerr << " (field: " << field << ")";
  std::cerr << "\n";
  return exit_code(s);
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_percent(std::string text) {
  text = trim(text);
  if (!text.empty() && text.back() == '%') text.pop_back();
  if (!text.empty() && text.front() == '+') text.erase(0, 1);
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::optional<bool> parse_yes_no(std::string text) {
  text = trim(text);
  for (auto& ch : text) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (text == "yes" || text == "y") return true;
  if (text == "no" || text == "n") return false;
  return std::nullopt;
}

struct Handles {
  triage_engine* engine = nullptr;
  triage_cases* cases = nullptr;
  ~Handles() {
    triage_engine_free(engine);
    triage_cases_free(cases);
  }
};

struct DemoOptions {
  std::string models;
  std::string file;
  int case_number = 0;
  std::string modify;
  std::string deviation;
  std::string format = "table";
};

triage_status load_cases(const std::string& file, triage_cases** out) {
  return file.empty() ? triage_cases_bundled(out) : triage_cases_load_csv(file.c_str(), out);
}

int show(const Handles& h, std::size_t index, bool modify, double percent, int format) {
  triage_report* report = nullptr;
  auto s = triage_predict_case(h.engine, h.cases, index, modify ? 1 : 0, percent, &report);
  if (s != TRIAGE_OK) return report_error(s);
  const std::string title = "Case " + std::to_string(index + 1) + "/" + std::to_string(triage_cases_count(h.cases)) +
                            ": " + triage_cases_id(h.cases, index);
  char* text = nullptr;
  s = triage_report_render(report, format, title.c_str(), &text);
  triage_report_free(report);
  if (s != TRIAGE_OK) return report_error(s);
  std::cout << text;
  triage_string_free(text);
  return kExitOk;
}

int demonstrate_scripted(const DemoOptions& o, int format) {
  bool modify = false;
  if (!o.modify.empty()) {
    const auto m = parse_yes_no(o.modify);
    if (!m) {
      std::cerr << "error: --modify expects yes or no, got '" << o.modify << "'\n";
      return kExitUsage;
    }
    modify = *m;
  }
  double percent = 0.0;
  if (!o.deviation.empty()) {
    const auto p = parse_percent(o.deviation);
    if (!p) {
      std::cerr << "error: --deviation expects a number, got '" << o.deviation << "'\n";
      return kExitUsage;
    }
    percent = *p;
    if (o.modify.empty()) modify = true;
  } else if (modify) {
    std::cerr << "error: --modify yes requires --deviation\n";
    return kExitUsage;
  }

  Handles h;
  auto s = load_cases(o.file, &h.cases);
  if (s != TRIAGE_OK) return report_error(s);
  const auto n = triage_cases_count(h.cases);
  if (o.case_number < 1 || static_cast<std::size_t>(o.case_number) > n) {
    std::cerr << "error: --case must lie between 1 and " << n << "\n";
    return kExitUsage;
  }
  s = triage_engine_load(o.models.c_str(), &h.engine);
  if (s != TRIAGE_OK) return report_error(s);
  return show(h, static_cast<std::size_t>(o.case_number - 1), modify, percent, format);
}

std::optional<std::string> prompt(const std::string& question) {
  std::cout << question << std::flush;
  std::string line;
  if (!std::getline(std::cin, line)) {
    std::cout << "\n";
    return std::nullopt;
  }
  return trim(line);
}

int demonstrate_interactive(const DemoOptions& o, int format) {
  Handles h;
  auto s = triage_engine_load(o.models.c_str(), &h.engine);
  if (s != TRIAGE_OK) return report_error(s);

  std::string file = o.file;
  if (file.empty()) {
    const auto answer = prompt("Test-case file (empty for the bundled cases): ");
    if (!answer) return kExitOk;
    file = *answer;
  }
  s = load_cases(file, &h.cases);
  if (s != TRIAGE_OK) return report_error(s);
  const auto n = triage_cases_count(h.cases);
  std::cout << "Loaded " << n << " test cases:\n";
  for (std::size_t i = 0; i < n; ++i) std::cout << "  " << i + 1 << ". " << triage_cases_id(h.cases, i) << "\n";

  for (;;) {
    std::size_t index = 0;
    for (;;) {
      const auto answer = prompt("Select a test case (1-" + std::to_string(n) + "): ");
      if (!answer) return kExitOk;
      int k = 0;
      const auto [ptr, ec] = std::from_chars(answer->data(), answer->data() + answer->size(), k);
      if (ec == std::errc() && ptr == answer->data() + answer->size() && k >= 1 && static_cast<std::size_t>(k) <= n) {
        index = static_cast<std::size_t>(k - 1);
        break;
      }
      std::cout << "Please enter a number between 1 and " << n << ".\n";
    }
    bool modify = false;
    for (;;) {
      const auto answer = prompt("Modify health vitals? (yes/no): ");
      if (!answer) return kExitOk;
      if (const auto m = parse_yes_no(*answer)) {
        modify = *m;
        break;
      }
      std::cout << "Please answer yes or no.\n";
    }
    double percent = 0.0;
    while (modify) {
      const auto answer = prompt("Deviation in percent (-90 to 300): ");
      if (!answer) return kExitOk;
      const auto p = parse_percent(*answer);
      if (p && *p >= -90.0 && *p <= 300.0) {
        percent = *p;
        break;
      }
      std::cout << "Please enter a number between -90 and 300.\n";
    }
    const int rc = show(h, index, modify, percent, format);
    if (rc != kExitOk) return rc;
    for (;;) {
      const auto answer = prompt("Another case? (yes/no): ");
      if (!answer) return kExitOk;
      if (const auto m = parse_yes_no(*answer)) {
        if (!*m) return kExitOk;
        break;
      }
      std::cout << "Please answer yes or no.\n";
    }
  }
}

void print_progress(const char* line, void*) { std::cerr << line << "\n"; }

int finish_training(triage_status s, char* table) {
  if (s != TRIAGE_OK) return report_error(s);
  std::cout << table;
  triage_string_free(table);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rescue triage: complication probabilities from patient records"};
  app.require_subcommand(1);

  DemoOptions demo;
  demo.models = env_or("TRIAGE_MODEL_DIR", "models");
  auto* demo_cmd = app.add_subcommand("demonstrate", "Rank complications for a test case");
  demo_cmd->add_option("--models", demo.models, "Model directory")->capture_default_str();
  demo_cmd->add_option("--file", demo.file, "Test-case CSV (default: bundled cases)");
  demo_cmd->add_option("--case", demo.case_number, "1-based case number; runs without prompts");
  demo_cmd->add_option("--modify", demo.modify, "yes or no");
  demo_cmd->add_option("--deviation", demo.deviation, "Vital deviation in percent, -90 to 300");
  demo_cmd->add_option("--format", demo.format, "table or csv")->check(CLI::IsMember({"table", "csv"}))->capture_default_str();

  std::optional<std::uint64_t> synthetic_seed;
  std::string dataset;
  std::size_t records = 10000;
  std::string out_dir;
  triage_train_options topts;
  triage_train_options_init(&topts);
  std::string tune = "none";
  bool no_select = false;
  bool quiet = false;
  auto* train_cmd = app.add_subcommand("train", "Train and save the complication models");
  auto* syn_opt = train_cmd->add_option("--synthetic", synthetic_seed, "Generate training data with this seed");
  auto* data_opt = train_cmd->add_option("--dataset", dataset, "Labeled dataset CSV");
  syn_opt->excludes(data_opt);
  train_cmd->add_option("--records", records, "Synthetic record count")->capture_default_str();
  train_cmd->add_option("--out", out_dir, "Output model directory")->required();
  train_cmd->add_option("--seed", topts.seed, "Split and model seed")->capture_default_str();
  train_cmd->add_option("--k", topts.k_folds, "Cross-validation folds")->capture_default_str();
  train_cmd->add_option("--tune", tune, "none, grid, random or halving")
      ->check(CLI::IsMember({"none", "grid", "random", "halving"}))
      ->capture_default_str();
  train_cmd->add_option("--budget", topts.budget, "Configurations for random search and halving")->capture_default_str();
  train_cmd->add_option("--rfecv-step", topts.rfecv_step, "Features removed per RFECV step")->capture_default_str();
  train_cmd->add_flag("--no-select", no_select, "Skip feature selection");
  train_cmd->add_flag("--quiet", quiet, "No progress output");

  std::uint64_t gen_seed = 42;
  std::size_t gen_records = 10000;
  std::size_t noise = 0;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("generate", "Write a synthetic labeled dataset");
  gen_cmd->add_option("--seed", gen_seed)->capture_default_str();
  gen_cmd->add_option("--records", gen_records)->capture_default_str();
  gen_cmd->add_option("--noise", noise, "Label-independent distractor columns")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "Output CSV")->required();

  std::string eval_models = env_or("TRIAGE_MODEL_DIR", "models");
  std::string eval_dataset;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score saved models on a labeled dataset");
  eval_cmd->add_option("--models", eval_models)->capture_default_str();
  eval_cmd->add_option("--dataset", eval_dataset, "Labeled dataset CSV")->required();

  std::string serve_models = env_or("TRIAGE_MODEL_DIR", "models");
  std::string host = env_or("TRIAGE_HOST", "127.0.0.1");
  int port = std::atoi(env_or("TRIAGE_PORT", "8080").c_str());
  auto* serve_cmd = app.add_subcommand("serve", "Serve the JSON API");
  serve_cmd->add_option("--models", serve_models)->capture_default_str();
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--port", port)->capture_default_str();

  std::string cases_out;
  auto* cases_cmd = app.add_subcommand("export-cases", "Write the bundled test cases as CSV");
  cases_cmd->add_option("--out", cases_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*demo_cmd) {
    const int format = demo.format == "csv" ? TRIAGE_FORMAT_CSV : TRIAGE_FORMAT_TABLE;
    if (demo.case_number != 0 || demo_cmd->count("--case") > 0) return demonstrate_scripted(demo, format);
    if (!demo.modify.empty() || !demo.deviation.empty()) {
      std::cerr << "error: --modify and --deviation require --case\n";
      return kExitUsage;
    }
    return demonstrate_interactive(demo, format);
  }

  if (*train_cmd) {
    if (!synthetic_seed && dataset.empty()) {
      std::cerr << "error: train needs --synthetic SEED or --dataset PATH\n";
      return kExitUsage;
    }
    topts.feature_selection = no_select ? 0 : 1;
    topts.tuning = tune == "grid" ? TRIAGE_TUNE_GRID
                   : tune == "random" ? TRIAGE_TUNE_RANDOM
                   : tune == "halving" ? TRIAGE_TUNE_HALVING
                                       : TRIAGE_TUNE_NONE;
    if (!quiet) topts.progress = print_progress;
    char* table = nullptr;
    const auto s = synthetic_seed
                       ? triage_train_synthetic(*synthetic_seed, records, &topts, out_dir.c_str(), &table)
                       : triage_train_dataset(dataset.c_str(), &topts, out_dir.c_str(), &table);
    return finish_training(s, table);
  }

  if (*gen_cmd) {
    const auto s = triage_generate_csv(gen_seed, gen_records, noise, gen_out.c_str());
    return s == TRIAGE_OK ? kExitOk : report_error(s);
  }

  if (*eval_cmd) {
    triage_engine* engine = nullptr;
    auto s = triage_engine_load(eval_models.c_str(), &engine);
    if (s != TRIAGE_OK) return report_error(s);
    char* table = nullptr;
    s = triage_engine_evaluate(engine, eval_dataset.c_str(), &table);
    triage_engine_free(engine);
    return finish_training(s, table);
  }

  if (*serve_cmd) {
    triage_server* server = nullptr;
    auto s = triage_server_create(serve_models.c_str(), &server);
    if (s != TRIAGE_OK) return report_error(s);
    triage_server_load_async(server);
    std::cerr << "serving on http://" << host << ":" << port << "/api/v1\n";
    s = triage_server_listen(server, host.c_str(), port);
    triage_server_free(server);
    return s == TRIAGE_OK ? kExitOk : report_error(s);
  }

  if (*cases_cmd) {
    triage_cases* cases = nullptr;
    auto s = triage_cases_bundled(&cases);
    if (s == TRIAGE_OK) s = triage_cases_write_csv(cases, cases_out.c_str());
    triage_cases_free(cases);
    return s == TRIAGE_OK ? kExitOk : report_error(s);
  }
  return kExitUsage;
}
