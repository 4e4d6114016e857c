#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "triage/predictor.hpp"
#include "triage/preprocess.hpp"
#include "triage/render.hpp"
#include "triage/synthgen.hpp"
#include "triage/testcases.hpp"

using namespace triage;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args, const std::string& input = "") {
  const auto in = fs::temp_directory_path() / ("triage_cli_in_" + std::to_string(::getpid()));
  std::ofstream(in) << input;
  const std::string cmd = std::string("'") + TRIAGE_CLI + "' " + args + " < '" + in.string() + "' 2>/dev/null";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

const std::string models = std::string("--models '") + SEED42_MODELS + "'";

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("triage_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("interactive session re-prompts on bad input and ends on no") {
  const auto r = cli("demonstrate " + models, "\n0\n1\nperhaps\nno\nyes\n3\nyes\nlots\n20\nno\n");
  CHECK(r.code == 0);
  CHECK(r.out.find("Loaded 6 test cases:") != std::string::npos);
  CHECK(r.out.find("Please enter a number between 1 and 6.") != std::string::npos);
  CHECK(r.out.find("Please answer yes or no.") != std::string::npos);
  CHECK(r.out.find("Case 1/6: usecase-1") != std::string::npos);
  CHECK(r.out.find("Case 3/6: usecase-3") != std::string::npos);
  CHECK(r.out.find("Modified (+20.00%)") != std::string::npos);
}

TEST_CASE("end of input leaves the session cleanly") {
  CHECK(cli("demonstrate " + models, "\n2\n").code == 0);
  CHECK(cli("demonstrate " + models, "").code == 0);
}

TEST_CASE("csv output matches the engine") {
  const auto r = cli("demonstrate " + models + " --case 1 --format csv");
  REQUIRE(r.code == 0);
  const auto engine = PredictionEngine::load(SEED42_MODELS);
  const auto p = engine->predict(bundled_test_cases()[0].record).baseline;
  const std::string first = "1," + std::string(key_name(p.ranking[0])) + "," +
                            format_pct(p.at(p.ranking[0]).gbt_pct) + "," + format_pct(p.at(p.ranking[0]).ann_pct);
  CHECK(r.out.find("rank,complication,gbt_pct,ann_pct\n" + first + "\n") != std::string::npos);
}

TEST_CASE("deviation accepts percent signs and a leading plus") {
  const auto a = cli("demonstrate " + models + " --case 3 --deviation +20%");
  const auto b = cli("demonstrate " + models + " --case 3 --modify yes --deviation 20");
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(cli("demonstrate " + models + " --case 3 --deviation 301").code == 2);
}

TEST_CASE("case file, export and evaluate") {
  const auto cases = scratch() / "cases.csv";
  REQUIRE(cli("export-cases --out '" + cases.string() + "'").code == 0);
  CHECK(read_cases_csv(cases).size() == 6);
  const auto r = cli("demonstrate " + models + " --file '" + cases.string() + "' --case 2 --modify no");
  CHECK(r.code == 0);
  CHECK(r.out.rfind("Case 2/6: usecase-2\n", 0) == 0);

  const auto data = scratch() / "data.csv";
  REQUIRE(cli("generate --seed 5 --records 300 --out '" + data.string() + "'").code == 0);
  const auto e = cli("evaluate " + models + " --dataset '" + data.string() + "'");
  CHECK(e.code == 0);
  CHECK(e.out.rfind("Complication", 0) == 0);
  CHECK(cli("evaluate " + models + " --dataset '" + (scratch() / "none.csv").string() + "'").code == 2);
}

TEST_CASE("seed-42 models rank a quiet record low and agree on use case 1") {
  const auto engine = PredictionEngine::load(SEED42_MODELS);
  PatientRecord quiet = bundled_test_cases()[0].record;
  quiet.flags = {};
  quiet.vitals.respiratory_rate = 16;
  quiet.vitals.systolic_bp = 120;
  quiet.vitals.diastolic_bp = 80;
  quiet.vitals.mean_arterial_pressure = derive_map(120, 80);
  quiet.vitals.pulse_rate = 75;
  quiet.vitals.blood_glucose = 100;
  quiet.vitals.spo2 = 98;
  quiet.vitals.body_temperature = 37;
  quiet.vitals.gcs_total = 15;
  const auto p = engine->predict(quiet).baseline;
  for (const auto& c : p.by_complication) {
    CHECK(c.gbt_pct < 50.0);
    CHECK(c.ann_pct < 50.0);
  }
  const auto uc1 = engine->predict(bundled_test_cases()[0].record).baseline;
  for (auto c : kAllComplications) {
    if (c == Complication::Cardiovascular) continue;
    CHECK(uc1.at(Complication::Cardiovascular).ann_pct > uc1.at(c).ann_pct);
  }
}
