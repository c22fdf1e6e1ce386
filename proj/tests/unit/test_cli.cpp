#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"
#include "qrh/csv.hpp"
#include "qrh/parallel.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int status;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = qrh::cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qrh_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

const char* kFlatParams = "alpha = 0.51\nlambda = 1.2\na = 0\nb = 0.095\nc = 0.04\nz0 = 0.1\n";

}  // namespace

TEST_CASE("simulate with a = 0 has constant variance") {
  const fs::path dir = scratch("flat");
  write(dir / "p.txt", kFlatParams);
  const Result r = run({"simulate", "--params", (dir / "p.txt").string(), "--out", dir.string(), "--outer-paths", "4",
                        "--horizon", "0.05", "--max-paths", "4"});
  REQUIRE(r.status == 0);
  std::ifstream in(dir / "paths.csv");
  const qrh::CsvTable t = qrh::read_csv(in, "paths.csv");
  CHECK(t.header == std::vector<std::string>{"path", "t", "S", "Z", "V"});
  CHECK(t.rows.size() == 4 * 26);
  const std::size_t v = t.column("V");
  for (const auto& row : t.rows) CHECK(qrh::parse_double(row[v], "V") == 0.04);
  CHECK(slurp(dir / "paths.csv").rfind("# qrh simulate alpha=0.51", 0) == 0);
}

TEST_CASE("configuration errors") {
  const fs::path dir = scratch("errors");
  write(dir / "bad.txt", "alpha = 0.4\nlambda = 1.2\na = 0.3\nb = 0.1\nc = 0.01\nz0 = 0.1\n");
  Result r = run({"price", "--params", (dir / "bad.txt").string(), "--out", dir.string()});
  CHECK(r.status == qrh::cli::kConfigError);
  CHECK(r.err.find("error: status=2 module=model kind=config invariant=") != std::string::npos);

  r = run({"price", "--no-such-flag"});
  CHECK(r.status == qrh::cli::kConfigError);
  CHECK(r.err.rfind("error: status=2", 0) == 0);

  r = run({"calibrate", "--out", dir.string()});
  CHECK(r.status == qrh::cli::kConfigError);

  r = run({"price", "--expiries", "banana", "--out", dir.string()});
  CHECK(r.status == qrh::cli::kConfigError);

  r = run({"--help"});
  CHECK(r.status == 0);
}

TEST_CASE("numerical failures exit with status 3") {
  const fs::path dir = scratch("numerical");
  const Result r = run({"synth", "--out", dir.string(), "--outer-paths", "200", "--inner-paths", "4", "--expiries",
                        "7d", "--log-moneyness", "3.0", "--vix-expiries", "7d"});
  CHECK(r.status == qrh::cli::kNumericalError);
  CHECK(r.err.find("kind=numerical") != std::string::npos);
}

TEST_CASE("outputs are reproducible byte for byte") {
  const std::vector<std::string> base{"price",        "--instrument", "all",       "--outer-paths", "300",
                                      "--inner-paths", "20",          "--expiries", "14d,28d",      "--seed",
                                      "9"};
  auto with_out = [&](const fs::path& d) {
    auto a = base;
    a.push_back("--out");
    a.push_back(d.string());
    return a;
  };
  const fs::path d1 = scratch("repro1"), d2 = scratch("repro2"), d3 = scratch("repro3");
  REQUIRE(run(with_out(d1)).status == 0);
  REQUIRE(run(with_out(d2)).status == 0);
  qrh::set_worker_count(1);
  REQUIRE(run(with_out(d3)).status == 0);
  qrh::set_worker_count(0);
  const std::string a = slurp(d1 / "prices.csv");
  CHECK(a.size() > 100);
  CHECK(a == slurp(d2 / "prices.csv"));
  CHECK(a == slurp(d3 / "prices.csv"));
}

TEST_CASE("synth then calibrate round trip") {
  const fs::path dir = scratch("roundtrip");
  const std::vector<std::string> mc{"--outer-paths", "2000", "--inner-paths", "10", "--seed", "4"};
  std::vector<std::string> synth{"synth",           "--out",          dir.string(), "--expiries", "14d,28d",
                                 "--log-moneyness", "-0.04:0.04:0.02", "--vix-expiries", "14d"};
  synth.insert(synth.end(), mc.begin(), mc.end());
  REQUIRE(run(synth).status == 0);
  std::vector<std::string> cal{"calibrate", "--out",       dir.string(), "--data", (dir / "smiles.csv").string(),
                               "--grid-points", "1",        "--grid-rounds", "1", "--expiries", "14d"};
  cal.insert(cal.end(), mc.begin(), mc.end());
  const Result r = run(cal);
  REQUIRE(r.status == 0);
  const std::string report = slurp(dir / "calibration_report.txt");
  CHECK(report.find("objective = 0\n") != std::string::npos);
  CHECK(report.find("valid = true") != std::string::npos);
  CHECK(fs::exists(dir / "residuals.csv"));
  CHECK(fs::exists(dir / "trace.csv"));
}

TEST_CASE("smile and VIX futures commands") {
  const fs::path dir = scratch("smile");
  Result r = run({"smile", "--out", dir.string(), "--outer-paths", "400", "--inner-paths", "10", "--expiries", "2w",
                  "--vix-expiries", "2w"});
  REQUIRE(r.status == 0);
  CHECK(fs::exists(dir / "smile_spx_T0.038356164383561646.csv"));
  r = run({"vix-futures", "--out", dir.string(), "--outer-paths", "50", "--inner-paths", "10", "--expiries", "0,7d"});
  REQUIRE(r.status == 0);
  std::ifstream in(dir / "vix_futures.csv");
  const qrh::CsvTable t = qrh::read_csv(in, "vix_futures.csv");
  CHECK(t.rows.size() == 2);
}
