#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dephasim/constants.hpp"
#include "dephasim/io.hpp"

// End-to-end checks of the command-line tool run as a subprocess.

using namespace dephasim;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int code;
  std::string output;  // stdout + stderr combined
};

fs::path tmp(const std::string& name) { return fs::temp_directory_path() / name; }

CmdResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  static int counter = 0;
  const fs::path capture = tmp("dephasim_cli_" + std::to_string(counter++) + ".log");
  const std::string cmd =
      env_prefix + DEPHASIM_BIN + " " + args + " >" + capture.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  std::ifstream in(capture);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, double> read_kv(const fs::path& p) {
  std::map<std::string, double> kv;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = std::strtod(line.c_str() + eq + 1, nullptr);
  }
  return kv;
}

std::string fixture(const char* name) { return (fs::path(DEPHASIM_FIXTURES) / name).string(); }

fs::path write_file(const std::string& name, const std::string& content) {
  const fs::path p = tmp(name);
  std::ofstream out(p);
  out << content;
  return p;
}

// Small scenario used by the mirror test; `sequence_extra` lands in [sequence].
std::string mirror_config(const std::string& sequence_extra) {
  return "[trap]\n"
         "depth_mk = 1.0\n"
         "[ensemble]\n"
         "t2star_ms = 4.4\n"
         "atoms = 25\n"
         "seed = 3\n"
         "[sequence]\n" +
         sequence_extra +
         "delta_synth_hz = -475.56\n"
         "delta_b_hz = 412.0\n"
         "phase_rad = 0.0\n"
         "t_start_ms = 0\n"
         "t_stop_ms = 5\n"
         "t_points = 26\n"
         "[detection]\n"
         "a = 0.287\n"
         "b = 0.305\n";
}

}  // namespace

TEST_CASE("simulate is deterministic and reports the trap numbers") {
  const fs::path a = tmp("sim_a.csv"), b = tmp("sim_b.csv");
  const CmdResult r1 =
      run_cli("simulate --config " + fixture("ramsey_1mk.conf") + " --out " + a.string());
  REQUIRE(r1.code == 0);
  CHECK(r1.output.find("delta0/2pi = -3021.31") != std::string::npos);
  CHECK(r1.output.find("fringe detuning/2pi = 2133.75") != std::string::npos);
  const CmdResult r2 =
      run_cli("simulate --config " + fixture("ramsey_1mk.conf") + " --out " + b.string());
  REQUIRE(r2.code == 0);
  CHECK(slurp(a) == slurp(b));  // byte-identical repeat run
}

TEST_CASE("seed precedence: flag beats environment beats config") {
  const std::string base = "simulate --config " + fixture("ramsey_1mk.conf") + " --out ";
  const fs::path flag7 = tmp("seed_flag7.csv"), env7 = tmp("seed_env7.csv"),
                 both = tmp("seed_both.csv"), cfg = tmp("seed_cfg.csv"),
                 flag42 = tmp("seed_flag42.csv"), flag8 = tmp("seed_flag8.csv");
  REQUIRE(run_cli(base + flag7.string() + " --seed 7").code == 0);
  REQUIRE(run_cli(base + env7.string(), "DEPHASIM_SEED=7 ").code == 0);
  REQUIRE(run_cli(base + both.string() + " --seed 7", "DEPHASIM_SEED=99 ").code == 0);
  CHECK(slurp(flag7) == slurp(env7));
  CHECK(slurp(flag7) == slurp(both));
  // without flag or environment the config seed (42) applies
  REQUIRE(run_cli(base + cfg.string()).code == 0);
  REQUIRE(run_cli(base + flag42.string() + " --seed 42").code == 0);
  CHECK(slurp(cfg) == slurp(flag42));
  REQUIRE(run_cli(base + flag8.string() + " --seed 8").code == 0);
  CHECK(slurp(flag7) != slurp(flag8));
}

TEST_CASE("bad inputs exit with the input-error code") {
  CHECK(run_cli("simulate --config /no/such/file.conf --out " + tmp("x.csv").string()).code == 2);
  const fs::path bad = write_file("cli_bad.conf", "[trap]\ndepth_mk = 1.0\nwhat = 1\n");
  CHECK(run_cli("simulate --config " + bad.string() + " --out " + tmp("x.csv").string()).code == 2);
  CHECK(run_cli("fit --data " + fixture("visibility_1mk.csv") + " --model sine").code == 2);
  // echo model without the mandatory pulse time
  CHECK(run_cli("fit --data " + fixture("visibility_1mk.csv") + " --model echo").code == 2);
  CHECK(run_cli("nonsense-subcommand").code == 2);
  // averaging time that is not a multiple of the sample interval
  CHECK(run_cli("allan --series " + fixture("intensity_monitor.csv") + " --tau-ms 1.5").code == 2);
}

TEST_CASE("an immediate refocusing pulse mirrors the fringe") {
  const fs::path rc = write_file("cli_mirror_ramsey.conf", mirror_config("kind = ramsey\n"));
  const fs::path ec =
      write_file("cli_mirror_echo.conf", mirror_config("kind = echo\ntau_pi_ms = 0.0\n"));
  const fs::path ro = tmp("mirror_ramsey.csv"), eo = tmp("mirror_echo.csv");
  REQUIRE(run_cli("simulate --config " + rc.string() + " --out " + ro.string()).code == 0);
  REQUIRE(run_cli("simulate --config " + ec.string() + " --out " + eo.string()).code == 0);
  const CsvTable rt = read_csv(ro), et = read_csv(eo);
  REQUIRE(rt.rows.size() == et.rows.size());
  const std::size_t ac = *rt.column("p3_analytic");
  const std::size_t mc = *rt.column("p3_montecarlo");
  for (std::size_t i = 0; i < rt.rows.size(); ++i) {
    // fringe flips sign, so the sum collapses to twice the detection offset
    CHECK(rt.rows[i][ac] + et.rows[i][ac] == doctest::Approx(2.0 * 0.305).epsilon(1e-9));
    CHECK(rt.rows[i][mc] + et.rows[i][mc] == doctest::Approx(2.0 * 0.305).epsilon(1e-9));
  }
}

TEST_CASE("fringe zero crossings run at the synthesized detuning") {
  const fs::path out = tmp("crossings.csv");
  REQUIRE(
      run_cli("simulate --config " + fixture("ramsey_1mk.conf") + " --out " + out.string()).code ==
      0);
  const CsvTable t = read_csv(out);
  const std::size_t tc = *t.column("t_s"), yc = *t.column("p3_analytic");
  std::vector<double> crossings;
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    const double y0 = t.rows[i - 1][yc] - 0.305, y1 = t.rows[i][yc] - 0.305;
    if ((y0 < 0.0) != (y1 < 0.0)) {
      const double f = y0 / (y0 - y1);
      crossings.push_back(t.rows[i - 1][tc] + f * (t.rows[i][tc] - t.rows[i - 1][tc]));
    }
  }
  REQUIRE(crossings.size() >= 40);
  CHECK(crossings.size() <= 43);
  const double mean_spacing =
      (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
  // half the fringe period, allowing a few percent for the envelope phase drag
  CHECK(mean_spacing == doctest::Approx(0.5 / 2133.7498).epsilon(0.04));
}

TEST_CASE("simulate then fit closes the loop on the fringe parameters") {
  const fs::path sim = tmp("loop_sim.csv"), rep = tmp("loop_fit.txt");
  REQUIRE(
      run_cli("simulate --config " + fixture("ramsey_1mk.conf") + " --out " + sim.string()).code ==
      0);
  const CmdResult fit =
      run_cli("fit --data " + sim.string() + " --model ramsey --out " + rep.string());
  REQUIRE(fit.code == 0);
  CHECK(fit.output.find("converged") != std::string::npos);
  const auto kv = read_kv(rep);
  REQUIRE(kv.count("delta_sum.value"));
  CHECK(kv.at("converged") == 1.0);
  CHECK(kv.at("delta_sum.value") / kTwoPi == doctest::Approx(2133.7498).epsilon(1e-4));
  CHECK(kv.at("t2star.value") == doctest::Approx(4.4e-3).epsilon(1e-3));
  CHECK(kv.at("amplitude.value") == doctest::Approx(0.287).epsilon(1e-3));
  CHECK(kv.at("visibility.value") == doctest::Approx(0.287 / 0.305).epsilon(1e-3));

  // an initial-guess override on the same data still lands on the optimum
  const fs::path rep2 = tmp("loop_fit2.txt");
  REQUIRE(run_cli("fit --data " + sim.string() + " --model ramsey --init delta_sum=14000" +
                  " --out " + rep2.string())
              .code == 0);
  CHECK(read_kv(rep2).at("delta_sum.value") / kTwoPi == doctest::Approx(2133.7498).epsilon(1e-4));

  // the noisy Monte Carlo column fits too, just less tightly
  const fs::path rep3 = tmp("loop_fit3.txt");
  REQUIRE(run_cli("fit --data " + sim.string() + " --model ramsey --column p3_montecarlo" +
                  " --out " + rep3.string())
              .code == 0);
  CHECK(read_kv(rep3).at("delta_sum.value") / kTwoPi == doctest::Approx(2133.7498).epsilon(1e-2));
}

TEST_CASE("visibility fit reports the irreversible decay time") {
  const fs::path rep = tmp("vis_fit.txt");
  const CmdResult r = run_cli("fit --data " + fixture("visibility_1mk.csv") +
                              " --model visibility --out " + rep.string());
  REQUIRE(r.code == 0);
  CHECK(r.output.find("T2'") != std::string::npos);
  const auto kv = read_kv(rep);
  // the fixture decays with sigma near 2 pi * 22 Hz
  CHECK(kv.at("sigma.value") / kTwoPi == doctest::Approx(22.0).epsilon(0.02));
  CHECK(kv.at("t2prime.value") ==
        doctest::Approx(std::sqrt(2.0) / kv.at("sigma.value")).epsilon(1e-9));
}

TEST_CASE("budget subcommand renders the table and machine outputs") {
  const fs::path out = tmp("budget.csv"), vis = tmp("budget_vis.csv");
  const CmdResult r = run_cli("budget --config " + fixture("budget_1mk.conf") + " --out " +
                              out.string() + " --vis-out " + vis.string());
  REQUIRE(r.code == 0);
  CHECK(r.output.find("pointing worst") != std::string::npos);
  CHECK(r.output.find("total (worst)") != std::string::npos);

  // machine CSV: mechanism,sigma_hz,source,ref_hz plus quadrature totals
  std::map<std::string, std::vector<std::string>> rows;
  std::stringstream ss(slurp(out));
  std::string line;
  while (std::getline(ss, line)) {
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (!fields.empty()) rows[fields[0]] = fields;
  }
  REQUIRE(rows.count("heating"));
  CHECK(std::strtod(rows["heating"][1].c_str(), nullptr) == doctest::Approx(16.74).epsilon(2e-3));
  CHECK(rows["heating"][2] == "model");
  CHECK(std::strtod(rows["heating"][3].c_str(), nullptr) == doctest::Approx(5.3));
  REQUIRE(rows.count("intensity"));
  CHECK(std::strtod(rows["intensity"][1].c_str(), nullptr) == doctest::Approx(5.9).epsilon(1e-3));
  CHECK(rows["intensity"][2] == "measured");
  REQUIRE(rows.count("total best"));
  REQUIRE(rows.count("total worst"));
  CHECK(std::strtod(rows["total best"][1].c_str(), nullptr) ==
        doctest::Approx(21.12).epsilon(2e-3));
  CHECK(std::strtod(rows["total worst"][1].c_str(), nullptr) ==
        doctest::Approx(28.29).epsilon(2e-3));

  // visibility overlay: 121 points, starts at 1, strictly decreasing
  const CsvTable vt = read_csv(vis);
  REQUIRE(vt.rows.size() == 121);
  const std::size_t vcol = *vt.column("v");
  CHECK(vt.rows[0][vcol] == 1.0);
  for (std::size_t i = 1; i < vt.rows.size(); ++i) CHECK(vt.rows[i][vcol] < vt.rows[i - 1][vcol]);
  CHECK(vt.rows[1][*vt.column("total_time_s")] ==
        doctest::Approx(2.0 * vt.rows[1][*vt.column("tau_pi_s")]).epsilon(1e-12));
}

TEST_CASE("allan subcommand") {
  // a constant series has zero relative fluctuation at every averaging time
  std::ostringstream flat;
  flat << "time_s,value\n";
  for (int i = 0; i < 64; ++i) flat << format_g17(i * 1e-3) << ",5.0\n";
  const fs::path series = write_file("cli_flat_series.csv", flat.str());
  const fs::path out = tmp("allan_flat.csv");
  REQUIRE(run_cli("allan --series " + series.string() + " --out " + out.string()).code == 0);
  const CsvTable t = read_csv(out);
  REQUIRE(t.rows.size() == 5);  // windows of 1,2,4,8,16 samples keep >= 4 windows
  for (const auto& row : t.rows) CHECK(row[1] == 0.0);
  CHECK(t.rows[3][0] == doctest::Approx(8e-3).epsilon(1e-9));

  // explicit averaging times on the monitor fixture, stdout route
  const CmdResult r =
      run_cli("allan --series " + fixture("intensity_monitor.csv") + " --tau-ms 1,2,4");
  REQUIRE(r.code == 0);
  CHECK(r.output.find("tau_s,sigma_a") != std::string::npos);
  std::stringstream ss(r.output);
  std::string line;
  std::getline(ss, line);  // header
  REQUIRE(std::getline(ss, line));
  const double sigma1 = std::strtod(line.substr(line.find(',') + 1).c_str(), nullptr);
  const TimeSeries monitor = load_timeseries(fixture("intensity_monitor.csv"));
  CHECK(sigma1 == doctest::Approx(allan_deviation(monitor, 1e-3)).epsilon(1e-12));
}
