#include <doctest.h>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sd/cli.hpp"
#include "sd/datasets.hpp"
#include "sd/io.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code;
  std::string err;
};

RunResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "sobolev-descent");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  std::ostringstream err, out;
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  const int code = sd::cli::main(static_cast<int>(args.size()), argv.data());
  std::cerr.rdbuf(old_err);
  std::cout.rdbuf(old_out);
  return {code, err.str()};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"teleport"}).code == 2);
  CHECK(run({"gauss1d", "--bogus"}).code == 2);
  CHECK(run({"gauss1d", "--mode", "quantum"}).code == 2);
  CHECK(run({"gauss1d", "--steps", "abc"}).code == 2);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"gauss1d", "--help"}).code == 0);
  CHECK(run({"--version"}).code == 0);
}

TEST_CASE("lambda = 0 is rejected with the contract in the message") {
  sdtest::TempDir dir("cli");
  const auto r = run({"gauss1d", "--lambda", "0", "--out", dir.path().string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("lambda must be > 0") != std::string::npos);
}

TEST_CASE("missing input files exit with 3") {
  sdtest::TempDir dir("cli");
  CHECK(run({"color", "--source", (dir.path() / "nope.png").string(), "--out", dir.path().string()}).code == 3);
  CHECK(run({"morph", "--target", (dir.path() / "nope.csv").string(), "--out", dir.path().string()}).code == 3);
  CHECK(run({"gauss1d", "--config", (dir.path() / "nope.ini").string()}).code == 2);
}

TEST_CASE("divergence exits with 4") {
  sdtest::TempDir dir("cli");
  const auto r = run({"gauss1d", "--eps", "1e308", "--steps", "50", "--n", "50",
                      "--out", dir.path().string()});
  CHECK(r.code == 4);
}

TEST_CASE("gauss1d outputs are reproducible, also from the manifest") {
  sdtest::TempDir dir("cli");
  const auto a = dir.path() / "a", b = dir.path() / "b", c = dir.path() / "c";
  const std::vector<std::string> common{"gauss1d", "--seed", "1", "--steps", "60", "--n", "200",
                                        "--snapshots", "0,30,final"};
  auto with_out = [&](const fs::path& out) {
    auto args = common;
    args.push_back("--out");
    args.push_back(out.string());
    return args;
  };
  REQUIRE(run(with_out(a)).code == 0);
  REQUIRE(run(with_out(b)).code == 0);
  REQUIRE(run({"gauss1d", "--config", (a / "manifest.ini").string(), "--out", c.string()}).code == 0);
  for (const char* f : {"trace.csv", "eval.csv", "kde_step0.csv", "kde_step30.csv", "kde_step60.csv",
                        "kde_bandwidth.csv", "final.csv"}) {
    CHECK_MESSAGE(sdtest::slurp(a / f) == sdtest::slurp(b / f), f);
    CHECK_MESSAGE(sdtest::slurp(a / f) == sdtest::slurp(c / f), f);
  }
  const auto trace = read_csv(a / "trace.csv");
  CHECK(trace.front() == std::vector<std::string>{"step", "t", "mmd2", "rksd2", "first_variation", "wall_ms"});
  CHECK(trace.size() == 62);
  const auto manifest = sdtest::slurp(a / "manifest.ini");
  CHECK(manifest.find("# experiment: gauss1d") != std::string::npos);
  CHECK(manifest.find("steps=60") != std::string::npos);
  CHECK(manifest.find("sigma=0.3") != std::string::npos);
  CHECK(manifest.find("kde_bandwidth_rule") != std::string::npos);
}

TEST_CASE("flags override the config file") {
  sdtest::TempDir dir("cli");
  {
    std::ofstream cfg(dir.path() / "preset.ini");
    cfg << "steps=5\nn=50\nout=\"" << (dir.path() / "x").string() << "\"\n";
  }
  REQUIRE(run({"gauss1d", "--config", (dir.path() / "preset.ini").string(), "--steps", "7"}).code == 0);
  const auto trace = read_csv(dir.path() / "x" / "trace.csv");
  CHECK(trace.back()[0] == "7");
  CHECK(read_csv(dir.path() / "x" / "final.csv").size() == 51);
}

TEST_CASE("neural mode writes the extended trace") {
  sdtest::TempDir dir("cli");
  REQUIRE(run({"gauss1d", "--mode", "neural", "--neural-steps", "4", "--warmup", "2", "--nc", "1",
               "--hidden", "8,8", "--n", "100", "--timing", "--out", dir.path().string()})
              .code == 0);
  const auto trace = read_csv(dir.path() / "trace.csv");
  CHECK(trace.front().size() == 9);
  CHECK(trace.front()[8] == "ehat");
  CHECK(trace.size() == 6);
  CHECK(trace[2][3] == "nan");
  CHECK(sd::parse_double(trace[2][5]) > 0.0);  // --timing records wall time
  CHECK(run({"gauss1d", "--mode", "neural", "--hidden", "8,x", "--out", dir.path().string()}).code == 2);
}

TEST_CASE("color transfer onto itself reproduces the source") {
  sdtest::TempDir dir("cli");
  const auto src = dir.path() / "src.png";
  sd::write_png(src, sd::builtin_image("forest", 12, 10));
  REQUIRE(run({"color", "--source", src.string(), "--target", src.string(), "--steps", "5", "--out",
               (dir.path() / "o").string()})
              .code == 0);
  CHECK(sd::read_png(dir.path() / "o" / "recolored.png") == sd::read_png(src));
  const auto sweep = read_csv(dir.path() / "o" / "bandwidth_sweep.csv");
  CHECK(sweep.front() == std::vector<std::string>{"sigma", "initial_mmd2", "final_mmd2"});
  CHECK(sweep.size() == 8);
  CHECK(sdtest::slurp(dir.path() / "o" / "manifest.ini").find("source_resolution: 12x10") !=
        std::string::npos);
}

TEST_CASE("morph: identical point sets barely move, snapshots are written") {
  sdtest::TempDir dir("cli");
  const auto pts = sd::shape_to_particles(sd::builtin_shape("ring", 32), 150, 1);
  sd::write_points_csv(dir.path() / "ring.csv", pts.points());
  const auto out = dir.path() / "o";
  REQUIRE(run({"morph", "--source", (dir.path() / "ring.csv").string(), "--target",
               (dir.path() / "ring.csv").string(), "--steps", "20", "--snapshots", "0,10,final",
               "--out", out.string()})
              .code == 0);
  const Eigen::MatrixXd last = sd::read_points_csv(out / "points_step20.csv");
  CHECK((last - pts.points()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(fs::exists(out / "points_step10.csv"));
  CHECK(fs::exists(out / "eval.csv"));
}

TEST_CASE("morph lambda sweep report is ordered by lambda") {
  sdtest::TempDir dir("cli");
  const auto out = dir.path() / "s";
  REQUIRE(run({"morph", "--n", "200", "--steps", "150", "--lambda-sweep", "1,1e-3,0.1", "--jobs", "2",
               "--out", out.string()})
              .code == 0);
  const auto rows = read_csv(out / "sweep.csv");
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == std::vector<std::string>{"lambda", "initial_mmd2", "final_mmd2", "steps_to_threshold"});
  CHECK(rows[1][0] == "0.001");
  CHECK(rows[2][0] == "0.1");
  CHECK(rows[3][0] == "1");
  for (const char* l : {"0.001", "0.1", "1"}) {
    CHECK(fs::exists(out / "sweep" / (std::string("lambda_") + l) / "trace.csv"));
  }
  CHECK(run({"morph", "--mode", "neural", "--lambda-sweep", "0.1", "--out", out.string()}).code == 2);
}

TEST_CASE("principal-dirs report columns") {
  sdtest::TempDir dir("cli");
  const auto out = dir.path() / "p";
  REQUIRE(run({"principal-dirs", "--n", "200", "--at-step", "10", "--grid", "5", "--directions", "3",
               "--analysis-lambda", "0.3", "--out", out.string()})
              .code == 0);
  const auto spectral = read_csv(out / "spectral.csv");
  REQUIRE(spectral.size() == 101);  // m = 100 by default
  for (std::size_t i = 1; i < spectral.size(); ++i) {
    const double eig = sd::parse_double(spectral[i][1]);
    const double a = sd::parse_double(spectral[i][2]);
    const double w = sd::parse_double(spectral[i][3]);
    const double coef = sd::parse_double(spectral[i][4]);
    CHECK(w == doctest::Approx(1.0 / (eig + 0.3)).epsilon(1e-14));
    CHECK(coef == doctest::Approx(a * w).epsilon(1e-14));
    if (i > 1) CHECK(eig <= sd::parse_double(spectral[i - 1][1]));
  }
  const auto fields = read_csv(out / "fields.csv");
  CHECK(fields.front() == std::vector<std::string>{"j", "x", "y", "dx", "dy", "ux", "uy"});
  CHECK(fields.size() == 1 + 3 * 25);
  CHECK(run({"principal-dirs", "--mode", "neural", "--out", out.string()}).code == 2);
}
