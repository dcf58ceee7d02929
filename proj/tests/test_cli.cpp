#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <sys/wait.h>

#include "rankselect/cli.hpp"
#include "rankselect/error.hpp"
#include "support.hpp"

using namespace rankselect;
namespace fs = std::filesystem;
using testsupport::data_with_spectrum;
using testsupport::gaussian_matrix;
using testsupport::random_orthonormal;
using testsupport::scratch_dir;
using testsupport::slurp;
using testsupport::write_matrix_csv;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run_tool(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + RANKSELECT_TOOL + "\" " + args + " >\"" +
                          out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WEXITSTATUS(status), slurp(out), slurp(err)};
}

cli::Json read_json(const fs::path& p) { return cli::Json::parse(slurp(p)); }

// n x p data with a few strong spikes along random directions
Matrix spiked_data(int n, int p, const std::vector<double>& spikes, std::mt19937_64& rng) {
  const auto k = static_cast<Eigen::Index>(spikes.size());
  const Matrix dirs = random_orthonormal(p, k, rng);
  Matrix x = gaussian_matrix(n, p, rng);
  const Matrix f = gaussian_matrix(n, k, rng);
  for (Eigen::Index j = 0; j < k; ++j) {
    x += std::sqrt(spikes[j] - 1.0) * f.col(j) * dirs.col(j).transpose();
  }
  return x;
}

}  // namespace

TEST_CASE("csv parsing") {
  const auto t = cli::parse_csv("a,b\n1,2\n3,4.5\n\n", "t.csv");
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.values.rows() == 2);
  CHECK(t.values(1, 1) == 4.5);

  const auto no_header = cli::parse_csv("1,2\r\n-3e2, +4\r\n");
  CHECK(no_header.header.empty());
  CHECK(no_header.values(1, 0) == -300.0);
  CHECK(no_header.values(1, 1) == 4.0);

  const auto quoted = cli::parse_csv("\"x\",\"y\"\n\"1\",2\n");
  CHECK(quoted.header == std::vector<std::string>{"x", "y"});
  CHECK(quoted.values(0, 0) == 1.0);

  try {
    cli::parse_csv("a,b\n1,2\n3,oops\n", "bad.csv");
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("bad.csv:3:2") != std::string::npos);
  }
  try {
    cli::parse_csv("1,2\n3\n", "short.csv");
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("short.csv:2:") != std::string::npos);
  }
  CHECK_THROWS_AS(cli::parse_csv("1,nan\n1,2\n"), InputError);
  CHECK_THROWS_AS(cli::parse_csv("a,b\n"), InputError);
}

TEST_CASE("grid and criteria lists") {
  CHECK(cli::parse_grid("10:70:5").size() == 13);
  CHECK(cli::parse_grid("10:70:5").back() == 70.0);
  CHECK(cli::parse_grid("1:1:1").size() == 1);
  CHECK_THROWS_AS(cli::parse_grid("1:2"), InputError);
  CHECK_THROWS_AS(cli::parse_grid("3:2:1"), InputError);
  CHECK(cli::parse_criteria_list("bic,gic").size() == 2);
  CHECK(cli::parse_criteria_list("gic,aic,bic")[1] == Criterion::kAic);
  CHECK_THROWS_AS(cli::parse_criteria_list("gic,xyz"), InputError);
  CHECK(cli::sidecar_path("out/run.csv") == fs::path("out/run.json"));
}

TEST_CASE("select: spectrum (100, 1, ..., 1)") {
  const auto dir = scratch_dir("select");
  std::mt19937_64 rng(41);
  Vector spec = Vector::Ones(10);
  spec[0] = 100.0;
  const Matrix x = data_with_spectrum(1000, spec, rng);
  write_matrix_csv(dir / "d.csv", x, true);

  cli::SelectOptions opt;
  opt.input = dir / "d.csv";
  opt.q = 5;
  opt.output = dir / "r.json";
  const auto report = cli::cmd_select(opt);
  REQUIRE(report.criteria.size() == 3);
  CHECK(report.n == 1000);
  CHECK(report.p == 10);
  CHECK(report.eigenvalues[0] == doctest::Approx(100.0).epsilon(1e-10));

  // end-to-end against the library on the same eigenvalues
  const Vector eig = sym_eigenvalues(sample_covariance(DataMatrix(x)).cov);
  for (const auto& c : report.criteria) {
    const auto t = criterion_trace(eig, 1000, 5, c.criterion);
    CHECK(c.selected == t.selected);
    for (int r = 0; r <= 5; ++r) {
      if (std::isfinite(t.score[r])) CHECK(c.score[r] == doctest::Approx(t.score[r]));
      else CHECK(std::isinf(c.score[r]));
    }
  }
  CHECK(report.criteria[0].criterion == Criterion::kGic);
  CHECK(report.criteria[0].selected == 1);

  const auto doc = read_json(dir / "r.json");
  CHECK(doc["criteria"]["gic"]["selected"] == 1);
  CHECK(doc["eigenvalues"].size() == 10);
  CHECK(doc["pipeline"]["standardized"] == false);
  CHECK(doc["pipeline"]["prefilter_fraction"].is_null());
  CHECK(doc["tool"] == "rankselect");
  fs::remove_all(dir);
}

TEST_CASE("select: prefilter on exact rank-3 data") {
  std::mt19937_64 rng(42);
  Vector spec = Vector::Zero(8);
  spec.head(3) << 9, 5, 2;
  const DataMatrix x(data_with_spectrum(40, spec, rng));
  cli::SelectOptions opt;
  opt.prefilter_fraction = 0.99;
  const auto report = cli::select_rank(x, opt);
  REQUIRE(report.retained_dimension.has_value());
  CHECK(*report.retained_dimension == 3);
  CHECK(report.p == 3);
  CHECK(report.input_p == 8);
  const auto doc = cli::to_json(report);
  CHECK(doc["pipeline"]["retained_dimension"] == 3);
  CHECK(doc["pipeline"]["prefilter_fraction"] == 0.99);
}

TEST_CASE("select: q beyond the numerical rank suggests a smaller q") {
  std::mt19937_64 rng(43);
  Vector spec = Vector::Zero(8);
  spec.head(4) << 9, 5, 2, 1;
  const DataMatrix x(data_with_spectrum(40, spec, rng));
  cli::SelectOptions opt;
  opt.q = 6;
  try {
    cli::select_rank(x, opt);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("numerical rank 4") != std::string::npos);
    CHECK(msg.find("--q 3") != std::string::npos);
  }
}

TEST_CASE("select: standardize flag") {
  std::mt19937_64 rng(44);
  Matrix x = gaussian_matrix(80, 6, rng);
  x.col(0) *= 30.0;
  cli::SelectOptions opt;
  opt.standardize = true;
  const auto r = cli::select_rank(DataMatrix(x), opt);
  CHECK(r.standardized);
  CHECK(r.eigenvalues.sum() == doctest::Approx(6.0));
  CHECK(r.q == 5);
}

TEST_CASE("property: JSON reports round-trip, infinities as strings") {
  std::mt19937_64 rng(45);
  Vector eig(5);
  eig << 6, 3, 3, 1, 0.5;  // exact tie: rank 2 is unselectable
  cli::SelectionReport rep;
  rep.n = 100;
  rep.p = 5;
  rep.input_p = 5;
  rep.q = 3;
  rep.eigenvalues = eig;
  const auto t = criterion_trace(eig, 100, 3, Criterion::kGic);
  rep.criteria.push_back({Criterion::kGic, t.penalty, t.score, t.selected});
  rep.seed = 17;
  const auto doc = cli::to_json(rep);
  CHECK(doc["criteria"]["gic"]["score"][2] == "inf");
  CHECK(doc["criteria"]["gic"]["penalty"][2] == "inf");
  CHECK(doc["seed"] == 17);
  const std::string text = doc.dump(2);
  CHECK(cli::Json::parse(text).dump(2) == text);

  const auto dir = scratch_dir("roundtrip");
  write_matrix_csv(dir / "d.csv", gaussian_matrix(30, 7, rng));
  cli::SelectOptions opt;
  opt.input = dir / "d.csv";
  opt.output = dir / "r.json";
  cli::cmd_select(opt);
  const std::string file = slurp(dir / "r.json");
  CHECK(cli::Json::parse(file).dump(2) + "\n" == file);
  fs::remove_all(dir);
}

TEST_CASE("simulate: sidecar gap booleans and determinism") {
  const auto dir = scratch_dir("simulate");
  SUBCASE("h1 l1") {
    cli::SimulateOptions opt;
    opt.config.replicates = 2;
    opt.out = dir / "h1.csv";
    cli::cmd_simulate(opt);
    const auto side = read_json(dir / "h1.json");
    CHECK(side["gaps"]["G1"] == true);
    CHECK(side["gaps"]["G2"] == true);
    CHECK(side["gaps"]["A1"] == true);
    CHECK(side["gaps"]["A2"] == true);
    CHECK(side["gaps"]["B1"] == false);
    CHECK(side["psi"].size() == 5);
    CHECK(side["b"].get<double>() == doctest::Approx(2.914214).epsilon(1e-6));
    CHECK(side["lambda_crit"]["gic"]["lambda"].get<double>() ==
          doctest::Approx(2.9406).epsilon(1e-4));
    const auto table = cli::read_csv(dir / "h1.csv");
    CHECK(table.header == std::vector<std::string>{"rank", "gic", "aic", "bic"});
    CHECK(table.values.rows() == 21);
  }
  SUBCASE("h3 l1") {
    cli::SimulateOptions opt;
    opt.config.law = LawKind::kH3;
    opt.config.replicates = 1;
    opt.out = dir / "h3.csv";
    cli::cmd_simulate(opt);
    CHECK(read_json(dir / "h3.json")["gaps"]["A2"] == false);
  }
  SUBCASE("same seed, same files") {
    const auto a = run_tool("simulate --replicates 1 --seed 9 --n 200 --out \"" +
                                (dir / "a.csv").string() + "\"",
                            dir);
    const auto b = run_tool("simulate --replicates 1 --seed 9 --n 200 --out \"" +
                                (dir / "b.csv").string() + "\"",
                            dir);
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  }
  fs::remove_all(dir);
}

TEST_CASE("fa command") {
  const auto dir = scratch_dir("fa");
  SUBCASE("grid gives 13 rows") {
    const auto r = run_tool("fa --setting fa1 --s-grid 10:70:5 --replicates 1 --out \"" +
                                (dir / "g.csv").string() + "\"",
                            dir);
    REQUIRE(r.code == 0);
    const auto t = cli::read_csv(dir / "g.csv");
    CHECK(t.header == std::vector<std::string>{"s", "mean", "sd", "replicates"});
    CHECK(t.values.rows() == 13);
    CHECK(t.values(12, 0) == 70.0);
  }
  SUBCASE("fa1, s = 40, 50 replicates") {
    cli::FaOptions opt;
    opt.config.replicates = 50;
    opt.s_values = {40.0};
    opt.out = dir / "s40.csv";
    const auto res = cli::cmd_fa(opt);
    MESSAGE("FA1 s=40 mean " << res[0].mean);
    CHECK(res[0].mean >= 2.8);
    CHECK(res[0].mean <= 3.2);
  }
  SUBCASE("seeded runs reproduce") {
    const std::string args = "fa --s 25 --replicates 2 --seed 4 --out \"";
    REQUIRE(run_tool(args + (dir / "x.csv").string() + "\"", dir).code == 0);
    REQUIRE(run_tool(args + (dir / "y.csv").string() + "\"", dir).code == 0);
    CHECK(slurp(dir / "x.csv") == slurp(dir / "y.csv"));
  }
  fs::remove_all(dir);
}

TEST_CASE("curves command") {
  const auto dir = scratch_dir("curves");
  cli::CurvesOptions opt;
  opt.out = dir / "c.csv";
  const auto t = cli::cmd_curves(opt);
  const auto side = read_json(dir / "c.json");
  CHECK(side["b"].get<double>() == doctest::Approx(2.914214).epsilon(1e-6));
  CHECK(side["kappa_at_edge_divergent"] == false);
  CHECK(side["kappa_at_edge"].get<double>() ==
        doctest::Approx(1.0 + 0.5 * std::sqrt(0.5)).epsilon(1e-6));
  const auto csv = cli::read_csv(dir / "c.csv");
  CHECK(csv.header == std::vector<std::string>{"u", "l_gic", "l_aic", "l_bic", "kappa"});
  REQUIRE(csv.values.rows() == 200);
  const double gap = (std::log(500.0) - 2.0) * 0.5;
  for (Eigen::Index i = 0; i < csv.values.rows(); ++i) {
    CHECK(csv.values(i, 3) - csv.values(i, 2) == doctest::Approx(gap).epsilon(1e-12));
    if (i > 0) CHECK(csv.values(i, 4) < csv.values(i - 1, 4));
  }
  CHECK(csv.values(0, 0) == doctest::Approx(t.b));
  CHECK(csv.values(199, 0) == 12.0);
  CHECK_THROWS_AS(cli::theory_curves({LawKind::kH1, 0.8, 0.5, 500, 2.0, 10, {}}), InputError);
  fs::remove_all(dir);
}

TEST_CASE("loocv command") {
  const auto dir = scratch_dir("loocv");
  SUBCASE("planted rank recovered") {
    std::mt19937_64 rng(46);
    int hits = 0;
    for (int seed = 0; seed < 20; ++seed) {
      const Matrix x = spiked_data(80, 8, {40.0, 20.0}, rng);
      const auto res = cli::loocv(DataMatrix(x), 4);
      if (res.argmax == 2) ++hits;
    }
    MESSAGE("argmax = 2 in " << hits << " / 20");
    CHECK(hits >= 18);
  }
  SUBCASE("n = 3 toy file") {
    Matrix x(3, 2);
    x << 0.3, -1.2, 2.0, 0.7, -0.4, 1.9;
    write_matrix_csv(dir / "toy.csv", x);
    cli::LoocvOptions opt{dir / "toy.csv", 0, dir / "cv.csv"};
    const auto res = cli::cmd_loocv(opt);
    double oracle = 0.0;
    for (int i = 0; i < 3; ++i) {
      const int a = (i + 1) % 3, b = (i + 2) % 3;
      const Eigen::Vector2d d = x.row(a) - x.row(b);
      const Eigen::Vector2d m = 0.5 * (x.row(a) + x.row(b));
      const double s2 = d.squaredNorm() / 8.0;
      oracle += -std::log(s2) - 0.5 * (x.row(i).transpose() - m).squaredNorm() / s2;
    }
    CHECK(std::abs(res.cv[0] - oracle / 3.0) < 1e-10);
    const auto csv = cli::read_csv(dir / "cv.csv");
    CHECK(csv.header == std::vector<std::string>{"r", "cv"});
  }
  SUBCASE("header auto-detection gives the same result") {
    std::mt19937_64 rng(47);
    const Matrix x = spiked_data(30, 5, {10.0}, rng);
    write_matrix_csv(dir / "h.csv", x, true);
    write_matrix_csv(dir / "n.csv", x, false);
    const auto a = cli::cmd_loocv({dir / "h.csv", 3, dir / "ha.csv"});
    const auto b = cli::cmd_loocv({dir / "n.csv", 3, dir / "nb.csv"});
    CHECK(a.cv == b.cv);
    CHECK(slurp(dir / "ha.csv") == slurp(dir / "nb.csv"));
  }
  fs::remove_all(dir);
}

TEST_CASE("property: errors exit nonzero with an error: prefix") {
  const auto dir = scratch_dir("errors");
  const auto missing = run_tool("select --input \"" + (dir / "nope.csv").string() + "\"", dir);
  CHECK(missing.code != 0);
  CHECK(missing.err.rfind("error: ", 0) == 0);
  CHECK(missing.err.find("nope.csv") != std::string::npos);

  write_matrix_csv(dir / "bad.csv", Matrix::Ones(3, 3));
  {
    std::ofstream(dir / "bad.csv", std::ios::app) << "1,x,3\n";
  }
  const auto bad = run_tool("loocv --input \"" + (dir / "bad.csv").string() + "\" --out \"" +
                                (dir / "o.csv").string() + "\"",
                            dir);
  CHECK(bad.code != 0);
  CHECK(bad.err.rfind("error: ", 0) == 0);
  CHECK(bad.err.find(":4:2:") != std::string::npos);

  const auto flag = run_tool("simulate --h h9 --out \"" + (dir / "s.csv").string() + "\"", dir);
  CHECK(flag.code != 0);
  CHECK(flag.err.rfind("error: ", 0) == 0);

  const auto unknown = run_tool("select --bogus", dir);
  CHECK(unknown.code != 0);
  CHECK(unknown.err.rfind("error: ", 0) == 0);

  std::mt19937_64 rng(48);
  write_matrix_csv(dir / "ok.csv", gaussian_matrix(40, 5, rng));
  const auto ok = run_tool("select --input \"" + (dir / "ok.csv").string() + "\" --output \"" +
                               (dir / "ok.json").string() + "\"",
                           dir);
  CHECK(ok.code == 0);
  CHECK(ok.err.empty());
  CHECK(ok.out.find("gic: ") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("property: RANKSELECT_THREADS does not change seeded output") {
  const auto dir = scratch_dir("threads");
  const std::string base = "simulate --replicates 4 --n 200 --h h2 --seed 3 --out \"";
  setenv("RANKSELECT_THREADS", "1", 1);
  REQUIRE(run_tool(base + (dir / "one.csv").string() + "\"", dir).code == 0);
  setenv("RANKSELECT_THREADS", "4", 1);
  REQUIRE(run_tool(base + (dir / "four.csv").string() + "\"", dir).code == 0);
  unsetenv("RANKSELECT_THREADS");
  CHECK(slurp(dir / "one.csv") == slurp(dir / "four.csv"));
  fs::remove_all(dir);
}
