#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "lahm/cli.hpp"
#include "lahm/distributions.hpp"
#include "test_support.hpp"

namespace lt = lahm::testing;
using doctest::Approx;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = lahm::cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

// Value following `key` on the console, e.g. "efficiency_lqlc = 0.94".
double value_after(const std::string& text, const std::string& key) {
  const auto pos = text.find(key);
  REQUIRE(pos != std::string::npos);
  return std::stod(text.substr(pos + key.size()));
}

}  // namespace

TEST_CASE("fit subcommand") {
  lt::TempDir dir;
  std::ostringstream data;
  for (double v : lt::logistic_draws(1.0, 0.8, 5000, 4)) data << v << '\n';
  lt::spit(dir.file("x.txt"), data.str());

  const Run r = cli({"fit", "--input", dir.file("x.txt"), "--dist", "both", "--out", dir.file("p.csv")});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "sanity: logistic s"));
  CHECK(contains(r.out, " < sigma*pi/sqrt(3)"));
  const auto t = lt::parse_table(lt::slurp(dir.file("p.csv")));
  CHECK(t.header == std::vector<std::string>{"distribution", "location", "scale"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][0] == "logistic");
  CHECK(std::abs(t.num(1, "scale") - 0.8) < 0.05);
  const double sigma = t.num(0, "scale");
  CHECK(t.num(1, "scale") < sigma * std::numbers::pi / std::numbers::sqrt3);

  const Run only = cli({"fit", "--input", dir.file("x.txt"), "--dist", "gaussian"});
  CHECK(only.code == 0);
  CHECK(contains(only.out, "gaussian,"));
  CHECK_FALSE(contains(only.out, "logistic,"));

  lt::spit(dir.file("empty.txt"), "");
  const Run empty = cli({"fit", "--input", dir.file("empty.txt")});
  CHECK(empty.code == 2);
  CHECK(contains(empty.err, "no samples"));

  lt::spit(dir.file("bad.txt"), "1\n2\n3\nfour\n5\n");
  const Run bad = cli({"fit", "--input", dir.file("bad.txt")});
  CHECK(bad.code == 2);
  CHECK(contains(bad.err, "line 4"));

  const Run missing = cli({"fit", "--input", dir.file("nope.txt")});
  CHECK(missing.code == 2);

  lt::spit(dir.file("flat.txt"), "5\n5\n5\n5\n5\n5\n5\n5\n5\n5\n5\n");
  const Run flat = cli({"fit", "--input", dir.file("flat.txt"), "--dist", "logistic"});
  CHECK(flat.code != 0);
  CHECK(contains(flat.err, "degenerate sample"));
}

TEST_CASE("analyze subcommand") {
  lt::TempDir dir;
  const Run eff = cli({"analyze", "--sweep", "efficiency", "--out", dir.file("eff.csv")});
  CHECK(eff.code == 0);
  CHECK(value_after(eff.out, "efficiency_lqlc = ") == Approx(0.941).epsilon(0.002));
  CHECK(value_after(eff.out, "efficiency_lah = ") == Approx(0.920).epsilon(0.002));
  const auto t = lt::parse_table(lt::slurp(dir.file("eff.csv")));
  CHECK(t.header == std::vector<std::string>{"s", "efficiency_lqlc", "efficiency_lah", "are"});
  CHECK(t.rows.size() == 60);
  CHECK(t.num(0, "s") == Approx(0.05));
  CHECK(t.num(59, "s") == Approx(3.0));

  const Run ges = cli({"analyze", "--sweep", "ges", "--out", dir.file("ges.csv")});
  CHECK(ges.code == 0);
  CHECK(std::abs(value_after(ges.out, "ratio = ") - 0.88) < 0.02);
  const auto g = lt::parse_table(lt::slurp(dir.file("ges.csv")));
  CHECK(g.rows.size() == 120);

  CHECK(cli({"analyze", "--sweep", "efficiency", "--step", "0"}).code == 2);
  CHECK(cli({"analyze", "--sweep", "efficiency", "--step", "-0.1"}).code == 2);
  CHECK(cli({"analyze", "--sweep", "efficiency", "--sweep-min", "2", "--sweep-max", "1"}).code == 2);
  CHECK(cli({"analyze", "--sweep", "tukey"}).code == 2);
}

TEST_CASE("simulate subcommand") {
  lt::TempDir dir;
  const std::vector<std::string> base{"simulate", "--seed", "11", "--trials", "10000",
                                      "--calibration-samples", "20000", "--workers", "0"};
  auto a = base;
  a.insert(a.end(), {"--out", dir.file("a")});
  auto b = base;
  b.insert(b.end(), {"--out", dir.file("b")});
  const Run ra = cli(a);
  REQUIRE(ra.code == 0);
  REQUIRE(cli(b).code == 0);

  for (const char* f : {"summary.csv", "scales.csv", "cdf_LS.csv", "cdf_CH.csv", "cdf_LAH.csv"}) {
    const std::string fa = lt::slurp(dir.file(std::string("a/") + f));
    CHECK_FALSE(fa.empty());
    CHECK(fa == lt::slurp(dir.file(std::string("b/") + f)));
  }
  const auto s = lt::parse_table(lt::slurp(dir.file("a/summary.csv")));
  for (std::size_t row : {0u, 1u}) {
    CHECK(s.num(row, "LAH") < s.num(row, "CH"));
    CHECK(s.num(row, "CH") < s.num(row, "LS"));
  }
  CHECK(s.num(2, "LS") == 0.0);
  CHECK(contains(ra.out, "rmse_2d"));

  const auto scales = lt::parse_table(lt::slurp(dir.file("a/scales.csv")));
  REQUIRE(scales.rows.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) CHECK(scales.num(i, "gaussian_sigma") > scales.num(i, "logistic_s"));

  const auto cdf = lt::parse_table(lt::slurp(dir.file("a/cdf_LAH.csv")));
  CHECK(cdf.header == std::vector<std::string>{"error", "fraction"});
  for (std::size_t i = 1; i < cdf.rows.size(); ++i) CHECK(cdf.num(i, "fraction") >= cdf.num(i - 1, "fraction"));

  CHECK(cli({"simulate", "--seed", "1", "--trials", "0", "--out", dir.file("c")}).code == 2);
  CHECK(cli({"simulate", "--trials", "10", "--out", dir.file("d")}).code == 2);  // seed required
  CHECK(cli({"simulate", "--seed", "1", "--trials", "10", "--scales", "1,x,1", "--out", dir.file("e")}).code == 2);
}

TEST_CASE("generate and spp subcommands") {
  lt::TempDir dir;
  REQUIRE(cli({"generate", "--seed", "5", "--profile", "clean", "--epochs", "20", "--out",
               dir.file("clean.csv"), "--truth-out", dir.file("truth.csv")})
              .code == 0);
  lt::spit(dir.file("model.csv"),
           "bin_low_deg,bin_high_deg,gauss_sigma,logistic_s,n_samples\n0,90,1,0.55,100\n");
  const Run clean = cli({"spp", "--obs", dir.file("clean.csv"), "--model", dir.file("model.csv"),
                         "--methods", "LS,CH,LAH,QLC", "--truth", dir.file("truth.csv"), "--out",
                         dir.file("fix.csv")});
  REQUIRE(clean.code == 0);
  const auto fixes = lt::parse_table(lt::slurp(dir.file("fix.csv")));
  CHECK(fixes.rows.size() == 80);
  for (std::size_t i = 0; i < fixes.rows.size(); ++i) {
    CHECK(fixes.num(i, "error_3d") < 1e-3);
    CHECK(fixes.rows[i][fixes.col("converged")] == "1");
  }

  REQUIRE(cli({"generate", "--seed", "9", "--epochs", "500", "--out", dir.file("urban.csv"), "--truth-out",
               dir.file("utruth.csv"), "--training-out", dir.file("train.csv")})
              .code == 0);
  const Run urban = cli({"spp", "--obs", dir.file("urban.csv"), "--training", dir.file("train.csv"),
                         "--model-out", dir.file("fitted.csv"), "--truth", dir.file("utruth.csv"),
                         "--out", dir.file("ufix.csv")});
  REQUIRE(urban.code == 0);
  const auto summary = lt::parse_table(urban.out.substr(urban.out.find("method,")));
  REQUIRE(summary.rows.size() == 3);
  CHECK(summary.rows[0][0] == "LS");
  CHECK(summary.num(2, "rmse_3d") < summary.num(1, "rmse_3d"));
  CHECK(summary.num(1, "rmse_3d") < summary.num(0, "rmse_3d"));
  const auto model = lt::parse_table(lt::slurp(dir.file("fitted.csv")));
  CHECK(model.header.size() == 5);
  CHECK(model.num(0, "bin_low_deg") == 0.0);
  CHECK(model.num(model.rows.size() - 1, "bin_high_deg") == 90.0);

  // Generation is reproducible byte for byte.
  REQUIRE(cli({"generate", "--seed", "9", "--epochs", "500", "--out", dir.file("again.csv")}).code == 0);
  CHECK(lt::slurp(dir.file("again.csv")) == lt::slurp(dir.file("urban.csv")));

  const Run no_scale = cli({"spp", "--obs", dir.file("urban.csv"), "--out", dir.file("x.csv")});
  CHECK(no_scale.code == 2);
  CHECK(contains(no_scale.err, "no scale source"));

  // Underdetermined epochs are skipped, not fatal.
  lt::spit(dir.file("short.csv"),
           "epoch_id,sat_id,sat_x,sat_y,sat_z,pseudorange,elevation_deg\n0,1,2e7,0,0,2e7,40\n0,2,0,2e7,0,2e7,40\n");
  const Run short_run = cli({"spp", "--obs", dir.file("short.csv"), "--model", dir.file("model.csv"), "--out",
                             dir.file("s.csv")});
  CHECK(short_run.code == 0);
  CHECK(contains(short_run.err, "underdetermined epoch"));

  lt::spit(dir.file("broken.csv"), "epoch_id,sat_id,sat_x,sat_y,sat_z,pseudorange,elevation_deg\n0,1,2\n");
  CHECK(cli({"spp", "--obs", dir.file("broken.csv"), "--model", dir.file("model.csv"), "--out",
             dir.file("b.csv")})
            .code == 2);
}

TEST_CASE("config file supplies flags; command line wins") {
  lt::TempDir dir;
  lt::spit(dir.file("run.cfg"), "# analysis settings\nsweep = ges\nstep=0.5\nsweep-max = 2.0\nout=" +
                                    dir.file("from_cfg.csv") + "\n");
  const Run r = cli({"analyze", "--config", dir.file("run.cfg"), "--step", "0.25"});
  REQUIRE(r.code == 0);
  const auto t = lt::parse_table(lt::slurp(dir.file("from_cfg.csv")));
  CHECK(t.header[1] == "ges_lqlc");
  CHECK(t.rows.size() == 8);  // 0.05 .. 2.0 by 0.25

  lt::spit(dir.file("bad.cfg"), "sweep ges\n");
  CHECK(cli({"analyze", "--config", dir.file("bad.cfg")}).code == 2);
  CHECK(cli({"analyze", "--config", dir.file("missing.cfg")}).code == 2);
}

TEST_CASE("usage errors") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"fit"}).code == 2);
  CHECK(cli({"--help"}).code == 0);
}
