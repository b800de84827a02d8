#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>
#include <json.hpp>

#include "commands.hpp"
#include "fixtures.hpp"
#include "tailored/csv.hpp"
#include "tailored/error.hpp"
#include "tailored/sampler.hpp"

using namespace tailored;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

const std::vector<std::string> kQuick{"--iterations", "2000", "--burn-in", "500"};

std::vector<std::string> with_quick(std::vector<std::string> args) {
  args.insert(args.end(), kQuick.begin(), kQuick.end());
  return args;
}

nlohmann::json manifest(const std::string& dir) {
  return nlohmann::json::parse(read_text_file((fs::path(dir) / "manifest.json").string()));
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("number lists") {
    CHECK(cli::parse_number_list("0,5, 10") == std::vector<double>{0, 5, 10});
    const auto sweep = cli::parse_number_list("0.1:0.9:0.05");
    CHECK(sweep.size() == 17);
    CHECK(sweep[3] == 0.25);
    CHECK(sweep.back() == 0.9);
    CHECK_THROWS_AS(cli::parse_number_list("1:0:0.1"), ConfigError);
    CHECK_THROWS_AS(cli::parse_number_list("a,b"), ConfigError);
  }

  TEST_CASE("config file merging") {
    fixtures::TempDir dir;
    write_text_file(dir.file("c.cfg"), "# comment\nt = 0.2\nfolds=3\nstandardize = true\nquiet = false\n");
    const auto merged = cli::merge_config({"fit", "data.csv", "--config", dir.file("c.cfg"), "--t", "0.4"});
    CHECK(merged == std::vector<std::string>{"fit", "data.csv", "--t", "0.4", "--folds=3", "--standardize"});
    write_text_file(dir.file("bad.cfg"), "novalue\n");
    CHECK_THROWS_AS(cli::read_config_file(dir.file("bad.cfg")), ConfigError);
    CHECK(run({"fit", "x.csv", "--config", dir.file("missing.cfg")}).code == cli::kIoError);
  }

  TEST_CASE("simulate writes data and a metadata sidecar") {
    fixtures::TempDir dir;
    const auto r = run({"simulate", "--scenario", "sim3", "--n", "200", "--psi", "0.1", "--oracle", "--seed", "4",
                        "--out", dir.file("s.csv")});
    REQUIRE(r.code == 0);
    const CsvTable t = read_csv(dir.file("s.csv"));
    CHECK(t.header == std::vector<std::string>{"x1", "x2", "y", "true_probability", "contaminated"});
    CHECK(t.rows.size() == 220);
    const auto meta = nlohmann::json::parse(read_text_file(dir.file("s.csv.meta.json")));
    CHECK(meta["seed"] == 4);
    CHECK(meta["contaminated_rows"] == 20);
    CHECK(run({"simulate", "--scenario", "sim9", "--out", dir.file("x.csv")}).code == cli::kUsageError);
    const auto plain = run({"simulate", "--scenario", "sim1", "--n", "5"});
    CHECK(plain.out.rfind("x1,x2,y\r\n", 0) == 0);
  }

  TEST_CASE("fit, predict and evaluate round trip") {
    fixtures::TempDir dir;
    const std::string data = dir.file("train.csv");
    REQUIRE(run({"simulate", "--scenario", "sim1", "--n", "500", "--seed", "2", "--out", data}).code == 0);
    const std::string before = read_text_file(data);

    const auto fit_args = with_quick({"fit", "--t", "0.15", "--lambda-grid", "0,5,10,25", "--seed", "7", data});
    auto a = fit_args;
    a.insert(a.end(), {"--out", dir.file("m1")});
    auto b = fit_args;
    b.insert(b.end(), {"--out", dir.file("m2")});
    const auto ra = run(a);
    REQUIRE_MESSAGE(ra.code == 0, ra.err);
    REQUIRE(run(b).code == 0);
    CHECK(read_text_file(dir.file("m1/manifest.json")) == read_text_file(dir.file("m2/manifest.json")));
    CHECK(read_text_file(dir.file("m1/draws.csv")) == read_text_file(dir.file("m2/draws.csv")));
    CHECK(read_text_file(data) == before);

    const auto m = manifest(dir.file("m1"));
    CHECK(m["threshold"]["t"] == 0.15);
    CHECK(m["pipeline"]["lambda_grid"].size() == 4);
    CHECK(m["split"]["development_rows"] == 400);
    for (const char* f : {"draws.csv", "weights.csv", "ess.csv", "cv.csv"}) CHECK(fs::exists(dir.file("m1") + "/" + f));
    CHECK(read_csv(dir.file("m1/cv.csv")).rows.size() == 20);
    CHECK(read_csv(dir.file("m1/weights.csv")).rows.size() == 400);

    // predictions on the training rows
    const auto p = run({"predict", data, "--model", dir.file("m1"), "--out", dir.file("p.csv")});
    REQUIRE_MESSAGE(p.code == 0, p.err);
    const CsvTable preds = read_csv(dir.file("p.csv"));
    CHECK(preds.rows.size() == 500);
    for (double v : preds.numeric_column("mean_probability")) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }

    // identical files: zero paired difference
    std::string split_csv = "row_id,mean_probability,y,split\n";
    const auto ys = preds.numeric_column("y");
    const auto ps = preds.numeric_column("mean_probability");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      split_csv += std::to_string(i) + "," + format_double(ps[i]) + "," + std::to_string(static_cast<int>(ys[i])) +
                   "," + std::to_string(i % 4) + "\n";
    }
    write_text_file(dir.file("a.csv"), split_csv);
    write_text_file(dir.file("b.csv"), split_csv);
    const auto e = run({"evaluate", "--predictions", dir.file("a.csv"), "--predictions", dir.file("b.csv"),
                        "--thresholds", "0.1:0.9:0.05", "--out", dir.file("ev"), "--reference"});
    REQUIRE_MESSAGE(e.code == 0, e.err);
    const CsvTable delta = read_csv(dir.file("ev/delta.csv"));
    CHECK(delta.rows.size() == 17);
    for (double v : delta.numeric_column("mean_delta")) CHECK(v == 0.0);
    for (double v : delta.numeric_column("se_delta")) CHECK(v == 0.0);
    const CsvTable nb = read_csv(dir.file("ev/nb.csv"));
    // 17 thresholds x 4 splits x (2 models + 2 references)
    CHECK(nb.rows.size() == 17 * 4 * 4);
    const auto model_col = nb.require_column("model");
    const auto nb_col = nb.require_column("nb");
    for (const auto& row : nb.rows) {
      if (row[model_col] == "treat_none") CHECK(row[nb_col] == "0");
    }

    // model + data evaluation path
    const auto md = run({"evaluate", "--model", dir.file("m1"), "--data", data, "--thresholds", "0.15"});
    CHECK(md.code == 0);
    CHECK(md.out.find("0.15,m1,1,") != std::string::npos);
  }

  TEST_CASE("utilities fix the threshold") {
    fixtures::TempDir dir;
    const std::string data = dir.file("d.csv");
    REQUIRE(run({"simulate", "--scenario", "sim1", "--n", "300", "--out", data}).code == 0);
    // H = u_tn - u_fp = 1, B = u_tp - u_fn = 9
    const auto r = run(with_quick({"fit", data, "--utilities", "0,-1,-9,0", "--lambda-grid", "0", "--out",
                                   dir.file("m")}));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto m = manifest(dir.file("m"));
    CHECK(m["threshold"]["t"].get<double>() == 0.1);
    CHECK(m["threshold"]["source"] == "utilities");
    CHECK(run(with_quick({"fit", data, "--t", "0.1", "--utilities", "0,-1,-9,0", "--out", dir.file("x")})).code ==
          cli::kUsageError);
    CHECK(run(with_quick({"fit", data, "--out", dir.file("x")})).code == cli::kUsageError);
    CHECK_FALSE(fs::exists(dir.file("x")));
  }

  TEST_CASE("failure hygiene") {
    fixtures::TempDir dir;
    write_text_file(dir.file("noy.csv"), "x1,x2\n0.1,0.2\n0.3,0.4\n");
    const auto r = run(with_quick({"fit", dir.file("noy.csv"), "--t", "0.3", "--out", dir.file("out")}));
    CHECK(r.code == cli::kDataError);
    CHECK_FALSE(fs::exists(dir.file("out")));
    write_text_file(dir.file("bad.csv"), "x1,y\n0.1,2\n");
    CHECK(run(with_quick({"fit", dir.file("bad.csv"), "--t", "0.3", "--out", dir.file("out")})).code ==
          cli::kDataError);
    CHECK(run({"fit", dir.file("absent.csv"), "--t", "0.3", "--out", dir.file("out")}).code == cli::kIoError);
    CHECK(run({"fit", dir.file("noy.csv"), "--t", "1.5", "--out", dir.file("out")}).code == cli::kUsageError);
    CHECK(run({"frobnicate"}).code == cli::kUsageError);
    CHECK(run({"reproduce", "--figure", "sim4-fig9", "--out", dir.file("r")}).code == cli::kUsageError);
    CHECK(run({"--help"}).code == 0);
  }

  TEST_CASE("predict checks the column schema") {
    fixtures::TempDir dir;
    const std::string data = dir.file("d.csv");
    REQUIRE(run({"simulate", "--scenario", "sim1", "--n", "300", "--out", data}).code == 0);
    REQUIRE(run(with_quick({"fit", data, "--t", "0.3", "--lambda-grid", "0", "--standardize", "--out",
                            dir.file("m")})).code == 0);
    CHECK(manifest(dir.file("m"))["standardization"]["means"].size() == 2);
    write_text_file(dir.file("perm.csv"), "x2,x1\n0.1,0.2\n");
    CHECK(run({"predict", dir.file("perm.csv"), "--model", dir.file("m")}).code == cli::kDataError);
    write_text_file(dir.file("extra.csv"), "x1,x2,x3\n0.1,0.2,0.3\n");
    CHECK(run({"predict", dir.file("extra.csv"), "--model", dir.file("m")}).code == cli::kDataError);
    write_text_file(dir.file("ok.csv"), "id,x1,x2\nalpha,0.1,0.2\n");
    const auto r = run({"predict", dir.file("ok.csv"), "--model", dir.file("m")});
    CHECK(r.code == 0);
    CHECK(r.out.find("alpha,") != std::string::npos);
  }

  TEST_CASE("single-draw artifact predicts the plug-in probability") {
    fixtures::TempDir dir;
    const std::string data = dir.file("d.csv");
    REQUIRE(run({"simulate", "--scenario", "sim1", "--n", "300", "--out", data}).code == 0);
    REQUIRE(run(with_quick({"fit", data, "--t", "0.3", "--lambda-grid", "0", "--out", dir.file("m")})).code == 0);
    write_text_file(dir.file("m/draws.csv"), "(Intercept),x1,x2\n0.5,-2,3\n");
    write_text_file(dir.file("new.csv"), "x1,x2\n0.2,0.4\n0.9,0.1\n");
    const auto r = run({"predict", dir.file("new.csv"), "--model", dir.file("m"), "--out", dir.file("p.csv")});
    REQUIRE(r.code == 0);
    const CsvTable t = read_csv(dir.file("p.csv"));
    const auto p = t.numeric_column("mean_probability");
    CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-(0.5 - 0.4 + 1.2)))).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(1.0 / (1.0 + std::exp(-(0.5 - 1.8 + 0.3)))).epsilon(1e-15));
    CHECK(t.numeric_column("predictive_sd")[0] == 0.0);
    CHECK(t.rows[0][3] == "positive");
    CHECK(t.rows[1][3] == "negative");
  }

  TEST_CASE("ess-grid and threshold-band") {
    fixtures::TempDir dir;
    write_text_file(dir.file("pi.csv"), "pi_u\n0.1\n0.2\n0.5\n0.9\n");
    const auto r = run({"ess-grid", dir.file("pi.csv"), "--t", "0.99", "--lambda-grid", "0,1000"});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("lambda,ess,ess_fraction,below_floor\r\n0,4,1,false\r\n", 0) == 0);
    CHECK(r.err.find("below the floor") != std::string::npos);
    const auto band = run({"threshold-band", "--min-benefit", "0.03", "--max-benefit", "0.05", "--rrr", "0.22"});
    CHECK(band.code == 0);
    const CsvTable t = parse_csv(band.out);
    CHECK(std::round(parse_double(t.rows[0][0]) * 1000) / 1000 == 0.136);
    CHECK(std::round(parse_double(t.rows[0][1]) * 1000) / 1000 == 0.227);
  }

  TEST_CASE("reproduce at a tiny scale") {
    fixtures::TempDir dir;
    const auto r = run({"reproduce", "--figure", "sim3-fig6", "--scale", "0.1", "--sizes", "200", "--scenarios", "0.1",
                        "--thresholds", "0.3,0.5", "--test-size", "300", "--lambda-grid", "0,10", "--folds", "3",
                        "--iterations", "1500", "--burn-in", "500", "--quiet", "--out", dir.file("r")});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const CsvTable delta = read_csv(dir.file("r/delta.csv"));
    CHECK(delta.rows.size() == 2);
    const CsvTable nb = read_csv(dir.file("r/nb.csv"));
    CHECK(nb.column_index("psi"));
    const auto m = manifest(dir.file("r"));
    CHECK(m["repetitions"] == 2);
    CHECK(m["figure"] == "sim3-fig6");
  }
}
