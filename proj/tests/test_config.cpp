#include <filesystem>
#include <random>

#include "doctest.h"
#include "roughball/config.hpp"
#include "roughball/error.hpp"
#include "roughball/io.hpp"
#include "roughball/quant.hpp"
#include "roughball/runner.hpp"
#include "support.hpp"

using namespace roughball;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("roughball_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string config_error(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("io: fixture round trips") {
  std::mt19937_64 gen(5);
  const auto x = testing_support::random_element(gen, 3);
  const auto j = to_json(x);
  CHECK(j.size() == 13);
  CHECK(j[0] == 3.0);
  CHECK(g2_from_json(json::parse(j.dump())) == x);

  Eigen::MatrixXd v(3, 2);
  v << 0, 0, 0.5, -1, 1.25, 2;
  const CMPath h({0.0, 0.5, 1.0}, v);
  const auto h2 = cm_path_from_json(json::parse(to_json(h).dump()));
  CHECK(h2.times == h.times);
  CHECK(h2.values == h.values);

  const auto rp = lift_piecewise_linear(h);
  const auto rp2 = rough_path_from_json(json::parse(to_json(rp).dump()));
  CHECK(rp2.times() == rp.times());
  for (std::size_t k = 0; k < rp.num_steps(); ++k) CHECK(rp2.step(k) == rp.step(k));

  CHECK_THROWS_AS(g2_from_json(json::parse("[2, 1, 2]")), InvalidArgument);
  CHECK_THROWS_AS(g2_from_json(json::parse("[\"a\"]")), InvalidArgument);
  CHECK_THROWS_AS(cm_path_from_json(json::parse(R"({"times":[0,1],"values":[[0],[1,2]]})")), InvalidArgument);
  CHECK_THROWS_AS(rough_path_from_json(json::parse(R"({"times":[0,1]})")), InvalidArgument);
}

TEST_CASE("io: hashing, numbers and CSV") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(1e-300) == "1e-300");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);

  CsvWriter w({"a", "b", "c"}, "abcd");
  w.cell(1.5).cell("x,y").cell(std::size_t{7});
  w.end_row();
  CHECK(w.str() == "# config_sha256: abcd\na,b,c\n1.5,\"x,y\",7\n");
  w.cell(1.0);
  CHECK_THROWS_AS(w.end_row(), InvalidArgument);
  w.cell(2.0).cell(3.0);
  CHECK_THROWS_AS(w.cell(4.0), InvalidArgument);

  const auto dir = scratch("atomic");
  write_atomic(dir / "sub" / "f.txt", "hello\n");
  CHECK(read_file(dir / "sub" / "f.txt") == "hello\n");
  CHECK_FALSE(fs::exists(dir / "sub" / "f.txt.tmp"));
  fs::remove_all(dir);
}

TEST_CASE("config: minimal document gets defaults") {
  const auto c =
      parse_config_text(R"({"experiment":"sbp","model":{"kind":"brownian","d":2},"alpha":0.4})");
  CHECK(c.experiment == ExperimentKind::sbp);
  CHECK(c.horizon == 1.0);
  CHECK(c.steps == 1024);
  CHECK(c.n == 100000);
  CHECK(c.seed == 0);
  CHECK(c.model.d == 2);
  CHECK(c.output == "out/sbp");
  CHECK(c.params["norm_kind"] == "rough_holder_dyadic");
  CHECK(c.params["eps_quantiles"].size() >= 8);
  CHECK(parse_config(echo(c)) == c);
}

TEST_CASE("config: validation names the key and constraint") {
  CHECK(config_error(R"({"experiment":"sbp","model":{"kind":"brownian","d":2},"alpha":0.6})") ==
        "alpha: alpha must lie in (1/3, 0.5)");
  CHECK(config_error(R"({"experiment":"sbp","model":{"kind":"fbm","hurst":0.4,"d":1},"alpha":0.45})") ==
        "alpha: alpha must lie in (1/3, 0.4)");
  CHECK(config_error(R"({"experiment":"sbp","model":{"kind":"brownian"},"alpha":0.3})").find("alpha must lie") !=
        std::string::npos);
  CHECK(config_error(R"({"experiment":"sbp","n":0})").rfind("n:", 0) == 0);
  CHECK(config_error(R"({"experiment":"sbp","grid":{"N":1000}})").rfind("grid.N:", 0) == 0);
  CHECK(config_error(R"({"experiment":"sbp","colour":1})") == "colour: unknown key");
  CHECK(config_error(R"({"experiment":"sbp","sbp":{"eps_quantile":[0.1]}})") == "sbp.eps_quantile: unknown key");
  CHECK(config_error(R"({"experiment":"sbp","quantize":{}})") == "quantize: unknown key");
  CHECK(config_error(R"({"experiment":"nope"})").rfind("experiment:", 0) == 0);
  CHECK(config_error(R"({"model":{}})") == "experiment: is required");
  CHECK(config_error(R"({"experiment":"sbp","model":{"kind":"fbm","d":1}})") == "model.hurst: is required");
  CHECK(config_error(R"({"experiment":"entropy","model":{"d":4}})").rfind("grid.N:", 0) == 0);
  CHECK(config_error(R"({"experiment":"empirical","empirical":{"n_list":[8,8]}})").rfind("empirical.n_list", 0) ==
        0);
  CHECK(config_error(R"({"experiment":"inequalities","inequalities":{"checks":[{"type":"sidak_level1",
        "cov":[[1,0],[0,1]],"eps":[1]}]}})") == "inequalities.checks[0].eps: needs one entry per coordinate");
  CHECK(config_error("{not json").rfind("<document>:", 0) == 0);
}

TEST_CASE("config: echo round trip and hash") {
  const fs::path dir = ROUGHBALL_SOURCE_DIR "/configs";
  std::size_t seen = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto c = load_config(entry.path());
    CAPTURE(entry.path().string());
    CHECK(parse_config(echo(c)) == c);
    CHECK(parse_config_text(echo(c).dump(2)) == c);
    ++seen;
  }
  CHECK(seen >= 8);

  auto c = parse_config_text(R"({"experiment":"audit","grid":{"N":256},"n":10})");
  const auto h = config_hash(c);
  CHECK(h.size() == 64);
  auto moved = c;
  moved.output = "elsewhere";
  CHECK(config_hash(moved) == h);
  auto reseeded = c;
  reseeded.seed = 1;
  CHECK(config_hash(reseeded) != h);

  auto stamped = echo(c);
  stamped["config_sha256"] = h;
  CHECK(parse_config(stamped) == c);
  stamped["config_sha256"] = std::string(64, '0');
  CHECK_THROWS_AS(parse_config(stamped), ConfigError);
}

TEST_CASE("runner: sbp artifacts, hashes and thread invariance") {
  const auto c = parse_config_text(
      R"({"experiment":"sbp","model":{"kind":"brownian","d":2},"alpha":0.4,"grid":{"N":64},"n":3000,"seed":3})");
  const auto a = scratch("sbp_a"), b = scratch("sbp_b");
  const auto ra = run_experiment(c, {a, 1});
  const auto rb = run_experiment(c, {b, 3});
  for (const char* f : {"curve.csv", "fit.json", "manifest.json", "config.json"}) CHECK(fs::exists(a / f));
  CHECK(ra.manifest_sha256 == rb.manifest_sha256);
  CHECK(read_file(a / "curve.csv") == read_file(b / "curve.csv"));
  CHECK(sha256_hex(read_file(a / "manifest.json")) == ra.manifest_sha256);

  const auto hash = config_hash(c);
  const auto manifest = json::parse(read_file(a / "manifest.json"));
  CHECK(manifest["config_sha256"] == hash);
  CHECK(manifest["files"].size() == 3);
  for (const auto& f : manifest["files"]) {
    const auto text = read_file(a / f["path"].get<std::string>());
    CHECK(sha256_hex(text) == f["sha256"]);
    CHECK(text.find(hash) != std::string::npos);
    CHECK(text.find('\r') == std::string::npos);
  }
  const auto curve = read_file(a / "curve.csv");
  CHECK(curve.rfind("# config_sha256: " + hash + "\neps,p_hat,ci_low,ci_high,n,norm_kind,alpha,model,seed\n", 0) == 0);
  CHECK(parse_config(json::parse(read_file(a / "config.json"))) == c);
  CHECK(ra.failures.empty());
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("runner: injected violation and quantization codebooks") {
  const auto v = load_config(ROUGHBALL_SOURCE_DIR "/tests/fixtures/injected_violation.json");
  const auto dir = scratch("violation");
  const auto r = run_experiment(v, {dir, 1});
  REQUIRE(r.failures.size() == 1);
  CHECK(r.failures[0] == "violated: injected violation");
  const auto reports = json::parse(read_file(dir / "reports.json"))["reports"];
  CHECK(reports.size() == 2);
  CHECK(reports[1]["verdict"] == "violated");
  fs::remove_all(dir);

  const auto q = parse_config_text(R"({"experiment":"quantize","model":{"d":1},"alpha":0.4,"grid":{"N":16},
      "n":5000,"quantize":{"n_list":[2,4],"train":200,"test":200,"max_iter":5}})");
  const auto qdir = scratch("quantize");
  const auto rq = run_experiment(q, {qdir, 2});
  const auto book = json::parse(read_file(qdir / "codebook_n4.json"));
  REQUIRE(book["centers"].size() == 4);
  const auto center = rough_path_from_json(book["centers"][0]);
  CHECK(center.num_steps() == 16);
  CHECK(center.dim() == 1);
  CHECK(fs::exists(qdir / "quantization.csv"));
  fs::remove_all(qdir);
}
