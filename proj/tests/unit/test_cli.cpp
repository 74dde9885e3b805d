#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "sadepth/io.hpp"
#include "support/oracles.hpp"

using namespace sadepth;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("sadepth_cli_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& p) const { return path_ / p; }
  std::string str(const std::string& p) const { return (path_ / p).string(); }

 private:
  fs::path path_;
};

void save(const fs::path& p, const DepthMap& m) {
  fs::create_directories(p.parent_path());
  io::write_file(p, io::write_pfm(m));
}

void save_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

json load_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("cli: usage errors exit 2") {
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"bogus"}).code == cli::kExitUsage);
  CHECK(run({"gradcheck", "--eps", "0"}).code == cli::kExitUsage);
  CHECK(run({"gradcheck", "--block", "conv"}).code == cli::kExitUsage);
  CHECK(run({"eval", "--pred", "/nonexistent/a.pfm", "--gt", "/nonexistent/b.pfm"}).code == cli::kExitUsage);
  CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("cli eval: identical directories") {
  TempDir dir("eval_same");
  Rng rng(1);
  for (const char* name : {"a", "b", "c"}) save(dir / (std::string("gt/") + name + ".pfm"), oracle::random_map(4, 5, rng));
  const auto r = run({"eval", "--pred", dir.str("gt"), "--gt", dir.str("gt"), "--report", dir.str("r.json"), "--jobs", "2"});
  CHECK(r.code == cli::kExitOk);
  const auto rep = load_json(dir / "r.json");
  CHECK(rep["command"] == "eval");
  CHECK(rep["results"].size() == 3);
  CHECK(rep["results"][0]["name"] == "a");
  CHECK(rep["aggregate"]["metrics"]["rel"] == 0.0);
  CHECK(rep["aggregate"]["metrics"]["delta1"] == 1.0);
  CHECK(rep["aggregate"]["metrics"]["pixel_count"] == 60);
}

TEST_CASE("cli eval: pixel-weighted aggregate and clamping") {
  TempDir dir("eval_agg");
  save(dir / "gt/x.pfm", DepthMap::from_rows({{1.0}}));
  save(dir / "gt/y.pfm", DepthMap::from_rows({{1.0}}));
  save(dir / "pred/x.pfm", DepthMap::from_rows({{1.125}}));
  save(dir / "pred/y.pfm", DepthMap::from_rows({{1.25}}));
  CHECK(run({"eval", "--pred", dir.str("pred"), "--gt", dir.str("gt"), "--report", dir.str("r.json")}).code == 0);
  const auto rep = load_json(dir / "r.json");
  CHECK(rep["results"][0]["metrics"]["rel"].get<double>() == doctest::Approx(0.125));
  CHECK(rep["aggregate"]["metrics"]["rel"].get<double>() == doctest::Approx(0.1875).epsilon(1e-12));

  save(dir / "p2/z.pfm", DepthMap::from_rows({{12.0}}));
  save(dir / "g2/z.pfm", DepthMap::from_rows({{10.0}}));
  CHECK(run({"eval", "--pred", dir.str("p2/z.pfm"), "--gt", dir.str("g2/z.pfm"), "--clamp-max", "10", "--report",
             dir.str("c.json")})
            .code == 0);
  CHECK(load_json(dir / "c.json")["aggregate"]["metrics"]["rel"] == 0.0);
}

TEST_CASE("cli eval: unmatched names and per-file errors fail") {
  TempDir dir("eval_unmatched");
  save(dir / "gt/a.pfm", DepthMap::from_rows({{1.0}}));
  save(dir / "gt/b.pfm", DepthMap::from_rows({{1.0}}));
  save(dir / "pred/a.pfm", DepthMap::from_rows({{1.0}}));
  save(dir / "pred/c.pfm", DepthMap::from_rows({{1.0}}));
  const auto r = run({"eval", "--pred", dir.str("pred"), "--gt", dir.str("gt"), "--report", dir.str("r.json")});
  CHECK(r.code == cli::kExitFailed);
  CHECK(r.err.find("gt:b") != std::string::npos);
  CHECK(r.err.find("pred:c") != std::string::npos);
  const auto rep = load_json(dir / "r.json");
  CHECK(rep["status"] == "failed");
  CHECK(rep["unmatched"].size() == 2);

  save(dir / "gt2/h.pfm", DepthMap::from_rows({{1.0}}));
  save(dir / "pred2/h.pfm", DepthMap::from_rows({{0.0}}));
  const auto e = run({"eval", "--pred", dir.str("pred2"), "--gt", dir.str("gt2"), "--report", dir.str("e.json")});
  CHECK(e.code == cli::kExitFailed);
  CHECK(load_json(dir / "e.json")["results"][0]["error"] == "empty overlap");
}

TEST_CASE("cli loss") {
  TempDir dir("loss");
  Rng rng(2);
  const auto flat = DepthMap::constant(16, 16, 3.0);
  save(dir / "flat.pfm", flat);
  const auto zero = run({"loss", "--pred", dir.str("flat.pfm"), "--gt", dir.str("flat.pfm"), "--report", dir.str("z.json")});
  CHECK(zero.code == 0);
  CHECK(load_json(dir / "z.json")["aggregate"]["loss"]["total"] == 0.0);

  save(dir / "gt/a.pfm", oracle::step_map());
  save(dir / "pred/a.pfm", oracle::random_map(16, 16, rng, 1.0, 11.0));
  CHECK(run({"loss", "--pred", dir.str("pred"), "--gt", dir.str("gt"), "--stage", "1", "--report", dir.str("s1.json")})
            .code == 0);
  const auto s1 = load_json(dir / "s1.json")["results"][0]["loss"];
  CHECK(s1["total"] == s1["berhu"]);
  CHECK(s1["stage"] == 1);

  CHECK(run({"loss", "--pred", dir.str("pred"), "--gt", dir.str("gt"), "--seed", "9", "--report", dir.str("a.json")})
            .code == 0);
  CHECK(run({"loss", "--pred", dir.str("pred"), "--gt", dir.str("gt"), "--seed", "9", "--report", dir.str("b.json")})
            .code == 0);
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));

  const auto w = run({"loss", "--pred", dir.str("pred"), "--gt", dir.str("gt"), "--edge-weights", "--report",
                      dir.str("w.json")});
  CHECK(w.code == 0);
  CHECK(load_json(dir / "w.json")["results"][0]["loss"]["berhu"] != s1["berhu"]);

  CHECK(run({"loss", "--pred", dir.str("pred"), "--gt", dir.str("gt"), "--stage", "4"}).code == cli::kExitUsage);
  CHECK(run({"loss", "--pred", dir.str("pred"), "--gt", dir.str("gt"), "--lambdas", "1,2"}).code == cli::kExitUsage);
}

TEST_CASE("cli mask") {
  TempDir dir("mask");
  save(dir / "step.pfm", oracle::step_map());
  save(dir / "flat.pfm", DepthMap::constant(16, 16, 2.0));
  REQUIRE(run({"mask", "--gt", dir.str("step.pfm"), "--low", "0.5", "--high", "2.0", "--out", dir.str("step.pgm")}).code == 0);
  const auto px = io::read_pgm8(io::read_file(dir / "step.pgm"));
  for (int r = 0; r < 16; ++r) {
    for (int c = 0; c < 16; ++c) CHECK(px(r, c) == (c >= 6 && c <= 10 ? 255 : 0));
  }
  REQUIRE(run({"mask", "--gt", dir.str("step.pfm"), "--out", dir.str("auto.pgm")}).code == 0);
  CHECK(io::read_pgm8(io::read_file(dir / "auto.pgm")) == px);

  REQUIRE(run({"mask", "--gt", dir.str("flat.pfm"), "--out", dir.str("flat.pgm")}).code == 0);
  const auto flat_px = io::read_pgm8(io::read_file(dir / "flat.pgm"));
  for (auto v : flat_px.data()) CHECK(v == 0);
  CHECK(run({"mask", "--gt", dir.str("step.pfm"), "--low", "1", "--out", dir.str("x.pgm")}).code == cli::kExitUsage);
}

TEST_CASE("cli sample") {
  TempDir dir("sample");
  save_text(dir / "two.json", R"([{"id":"a","category":"I","size":100},{"id":"b","category":"S","size":300}])");
  REQUIRE(run({"sample", "--datasets", dir.str("two.json"), "--stage", "1", "--batches", "100", "--batch-size", "100",
               "--seed", "3", "--report", dir.str("r.json")})
              .code == 0);
  const auto rep = load_json(dir / "r.json");
  CHECK(rep["results"].size() == 100);
  CHECK(rep["results"][0]["entries"].size() == 100);
  const double fa = rep["aggregate"]["frequencies"][0]["frequency"];
  CHECK(std::abs(fa - 0.5) <= 0.02);

  save_text(dir / "one.json", R"([{"id":"only","category":"I","size":5}])");
  REQUIRE(run({"sample", "--datasets", dir.str("one.json"), "--omit-batches", "--report", dir.str("o.json")}).code == 0);
  const auto one = load_json(dir / "o.json");
  CHECK(one["results"].empty());
  CHECK(one["aggregate"]["frequencies"][0]["frequency"] == 1.0);
  CHECK(one["aggregate"]["draws"] == 48);

  save_text(dir / "bad.json", R"([{"id":"a","category":"I","size":-3}])");
  const auto bad = run({"sample", "--datasets", dir.str("bad.json")});
  CHECK(bad.code == cli::kExitUsage);
  CHECK(bad.err.find("[0].size") != std::string::npos);
}

TEST_CASE("cli sample --auto replays the loss history") {
  TempDir dir("sample_auto");
  save_text(dir / "d.json", R"([{"id":"a","category":"I","size":10},{"id":"h","category":"HC","size":10}])");
  std::string csv = "epoch,loss\n";
  for (int e = 1; e <= 10; ++e) csv += std::to_string(e) + ",0.5\n";
  save_text(dir / "h.csv", csv);
  REQUIRE(run({"sample", "--datasets", dir.str("d.json"), "--auto", "--history", dir.str("h.csv"), "--patience", "3",
               "--state-out", dir.str("state.json"), "--report", dir.str("r.json")})
              .code == 0);
  const auto agg = load_json(dir / "r.json")["aggregate"];
  REQUIRE(agg["transitions"].size() == 2);
  CHECK(agg["transitions"][0]["epoch"] == 3);
  CHECK(agg["transitions"][0]["stage"] == 2);
  CHECK(agg["transitions"][1]["epoch"] == 6);
  CHECK(agg["final_stage"] == 3);
  CHECK(agg["frequencies"][1]["frequency"].get<double>() > 0.0);
  CHECK(load_json(dir / "state.json")["active_stage"] == 2);

  REQUIRE(run({"sample", "--state-in", dir.str("state.json"), "--report", dir.str("resumed.json")}).code == 0);
  CHECK(load_json(dir / "resumed.json")["aggregate"]["final_stage"] == 3);

  save_text(dir / "broken.csv", "epoch,loss\n1,abc\n");
  CHECK(run({"sample", "--datasets", dir.str("d.json"), "--auto", "--history", dir.str("broken.csv")}).code ==
        cli::kExitUsage);
  CHECK(run({"sample", "--datasets", dir.str("d.json"), "--auto"}).code == cli::kExitUsage);
  CHECK(run({"sample", "--datasets", dir.str("d.json"), "--stage", "1", "--auto"}).code == cli::kExitUsage);
}

TEST_CASE("cli gradcheck") {
  TempDir dir("gradcheck");
  for (const char* block : {"sab", "gcb", "losses"}) {
    const auto r = run({"gradcheck", "--block", block, "--seed", "0", "--report", dir.str("g.json")});
    CHECK(r.code == 0);
    CHECK(load_json(dir / "g.json")["aggregate"]["passed"] == true);
  }
  const auto losses = load_json(dir / "g.json");
  std::set<std::string> names;
  for (const auto& e : losses["results"]) names.insert(e["name"].get<std::string>());
  for (const char* n : {"berhu", "gradient", "normal", "gfrl"}) CHECK(names.contains(n));
}

TEST_CASE("cli normals") {
  TempDir dir("normals");
  Grid<double> ramp(6, 7);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 7; ++c) ramp(r, c) = 1.0 + c;
  }
  save(dir / "ramp.pfm", DepthMap(ramp));
  save(dir / "flat.pfm", DepthMap::constant(4, 4, 2.0));
  REQUIRE(run({"normals", "--gt", dir.str("ramp.pfm"), "--out", dir.str("n.pfm")}).code == 0);
  const auto n = std::get<NormalField>(io::read_pfm(io::read_file(dir / "n.pfm")));
  CHECK(n == compute_normals(DepthMap(ramp)));
  for (const auto& v : n.vectors.data()) CHECK(v == Normal{-1.0, 0.0, 1.0});
  REQUIRE(run({"normals", "--gt", dir.str("flat.pfm"), "--out", dir.str("f.pfm")}).code == 0);
  const auto flat = std::get<NormalField>(io::read_pfm(io::read_file(dir / "f.pfm")));
  for (const auto& v : flat.vectors.data()) CHECK(v == Normal{0.0, 0.0, 1.0});
}
