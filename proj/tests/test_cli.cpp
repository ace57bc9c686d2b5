#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "catch_amalgamated.hpp"
#include "experiments.hpp"

using namespace rfrob;
using namespace rfrob::expr;
using cli::json;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("rfrob_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(RFROB_BINARY) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// The single run directory below out/<experiment>.
fs::path run_dir(const fs::path& out, const std::string& experiment) {
  fs::path found;
  int count = 0;
  for (const auto& e : fs::directory_iterator(out / experiment)) found = e.path(), ++count;
  REQUIRE(count == 1);
  return found;
}

double eval(const std::string& text, const Point& p = {0, 0, 0}) { return parse_field_expr(text).scalar(p); }

}  // namespace

TEST_CASE("expression arithmetic and precedence") {
  CHECK(eval("2+3*4^2") == 50.0);
  CHECK(eval("-2^2") == -4.0);
  CHECK(eval("2^-1") == 0.5);
  CHECK(eval("2^3^2") == 512.0);
  CHECK(eval("(1 + 2) * 3 - 4 / 8") == 8.5);
  CHECK(eval("1.5e2") == 150.0);
  CHECK_THAT(eval("pi"), WithinAbs(M_PI, 0.0));
  CHECK_THAT(eval("x*y - z", {2, 3, 4}), WithinAbs(2.0, 0.0));
  CHECK_THAT(eval("sin(x) + cos(y) + exp(z)", {0.3, 0.4, 0.5}),
             WithinAbs(std::sin(0.3) + std::cos(0.4) + std::exp(0.5), 1e-15));
  CHECK(eval("sgn(x)", {-3, 0, 0}) == -1.0);
  CHECK(eval("sgn(x)") == 0.0);
  CHECK(eval("sqrt(abs(x))", {-9, 0, 0}) == 3.0);
  CHECK(eval("log(0)") == 0.0);
  CHECK(eval("1/x") == 0.0);
}

TEST_CASE("expression tuples") {
  const auto f = parse_field_expr("(1, y*log(abs(y)))");
  REQUIRE(f.dim() == 2);
  CHECK(f.variables() == 2);
  const Point v = f({0.0, 0.5, 0});
  CHECK(v[0] == 1.0);
  CHECK_THAT(v[1], WithinAbs(0.5 * std::log(0.5), 1e-16));
  CHECK(v[1] == f({0.0, 0.5, 0})[1]);
  CHECK(parse_field_expr("(x + 1)").dim() == 1);
  CHECK(parse_field_expr("((x), (y), 3)").dim() == 3);
  const auto X = to_field(f, 2, 0.5);
  CHECK(X.dim == 2);
  CHECK(X.box.hi[1] == 0.5);
  CHECK_THROWS_WITH(to_field(f, 3), ContainsSubstring("arity mismatch"));
  CHECK_THROWS_WITH(to_field(parse_field_expr("z"), 1), ContainsSubstring("beyond dimension"));
}

TEST_CASE("expression errors carry offsets") {
  auto offset_of = [](const std::string& text) -> long {
    try {
      parse_field_expr(text);
    } catch (const ParseError& e) {
      return static_cast<long>(e.offset());
    }
    return -1;
  };
  CHECK(offset_of("") == 0);
  CHECK(offset_of("  foo(x)") == 2);
  CHECK(offset_of("x +") == 3);
  CHECK(offset_of("sin x") == 4);
  CHECK(offset_of("1 2") == 2);
  CHECK(offset_of("(1, 2") == 5);
  CHECK(offset_of("log(1, 2)") == 5);
  CHECK(offset_of("(1,") == 3);
  CHECK(offset_of("(1, 2, 3, 4)") == 0);
  CHECK(offset_of("x $ y") == 2);
  CHECK_THROWS_WITH(parse_field_expr("q"), ContainsSubstring("unknown identifier 'q' at offset 0"));
  CHECK_THROWS_AS(parse_field_expr("(x"), std::invalid_argument);
}

TEST_CASE("configs reject unknown keys") {
  CHECK_THROWS_WITH(cli::merge_config("lp-check", {{"N", 64}}, {{"n", 32}}), ContainsSubstring("unknown config key 'n'"));
  const auto c = cli::merge_config("lp-check", {{"N", 64}, {"seed", 1}}, {{"seed", 5}, {"out", "x"}, {"experiment", "lp-check"}});
  CHECK(c["N"] == 64);
  CHECK(c["seed"] == 5);
  CHECK_FALSE(c.contains("out"));
  CHECK_THROWS_AS(cli::run_experiment("lp-check", {{"bogus", 1}}), std::invalid_argument);
  CHECK_THROWS_WITH(cli::run_experiment("nope", json::object()), ContainsSubstring("unknown experiment"));
  CHECK(cli::registry().size() == 9);
}

TEST_CASE("field catalog ids") {
  CHECK(cli::resolve_field("rotation")({1, 0, 0})[1] == 1.0);
  const auto X = cli::resolve_field("expr:(1, y)", 0.5, "lip:1");
  CHECK(X.claimed_modulus.has_value());
  CHECK(X.box.hi[0] == 0.5);
  CHECK_THROWS_AS(cli::resolve_field("unknown"), std::invalid_argument);
  CHECK_THROWS_AS(cli::resolve_field("expr:(1, "), ParseError);
}

TEST_CASE("small experiments run in process") {
  const auto lp = cli::run_experiment("lp-check", {{"N", 256}, {"fields", 3}});
  CHECK(lp.pass());
  CHECK(lp.results["bandwidth"] == 32);
  const auto para = cli::run_experiment("para-identity", {{"N", 256}, {"pairs", 2}});
  CHECK(para.pass());
  const auto mod = cli::run_experiment("modulus-lab", {{"grid", 4}});
  CHECK(mod.pass());
  CHECK(mod.results["closed_form_points"].get<int>() > 0);
  const auto sharp = cli::run_experiment("sharpness", {{"extents", json::array({0.2})}});
  CHECK(sharp.pass());
  const auto fail = cli::run_experiment("lp-check", {{"N", 256}, {"fields", 1}, {"tolerance", 0.0}});
  CHECK_FALSE(fail.pass());
  CHECK_THROWS_AS(cli::run_experiment("lp-check", {{"N", 256}, {"bandwidth", 100}}), std::invalid_argument);
}

TEST_CASE("binary writes a complete run directory") {
  TempDir tmp;
  REQUIRE(run("lp-check --set N=256 --set fields=2 --out " + tmp.path.string(), tmp.path / "log") == 0);
  const auto dir = run_dir(tmp.path, "lp-check");
  const auto summary = json::parse(slurp(dir / "summary.json"));
  const auto meta = json::parse(slurp(dir / "meta.json"));
  CHECK(summary["pass"] == true);
  CHECK(summary["contracts"].size() == 1);
  CHECK(meta["incomplete"] == false);
  CHECK(meta["config"]["N"] == 256);
  CHECK(meta["runtime_seconds"].get<double>() >= 0.0);
  CHECK(slurp(dir / "data.csv").rfind("field,sup_norm,residual\n", 0) == 0);
  CHECK_THAT(slurp(tmp.path / "log"), ContainsSubstring("PASS partition_residual"));
}

TEST_CASE("binary exit codes") {
  TempDir tmp;
  const auto out = " --out " + tmp.path.string();
  CHECK(run("lp-check --set N=256 --set fields=1 --set tolerance=0" + out, tmp.path / "log") == 1);
  CHECK_THAT(slurp(tmp.path / "log"), ContainsSubstring("FAIL partition_residual"));
  CHECK(run("lp-check --set bogus=1" + out, tmp.path / "log") == 2);
  CHECK_THAT(slurp(tmp.path / "log"), ContainsSubstring("unknown config key"));
  CHECK(run("no-such-experiment" + out, tmp.path / "log") == 2);
  CHECK(run("lp-check --set novalue" + out, tmp.path / "log") == 2);
  CHECK(run("--version", tmp.path / "log") == 0);
  CHECK_THAT(slurp(tmp.path / "log"), ContainsSubstring(kVersion));
}

TEST_CASE("failed runs leave an incomplete meta file") {
  TempDir tmp;
  REQUIRE(run("para-identity --set N=64 --set bandwidth=30 --out " + tmp.path.string(), tmp.path / "log") == 2);
  const auto meta = json::parse(slurp(run_dir(tmp.path, "para-identity") / "meta.json"));
  CHECK(meta["incomplete"] == true);
  CHECK_THAT(meta["error"].get<std::string>(), ContainsSubstring("use a finer grid"));
}

TEST_CASE("config files and output root precedence") {
  TempDir tmp;
  const auto cfg = tmp.path / "cfg.json";
  {
    std::ofstream out(cfg);
    out << R"({"experiment": "lp-check", "N": 128, "fields": 1, "out": ")" << (tmp.path / "from_config").string()
        << "\"}";
  }
  REQUIRE(run("lp-check --config " + cfg.string(), tmp.path / "log") == 0);
  CHECK(json::parse(slurp(run_dir(tmp.path / "from_config", "lp-check") / "meta.json"))["config"]["N"] == 128);
  REQUIRE(run("lp-check --config " + cfg.string() + " --set N=64 --out " + (tmp.path / "flag").string(),
              tmp.path / "log") == 0);
  CHECK(json::parse(slurp(run_dir(tmp.path / "flag", "lp-check") / "meta.json"))["config"]["N"] == 64);
  CHECK(run("para-identity --config " + cfg.string(), tmp.path / "log") == 2);
  CHECK_THAT(slurp(tmp.path / "log"), ContainsSubstring("config is for experiment"));
}

TEST_CASE("shipped configs parse and name their experiment") {
  const fs::path dir = fs::path(RFROB_SOURCE_DIR) / "configs";
  REQUIRE(fs::exists(dir));
  int count = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".json") continue;
    const auto cfg = json::parse(slurp(e.path()));
    INFO(e.path().string());
    REQUIRE(cfg.contains("experiment"));
    CHECK(cli::registry().count(cfg["experiment"].get<std::string>()) == 1);
    ++count;
  }
  CHECK(count >= 9);
}

TEST_CASE("repeated runs produce identical data") {
  TempDir a, b;
  for (const auto& args : {std::string("lp-check --set N=512 --set fields=3"),
                           std::string("modulus-lab --set grid=3"),
                           std::string("flow-cert --set pairs=20")}) {
    const std::string exp = args.substr(0, args.find(' '));
    REQUIRE(run(args + " --out " + a.path.string(), a.path / "log") == 0);
    REQUIRE(run(args + " --out " + b.path.string(), b.path / "log") == 0);
    CHECK(slurp(run_dir(a.path, exp) / "data.csv") == slurp(run_dir(b.path, exp) / "data.csv"));
  }
}

TEST_CASE("the sharp field as an expression") {
  const auto f = parse_field_expr("(1, y*log(abs(y)))");
  REQUIRE(f.dim() == 2);
  const auto v = f({0, 1.0 / M_E, 0});
  CHECK(v[0] == 1.0);
  CHECK_THAT(v[1], WithinAbs(-1.0 / M_E, 1e-15));
  CHECK(f({0.3, 0, 0})[1] == 0.0);
  const auto id = parse_field_expr("x");
  CHECK(id.dim() == 1);
  CHECK(to_field(id, 1).eval({0.25, 0, 0})[0] == 0.25);
}
