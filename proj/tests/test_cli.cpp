#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "varfast/cli.hpp"
#include "varfast/errors.hpp"

using namespace varfast;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "varfast");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Runs the real binary; returns its exit status.
int run_binary(const std::string& env, const std::string& args) {
  const std::string cmd = env + " \"" VARFAST_CLI_PATH "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("varfast_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::size_t count_lines(const std::string& s, const std::string& prefix = "") {
  std::istringstream in(s);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) == 0) ++n;
  }
  return n;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("generate writes an image and a trace") {
    const fs::path dir = temp_dir("gen");
    const CliResult r = run({"generate", "--seed", "3", "--scales", "3", "--out", dir.string()});
    CHECK(r.code == 0);
    REQUIRE(fs::exists(dir / "image.f64"));
    REQUIRE(fs::exists(dir / "trace.json"));
    const TokenMap img = read_image(dir / "image.f64");
    CHECK(img.height() == 8);
    CHECK(img.channels() == 3);
    const auto j = nlohmann::json::parse(slurp(dir / "trace.json"));
    CHECK(j["seed"] == 3);
    CHECK(j["mode"] == "exact");
    CHECK(j["stage1_tokens"] == std::vector<int>{1, 5, 21});
    CHECK(j["bounds"]["composed"] == 0.0);
  }

  TEST_CASE("generate output is byte identical across runs and thread counts") {
    const fs::path a = temp_dir("det_a");
    const fs::path b = temp_dir("det_b");
    CHECK(run_binary("VARFAST_THREADS=1", "generate --seed 9 --mode fast --out " + a.string()) == 0);
    CHECK(run_binary("VARFAST_THREADS=4", "generate --seed 9 --mode fast --out " + b.string()) == 0);
    CHECK(slurp(a / "image.f64") == slurp(b / "image.f64"));
    auto ja = nlohmann::json::parse(slurp(a / "trace.json"));
    auto jb = nlohmann::json::parse(slurp(b / "trace.json"));
    ja.erase("wall_ms");
    jb.erase("wall_ms");
    CHECK(ja == jb);
  }

  TEST_CASE("fast mode with an oversized entry bound exits 2") {
    const fs::path dir = temp_dir("range");
    CHECK(run_binary("", "generate --mode fast --r-bound 50 --out " + dir.string()) == 2);
  }

  TEST_CASE("bench prints rows and slopes") {
    const CliResult r = run({"bench", "--k-min", "2", "--k-max", "4"});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("K,n,L_K,mode,stage,mults,adds,exps,wall_ms\n", 0) == 0);
    CHECK(count_lines(r.out) == 1 + 3 * 2 * 3 + 6);
    CHECK(count_lines(r.out, "slope,") == 6);
  }

  TEST_CASE("bench rejects a short range") {
    CHECK(run({"bench", "--k-min", "3", "--k-max", "4"}).code == 1);
  }

  TEST_CASE("verify reports every suite") {
    const CliResult r = run({"verify", "--trials", "20", "--scales", "3"});
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    CHECK(keys == std::vector<std::string>{"B1", "B2", "B4", "B5", "C1", "mode_equiv"});
    CHECK(j["B1"]["trials"] == 20);
    CHECK(j["B4"].contains("max_ratio_alt"));
  }

  TEST_CASE("verify exits 3 when a bound is violated") {
    CHECK(run({"verify", "--trials", "20", "--scales", "2", "--bound-scale", "1e-3"}).code == 3);
  }

  TEST_CASE("compare passes at the default settings") {
    const CliResult r = run({"compare", "--seed", "0", "--scales", "3"});
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["pass"] == true);
    CHECK(j["inf_norm_diff"].get<double>() <= j["composed_bound"].get<double>());
  }

  TEST_CASE("compare with a tiny delta passes or reports a range error") {
    const int code = run({"compare", "--scales", "3", "--delta", "1e-12"}).code;
    CHECK((code == 0 || code == 2));
  }

  TEST_CASE("phase prints a CSV with NA on infeasible rows") {
    const CliResult r = run({"phase", "--n", "4096", "--delta", "1e-3", "--c-list", "0.1,0.5,5"});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("c,R,b,g,status,err\n", 0) == 0);
    CHECK(count_lines(r.out) == 4);
    CHECK(r.out.find(",ok,") != std::string::npos);
    CHECK(r.out.find(",FAIL,NA") != std::string::npos);
  }

  TEST_CASE("phase rejects a malformed c list") {
    CHECK(run({"phase", "--c-list", "0.1,abc"}).code == 1);
    CHECK(run({"phase", "--c-list", "0.5,0.1"}).code == 1);
  }

  TEST_CASE("command-line flags override the config file") {
    const fs::path dir = temp_dir("cfg");
    {
      std::ofstream cfg(dir / "run.cfg");
      cfg << "# comment\nseed = 5\nnum_scales = 2\nmode = fast\n";
    }
    const CliResult r = run({"generate", "--config", (dir / "run.cfg").string(), "--seed", "6", "--out", dir.string()});
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "trace.json"));
    CHECK(j["seed"] == 6);
    CHECK(j["mode"] == "fast");
    CHECK(j["config"]["num_scales"] == 2);
  }

  TEST_CASE("config errors exit 1") {
    const fs::path dir = temp_dir("badcfg");
    {
      std::ofstream cfg(dir / "bad.cfg");
      cfg << "colour = blue\n";
    }
    CHECK(run({"generate", "--config", (dir / "bad.cfg").string(), "--out", dir.string()}).code == 1);
    CHECK(run({"generate", "--config", (dir / "missing.cfg").string()}).code == 1);
    CHECK(run({"generate", "--d", "0"}).code == 1);
    CHECK(run({"generate", "--scales", "12"}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
    CHECK(run({"--help"}).code == 0);
  }

  TEST_CASE("config parsing") {
    const auto kv = parse_config_text("a = 1\n\n  # only a comment\nb=two # trailing\n");
    CHECK(kv.size() == 2);
    CHECK(kv.at("a") == "1");
    CHECK(kv.at("b") == "two");
    CHECK_THROWS_AS(parse_config_text("novalue\n"), ConfigError);
    RunConfig cfg;
    apply_config_value(cfg, "kernel", "catmullrom");
    CHECK(cfg.model.kernel == KernelChoice::CatmullRom);
    CHECK_THROWS_AS(apply_config_value(cfg, "delta", "0.5"), ConfigError);
    CHECK_THROWS_AS(apply_config_value(cfg, "alpha", "x"), ConfigError);
  }

  TEST_CASE("image round trip") {
    const fs::path dir = temp_dir("img");
    TokenMap img(2, 3, 2);
    for (std::size_t i = 0; i < img.size(); ++i) img.data()[i] = 0.1 * static_cast<double>(i) - 0.3;
    write_image(dir / "x.f64", img);
    CHECK(read_image(dir / "x.f64") == img);
    CHECK(slurp(dir / "x.f64").rfind("2 3 2\n", 0) == 0);
  }
}
