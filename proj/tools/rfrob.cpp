// rfrob <experiment> [--config file.json] [--set key=value ...] [--out dir]
//
// Writes <out>/<experiment>/<timestamp>/{data.csv, summary.json, meta.json}.
// Exit status: 0 if every contract passes, 1 if some contract fails, 2 on
// errors (meta.json is then marked incomplete).

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "experiments.hpp"

namespace fs = std::filesystem;
using rfrob::cli::json;

namespace {

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

std::string utc_stamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

fs::path fresh_dir(const fs::path& parent, const std::string& stamp) {
  fs::path dir = parent / stamp;
  for (int k = 1; fs::exists(dir); ++k) dir = parent / (stamp + "-" + std::to_string(k));
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rough-field Frobenius experiments"};
  std::string experiment, config_path, out_flag;
  std::vector<std::string> sets;
  std::string names;
  for (const auto& [k, v] : rfrob::cli::registry()) names += (names.empty() ? "" : " | ") + k;
  app.add_option("experiment", experiment, "Experiment id: " + names)->required();
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--set", sets, "Override a config key (key=value, value parsed as JSON when possible)");
  app.add_option("--out", out_flag, "Output root (default: config 'out', then $RFROB_OUT, then ./runs)");
  app.set_version_flag("--version", rfrob::kVersion);
  CLI11_PARSE(app, argc, argv);

  json config = json::object();
  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      config = json::parse(in);
      if (!config.is_object()) throw std::invalid_argument("config must be a JSON object");
      if (config.contains("experiment") && config["experiment"] != experiment)
        throw std::invalid_argument("config is for experiment " + config["experiment"].dump());
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--set expects key=value, got '" + s + "'");
      config[s.substr(0, eq)] = parse_value(s.substr(eq + 1));
    }
  } catch (const std::exception& e) {
    std::cerr << "rfrob: " << e.what() << "\n";
    return 2;
  }

  fs::path root = "runs";
  if (!out_flag.empty()) root = out_flag;
  else if (config.contains("out")) root = config["out"].get<std::string>();
  else if (const char* env = std::getenv("RFROB_OUT"); env && *env) root = env;

  const std::string stamp = utc_stamp();
  json meta = {{"experiment", experiment}, {"version", rfrob::kVersion}, {"timestamp", stamp},
               {"config", config},         {"incomplete", true}};
  fs::path dir;
  try {
    dir = fresh_dir(root / experiment, stamp);
  } catch (const std::exception& e) {
    std::cerr << "rfrob: cannot create output directory: " << e.what() << "\n";
    return 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto result = rfrob::cli::run_experiment(experiment, config);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(dir / "data.csv", result.csv);
    write_text(dir / "summary.json", result.summary().dump(2) + "\n");
    meta["config"] = result.config;
    meta["runtime_seconds"] = secs;
    meta["incomplete"] = false;
    write_text(dir / "meta.json", meta.dump(2) + "\n");
    for (const auto& c : result.contracts)
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.value << " " << c.relation << " "
                << c.threshold << "\n";
    std::cout << "output: " << dir.string() << "\n";
    return result.pass() ? 0 : 1;
  } catch (const std::exception& e) {
    meta["error"] = std::string(e.what());
    try {
      write_text(dir / "meta.json", meta.dump(2) + "\n");
    } catch (...) {
    }
    std::cerr << "rfrob: " << experiment << ": " << e.what() << "\n";
    return 2;
  }
}
