// homodyne_sim: run, validate and reproduce homodyne entanglement-test
// experiments from JSON configs.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hsim/experiment.hpp"

namespace {

using nlohmann::json;
namespace ex = hsim::experiment;

enum Exit { kOk = 0, kRuntime = 1, kInvalid = 2 };

int fail(const std::string& kind, const std::string& message, json details = json::array()) {
  std::cerr << json{{"error", {{"kind", kind}, {"message", message}, {"details", details}}}}
                   .dump()
            << '\n';
  return kind == "validation" || kind == "config" ? kInvalid : kRuntime;
}

json load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

int run_config(const json& cfg, const ex::RunOptions& opt) {
  try {
    const auto res = ex::run(cfg, opt);
    json files = json::array();
    for (const auto& f : res.outputs) files.push_back(f.string());
    std::cout << json{{"outputs", files}, {"summary", res.manifest.at("summary")}}.dump(2)
              << '\n';
    return kOk;
  } catch (const ex::ConfigError& e) {
    return fail("validation", e.what(), ex::to_json(e.report).at("errors"));
  } catch (const hsim::DimensionLimitError& e) {
    return fail("dimension_limit", e.what());
  } catch (const std::exception& e) {
    return fail("runtime", e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entanglement tests under homodyne detection with finite local oscillators"};
  app.require_subcommand(1);

  ex::RunOptions opt;
  std::string config_path, out_dir = ".";
  std::uint64_t seed = 0;
  int cutoff = 0;

  auto add_run_flags = [&](CLI::App* sc) {
    sc->add_option("--out", out_dir, "output directory");
    sc->add_option("--seed", seed, "RNG seed (overrides the config)");
    sc->add_option("--jobs", opt.jobs, "concurrent sweep points")->check(CLI::PositiveNumber);
    sc->add_option("--cutoff-override", cutoff, "Fock cutoff for every mode")
        ->check(CLI::NonNegativeNumber);
  };

  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("--config", config_path, "config JSON")->required();
  add_run_flags(run);

  auto* val = app.add_subcommand("validate", "check a config and estimate its size");
  val->add_option("--config", config_path, "config JSON")->required();

  std::string preset_name;
  bool print_only = false;
  auto* pre = app.add_subcommand("preset", "run a built-in figure preset");
  pre->add_option("name", preset_name, "fig2a|fig2b|fig3a|fig3b|fig4a|fig4b|fig5")->required();
  pre->add_flag("--print-config", print_only, "print the preset config and exit");
  add_run_flags(pre);

  auto* list = app.add_subcommand("list-presets", "list built-in presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage", e.what());
  }

  auto finish_opts = [&](CLI::App* sc) {
    opt.out_dir = out_dir;
    if (sc->count("--seed")) opt.seed = seed;
    if (sc->count("--cutoff-override")) opt.cutoff_override = cutoff;
  };

  if (*list) {
    for (const auto& p : ex::presets()) std::cout << p.name << "\t" << p.description << '\n';
    return kOk;
  }
  if (*val) {
    json cfg;
    try {
      cfg = load(config_path);
    } catch (const std::exception& e) {
      return fail("config", e.what());
    }
    const auto report = ex::validate_config(cfg);
    std::cout << ex::to_json(report).dump(2) << '\n';
    return report.ok() ? kOk : kInvalid;
  }
  if (*run) {
    finish_opts(run);
    json cfg;
    try {
      cfg = load(config_path);
    } catch (const std::exception& e) {
      return fail("config", e.what());
    }
    return run_config(cfg, opt);
  }
  if (*pre) {
    finish_opts(pre);
    try {
      const auto& p = ex::preset(preset_name);
      if (print_only) {
        std::cout << p.config.dump(2) << '\n';
        return kOk;
      }
      return run_config(p.config, opt);
    } catch (const std::invalid_argument& e) {
      return fail("usage", e.what());
    }
  }
  return kOk;
}
