#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bsheet/errors.hpp"
#include "bsheet/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Brownian sheet experiments"};
  app.require_subcommand(0, 1);

  std::string list_kind;
  bool as_json = false;
  app.add_option("--list", list_kind, "List experiment kinds, or describe one")->expected(0, 1);
  app.add_flag("--json", as_json, "Machine-readable output for --list");

  struct Args {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<unsigned> jobs;
  };
  std::vector<std::pair<CLI::App*, Args>> subs;
  subs.reserve(bsheet::experiment_kinds().size());
  for (const auto& kind : bsheet::experiment_kinds()) {
    auto& [sub, args] = subs.emplace_back(app.add_subcommand(kind, "Run a " + kind + " experiment"), Args{});
    sub->add_option("--config", args.config, "JSON config file (defaults used when omitted)");
    sub->add_option("--seed", args.seed, "Seed, overrides the config");
    sub->add_option("--out", args.out, "Output directory, overrides the config");
    sub->add_option("--jobs", args.jobs, "Worker threads, 0 for all cores");
  }

  CLI11_PARSE(app, argc, argv);

  if (app.count("--list") > 0) {
    try {
      std::cout << bsheet::list_experiments(
          as_json, list_kind.empty() ? std::nullopt : std::optional<std::string>(list_kind));
      return 0;
    } catch (const bsheet::Error& e) {
      std::cerr << e.what() << "\n";
      return 1;
    }
  }

  for (auto& [sub, args] : subs) {
    if (!sub->parsed()) continue;
    nlohmann::json raw = nlohmann::json::object();
    if (!args.config.empty()) {
      std::ifstream is(args.config);
      if (!is) {
        std::cerr << "cannot read " << args.config << "\n";
        return bsheet::kExitValidation;
      }
      raw = nlohmann::json::parse(is, nullptr, false);
      if (raw.is_discarded()) {
        std::cerr << "malformed JSON in " << args.config << "\n";
        return bsheet::kExitValidation;
      }
    }
    if (raw.is_object() && !raw.contains("kind")) raw["kind"] = sub->get_name();
    if (raw.is_object() && raw.at("kind") != sub->get_name()) {
      std::cerr << "config kind " << raw.at("kind").dump() << " does not match subcommand " << sub->get_name() << "\n";
      return bsheet::kExitValidation;
    }
    const auto outcome = bsheet::run_config(raw, args.seed, args.out, args.jobs);
    for (const auto& c : outcome.checks)
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.value << " (threshold " << c.threshold << ")"
                << (c.detail.empty() ? "" : "  " + c.detail) << "\n";
    std::cout << outcome.message << "\nmanifest: " << outcome.manifest_path.string() << "\n";
    return outcome.exit_code;
  }

  std::cout << app.help();
  return 0;
}
