// periscat command line: forward | noise | image | compare
#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "periscat/pipeline.hpp"

namespace {

using periscat::ExperimentConfig;

struct Options {
  std::string config;
  std::string data;
  std::string out;
  std::optional<std::uint64_t> seed;
};

ExperimentConfig load(const Options& o) {
  ExperimentConfig cfg = o.config.empty() ? periscat::parse_config("") : periscat::load_config(o.config);
  if (!o.out.empty()) cfg.output.directory = o.out;
  if (o.seed) cfg.noise.seed = *o.seed;
  return cfg;
}

void report(const std::string& verb, const nlohmann::json& s, double seconds) {
  std::printf("%s: config %s, %.1f s\n", verb.c_str(), s.value("config_hash", "").c_str(), seconds);
  if (s.contains("fields"))
    for (const auto& [kind, f] : s["fields"].items()) {
      std::printf("  %-4s max %.6g, mask fraction %.4f", kind.c_str(), f["max"].get<double>(),
                  f["mask_volume_fraction"].get<double>());
      if (f.contains("jaccard")) std::printf(", jaccard %.4f", f["jaccard"].get<double>());
      std::printf("\n");
    }
  if (s.contains("max_residual")) std::printf("  max residual %.3g\n", s["max_residual"].get<double>());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic-layer scattering data and sampling-method imaging"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* cmd, bool needs_data) {
    cmd->add_option("--config", o.config, "YAML experiment config (defaults when omitted)")->check(CLI::ExistingFile);
    auto* data = cmd->add_option("--data", o.data, needs_data ? "Input data file" : "Output data file");
    if (needs_data) data->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "Output directory (overrides output.directory)");
    cmd->add_option("--seed", o.seed, "Noise seed (overrides noise.seed)");
  };
  auto* fwd = app.add_subcommand("forward", "Solve for every source and write the Rayleigh data file");
  auto* noise = app.add_subcommand("noise", "Add noise.delta relative noise to a data file");
  auto* image = app.add_subcommand("image", "Evaluate the imaging functional(s) and export volumes");
  auto* cmp = app.add_subcommand("compare", "New functional against OSM with mask overlap report");
  add_common(fwd, false);
  add_common(noise, true);
  add_common(image, true);
  add_common(cmp, true);

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig cfg = load(o);
    const auto t0 = std::chrono::steady_clock::now();
    nlohmann::json s;
    std::string verb;
    if (fwd->parsed()) {
      verb = "forward";
      s = periscat::run_forward(cfg, o.data);
    } else if (noise->parsed()) {
      verb = "noise";
      s = periscat::run_noise(cfg, o.data);
    } else if (image->parsed()) {
      verb = "image";
      s = periscat::run_image(cfg, o.data);
    } else {
      verb = "compare";
      s = periscat::run_compare(cfg, o.data);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(verb, s, secs);
  } catch (const periscat::ConfigError& e) {
    std::cerr << "periscat: config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "periscat: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
