// Command-line front end: cavity <command> [options]
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cavity/errors.hpp"
#include "cavity/io.hpp"
#include "cavity/run.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

int run(int argc, char** argv) {
  CLI::App app{"Cavity photon creation: coefficients, spectra, energies and checks"};
  std::string command, config_path, out_path, format;
  std::string p, gamma, epsilon, L0, tau, state;
  std::vector<std::string> sets;
  bool strict = false;
  app.add_option("command", command, "coeffs | spectrum | energy | rates | integrate | verify | sweep")->required();
  app.add_option("--config", config_path, "flat key = value config file (or an emitted result file)");
  app.add_option("--p", p, "resonance index");
  app.add_option("--gamma", gamma, "detuning ratio");
  app.add_option("--epsilon", epsilon, "vibration amplitude");
  app.add_option("--L0", L0, "mean cavity length");
  app.add_option("--tau", tau, "slow-time grid start:step:stop, list or value");
  app.add_option("--state", state, "vacuum | fock:mode=M,N=X | coherent:mode=M,alpha=A,phi=F | thermal:T=X,cutoff=N");
  app.add_option("--set", sets, "any config key, as key=value");
  app.add_option("--out", out_path, "output file (stdout when absent)");
  app.add_option("--format", format, "csv | json");
  app.add_flag("--strict", strict, "treat truncation warnings as errors");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  cavity::io::Config cfg;
  try {
    if (!config_path.empty()) cavity::io::load_config_file(cfg, config_path);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw cavity::io::ConfigError("--set expects key=value, got '" + kv + "'");
      cfg.set(cavity::io::trim(kv.substr(0, eq)), kv.substr(eq + 1));
    }
    if (!p.empty()) cfg.set("cavity.p", p);
    if (!gamma.empty()) cfg.set("cavity.gamma", gamma);
    if (!epsilon.empty()) cfg.set("cavity.epsilon", epsilon);
    if (!L0.empty()) cfg.set("cavity.L0", L0);
    if (!tau.empty()) cfg.set("run.tau", tau);
    if (!state.empty()) cfg.set("run.state", state);
    if (!format.empty()) cfg.set("output.format", format);
    cfg.set("run.command", command);
    const std::string& fmt = cfg.str("output.format");
    if (fmt != "csv" && fmt != "json") throw cavity::io::ConfigError("output.format: expected csv or json");
  } catch (const cavity::io::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  cavity::RunResult result;
  try {
    result = cavity::run_command(command, cfg);
  } catch (const cavity::io::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const cavity::regime_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const cavity::numeric_error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::ostringstream text;
  cavity::io::emit(result.series, cfg, cfg.str("output.format"), text);
  if (out_path.empty()) {
    std::cout << text.str();
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
      std::cerr << "cannot open output file '" << out_path << "'\n";
      return kExitNumeric;
    }
    out << text.str();
    if (!out) {
      std::cerr << "write failed for '" << out_path << "'\n";
      return kExitNumeric;
    }
  }

  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  if (!result.failure.empty()) {
    std::cerr << "numeric failure: " << result.failure << "\n";
    return kExitNumeric;
  }
  if (strict && !result.warnings.empty()) {
    std::cerr << "strict mode: " << result.warnings.size() << " truncation warning(s)\n";
    return kExitNumeric;
  }
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}
