// Copyright 2026 The putmech Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: design privacy mechanisms, compare them against
// the exhaustive oracle, verify error exponents, and evaluate divergences.
//
//   putmech design  --config problem.json [--out report.json]
//   putmech compare --config sweep.json   [--out sweep.csv]
//   putmech verify  --config problem.json [--out report.json]
//   putmech measure --p 0.5,0.5 --q 0.25,0.75 [--utility renyi:0.5]
//
// Exit codes: 0 ok, 2 validation error, 3 infeasible perturbation
// (negative mechanism entry), 4 solver failure, 5 verification failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "putmech/experiment.hpp"
#include "putmech/putmech.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNegativeEntry = 3;
constexpr int kExitSolverFailure = 4;
constexpr int kExitVerifyFailed = 5;

putmech::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw putmech::ValidationError("cannot open config file: " + path);
  putmech::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw putmech::ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  return j;
}

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw putmech::ValidationError("cannot open output file: " + out_path);
  out << text;
}

putmech::Vec parse_csv_vector(const std::string& text) {
  putmech::Vec v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
  return v;
}

void apply_overrides(putmech::ExperimentConfig& cfg, const std::string& utility,
                     std::optional<double> grid_step, std::optional<long long> seed) {
  if (!utility.empty()) cfg.utility = putmech::parse_utility(utility);
  if (grid_step) {
    if (!(*grid_step > 0.0 && *grid_step < 1.0))
      throw putmech::ValidationError("--grid-step must lie in (0,1)");
    cfg.grid.resolution = *grid_step;
  }
  if (seed) cfg.seed = static_cast<uint64_t>(*seed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy mechanism design for hypothesis testing under "
               "mutual-information leakage constraints"};
  app.require_subcommand(1);

  std::string config_path, out_path, utility_text, p_text, q_text;
  std::optional<double> grid_step;
  std::optional<long long> seed;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", config_path, "JSON problem description");
    if (needs_config) opt->required();
    cmd->add_option("--out", out_path, "output path (default: stdout)");
    cmd->add_option("--utility", utility_text, "kl or renyi:<alpha>");
    cmd->add_option("--grid-step", grid_step, "oracle grid step");
    cmd->add_option("--seed", seed, "seed for randomized verification");
  };

  CLI::App* design = app.add_subcommand("design", "design an optimal mechanism");
  add_common(design, true);
  CLI::App* compare = app.add_subcommand(
      "compare", "sweep budgets and compare against the exhaustive optimum");
  add_common(compare, true);
  CLI::App* verify =
      app.add_subcommand("verify", "check error exponents of a mechanism");
  add_common(verify, true);
  CLI::App* measure = app.add_subcommand("measure", "divergence calculator");
  measure->add_option("--p", p_text, "comma-separated distribution")->required();
  measure->add_option("--q", q_text, "comma-separated distribution")->required();
  measure->add_option("--utility", utility_text, "kl or renyi:<alpha>");
  measure->add_option("--out", out_path, "output path (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (design->parsed() || compare->parsed() || verify->parsed()) {
      putmech::ExperimentConfig cfg = putmech::parse_config(load_json(config_path));
      apply_overrides(cfg, utility_text, grid_step, seed);
      if (design->parsed()) {
        write_output(putmech::run_design(cfg).dump(2), out_path);
      } else if (compare->parsed()) {
        write_output(putmech::run_compare_csv(cfg), out_path);
      } else {
        const putmech::VerifyOutcome outcome = putmech::run_verify(cfg);
        write_output(outcome.report.dump(2), out_path);
        if (!outcome.passed) {
          std::cerr << "verify: checks failed\n";
          return kExitVerifyFailed;
        }
      }
    } else if (measure->parsed()) {
      const putmech::Distribution p(parse_csv_vector(p_text));
      const putmech::Distribution q(parse_csv_vector(q_text));
      std::optional<double> alpha;
      if (!utility_text.empty()) {
        const putmech::Utility u = putmech::parse_utility(utility_text);
        if (u.kind == putmech::Utility::Kind::kRenyi) alpha = u.alpha;
      }
      write_output(putmech::run_measure(p, q, alpha).dump(2), out_path);
    }
  } catch (const putmech::NegativeEntry& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNegativeEntry;
  } catch (const putmech::NoConvergence& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolverFailure;
  } catch (const putmech::NumericalFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolverFailure;
  } catch (const putmech::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
