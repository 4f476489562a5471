/*
   Copyright 2026 The shflab Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "shflab/kernels.hpp"
#include "shflab/she_sim.hpp"

namespace shflab::cli {

enum class ExperimentKind {
  JfunTable,
  Wpair,
  SecondMomentLadder,
  SensitivityCurve,
  ChaosVsMc,
  SlabScaling,
  ToySuite,
};

std::string to_string(ExperimentKind k);
ExperimentKind experiment_from_string(const std::string& s);

struct LatticeConfig {
  double box_side = 12.8;
  /// 0 picks the smallest power of two with h <= eps/2.
  int n = 0;
  /// dt is the largest 1/N <= dt_ratio * eps^2.
  double dt_ratio = 0.125;
  bool operator==(const LatticeConfig&) const = default;
};

struct QuadratureConfig {
  double rel_tol = 1e-8;
  long simplex_samples = 100000;
  int chaos_order = 6;
  bool operator==(const QuadratureConfig&) const = default;
};

/// Centred gaussian bump used for both g and g'.
struct TestFunctionConfig {
  double width = 0.3;
  double mass = 1.0;
  bool operator==(const TestFunctionConfig&) const = default;
};

struct JfunConfig {
  double t_min = 1e-6;
  double t_max = 1.0;
  int points = 61;
  bool operator==(const JfunConfig&) const = default;
};

struct ToyConfig {
  int n = 12;
  std::vector<double> rho = {0.2, 0.5, 0.9};
  long mc_samples = 40000;
  bool operator==(const ToyConfig&) const = default;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::JfunTable;
  double theta = 0.0;
  std::vector<double> eps_ladder = {0.2, 0.1};
  std::vector<double> tau_grid = {0.0, 0.1, 0.3, 1.0};
  long replicas = 200;
  std::uint64_t seed = 1;
  std::string mollifier = "gaussian";
  LatticeConfig lattice;
  QuadratureConfig quadrature;
  TestFunctionConfig test_function;
  JfunConfig jfun;
  ToyConfig toy;
  /// Directory for the CSV and JSON sidecar; empty writes nothing.
  std::string output = "shflab-out";

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses and range-checks a JSON config; absent keys take defaults and an
/// empty document is the all-defaults config. Unknown keys, wrong types and
/// range violations are reported together in one ConfigError.
ExperimentConfig validate_config(const std::string& text);
nlohmann::json to_json(const ExperimentConfig& c);
std::string serialize_config(const ExperimentConfig& c);
/// SHA-256 of the compact serialisation, hex encoded.
std::string config_digest(const ExperimentConfig& c);

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ResultRecord {
  std::string experiment;
  std::string config_digest;
  std::string version = SHFLAB_VERSION;
  double wall_seconds = 0.0;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<Check> checks;
  nlohmann::json metadata = nlohmann::json::object();

  bool passed() const;
  /// Header plus rows at 17 significant digits; no timing, so reruns match
  /// byte for byte.
  std::string csv() const;
  nlohmann::json sidecar(const ExperimentConfig& config) const;
};

/// Runs the configured experiment and, unless config.output is empty, writes
/// <output>/<experiment>.csv and <output>/<experiment>.json.
ResultRecord run_experiment(const ExperimentConfig& config);

void write_result(const ResultRecord& record, const ExperimentConfig& config,
                  const std::filesystem::path& dir);

/// Lattice for one rung of the eps ladder.
sim::Lattice lattice_for(const LatticeConfig& c, double eps);
kernels::TestFunctionPair centred_pair(double width, double mass);

}  // namespace shflab::cli
