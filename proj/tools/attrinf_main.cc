// Copyright 2026 The attrinf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: run / validate / synth / report.
//
// Exit codes: 0 success, 1 some cells failed or the config has issues,
// 2 usage or fatal error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "attrinf/experiment.h"
#include "attrinf/synth.h"

namespace {

int Run(const std::string& config_path, const std::string& out_override) {
  attrinf::ExperimentConfig config = attrinf::LoadConfig(config_path);
  if (!out_override.empty()) config.output_dir = out_override;
  for (const auto& issue : attrinf::ValidateConfig(config)) {
    std::cerr << (issue.scope == attrinf::ConfigIssue::Scope::kConfig
                      ? "error: "
                      : "warning: ")
              << attrinf::ToString(issue) << '\n';
  }
  const attrinf::RunSummary summary = attrinf::RunExperiment(config);
  std::cout << "cells: " << summary.cells
            << "  failed: " << summary.failures.size() << "  output: "
            << config.output_dir << '\n';
  for (const auto& f : summary.failures) {
    std::cerr << "failed: trial " << f.trial << ' ' << f.phase << ' ' << f.cell
              << ": " << f.message << '\n';
  }
  return summary.ok() ? 0 : 1;
}

int Validate(const std::string& config_path) {
  const attrinf::ExperimentConfig config = attrinf::LoadConfig(config_path);
  const auto issues = attrinf::ValidateConfig(config);
  for (const auto& issue : issues) std::cout << attrinf::ToString(issue) << '\n';
  if (issues.empty()) std::cout << "ok\n";
  return issues.empty() ? 0 : 1;
}

int Synth(const std::string& spec_path, const std::string& out_path,
          std::string schema_path, std::uint64_t seed) {
  std::ifstream in(spec_path);
  if (!in) throw attrinf::ConfigError("cannot open spec " + spec_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw attrinf::ConfigError(spec_path + ": " + e.what());
  }
  const attrinf::SynthSpec spec = attrinf::SynthSpec::FromJson(j);
  const attrinf::SynthData data = attrinf::SynthGenerate(spec, seed);
  if (schema_path.empty()) {
    std::filesystem::path p(out_path);
    p.replace_extension(".schema.json");
    schema_path = p.string();
  }
  std::ofstream csv(out_path);
  if (!csv) throw attrinf::Error("cannot write " + out_path);
  attrinf::WriteDataset(csv, data.data);
  std::ofstream schema(schema_path);
  if (!schema) throw attrinf::Error("cannot write " + schema_path);
  schema << data.data.schema->ToJson().dump(2) << '\n';
  std::cout << "wrote " << data.data.size() << " records to " << out_path
            << ", schema to " << schema_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attribute inference attacks on tabular classifiers"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  auto* run = app.add_subcommand("run", "Run an experiment grid");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_override, "Override the output directory");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check an experiment config");
  validate->add_option("config", validate_path, "Experiment config (JSON)")
      ->required();

  std::string spec_path, synth_out, schema_out;
  std::uint64_t seed = 0;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic data set");
  synth->add_option("spec", spec_path, "Generator spec (JSON)")->required();
  synth->add_option("-o,--output", synth_out, "CSV output path")->required();
  synth->add_option("--schema", schema_out,
                    "Schema output path (default: <output>.schema.json)");
  synth->add_option("--seed", seed, "Generator seed");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Rebuild tables from a run");
  report->add_option("dir", report_dir, "Output directory of a run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*run) return Run(config_path, out_override);
    if (*validate) return Validate(validate_path);
    if (*synth) return Synth(spec_path, synth_out, schema_out, seed);
    if (*report) {
      attrinf::WriteReport(report_dir);
      std::cout << "tables written to "
                << (std::filesystem::path(report_dir) / "tables").string()
                << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
