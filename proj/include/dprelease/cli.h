//
// Copyright 2026 The dprelease Authors
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
//

#ifndef DPRELEASE_CLI_H_
#define DPRELEASE_CLI_H_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "dprelease/accountant.h"
#include "dprelease/dataset.h"
#include "dprelease/feasibility.h"
#include "dprelease/mechanisms.h"
#include "dprelease/random_source.h"
#include "dprelease/release.h"
#include "dprelease/sensitivity.h"
#include "dprelease/tester.h"

namespace dprelease {
namespace cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRefused = 2;
inline constexpr int kExitIo = 3;

inline int ExitCodeFor(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kOk:
      return kExitOk;
    case absl::StatusCode::kResourceExhausted:
    case absl::StatusCode::kAlreadyExists:
      return kExitRefused;
    case absl::StatusCode::kNotFound:
    case absl::StatusCode::kUnavailable:
    case absl::StatusCode::kPermissionDenied:
    case absl::StatusCode::kDataLoss:
      return kExitIo;
    default:
      return kExitValidation;
  }
}

inline int Fail(const absl::Status& status, std::ostream& err) {
  err << "error: " << status.message() << "\n";
  return ExitCodeFor(status);
}

inline absl::Status WriteTextFile(const std::filesystem::path& path,
                                  const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    return absl::UnavailableError(absl::StrCat("Cannot write ", path.string()));
  }
  out << text;
  if (!out) {
    return absl::UnavailableError(
        absl::StrCat("Failed writing ", path.string()));
  }
  return absl::OkStatus();
}

inline absl::Status CheckWritableDir(const std::filesystem::path& file) {
  const auto dir = file.has_parent_path() ? file.parent_path()
                                          : std::filesystem::path(".");
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    return absl::NotFoundError(
        absl::StrCat("Output directory ", dir.string(), " does not exist"));
  }
  return absl::OkStatus();
}

struct IngestArgs {
  std::string data;
  bool strict = false;
  bool validate = false;
};

// Prints row counts and drop reasons only; never a record value.
inline int CmdIngest(const IngestArgs& args, std::ostream& out,
                     std::ostream& err) {
  auto data = IngestCsv(args.data, args.strict);
  if (!data.ok()) return Fail(data.status(), err);
  const IngestDiagnostics& d = data->diagnostics();
  out << "rows_read: " << d.rows_read << "\n";
  out << "rows_kept: " << data->size() << "\n";
  out << "rows_dropped: " << d.rows_dropped << "\n";
  for (const auto& [reason, count] : d.drop_reasons) {
    out << "  dropped (" << reason << "): " << count << "\n";
  }
  return kExitOk;
}

struct FeasibilityArgs {
  double budget = 0.0;
  double expected_cost = 0.0;
  int64_t population = 0;
  std::optional<double> epsilon;
};

inline int CmdFeasibility(const FeasibilityArgs& args, std::ostream& out,
                          std::ostream& err) {
  auto model =
      EconomicModel::Create(args.budget, args.expected_cost, args.population);
  if (!model.ok()) return Fail(model.status(), err);
  out << absl::StrFormat("epsilon_max = %.6g\n", MaxFeasibleEpsilon(*model));
  if (!args.epsilon.has_value()) return kExitOk;
  if (!std::isfinite(*args.epsilon) || *args.epsilon <= 0.0) {
    return Fail(absl::InvalidArgumentError("epsilon must be positive"), err);
  }
  const double cost = std::expm1(*args.epsilon) * model->expected_cost() *
                      static_cast<double>(model->population());
  if (IsFeasible(*model, *args.epsilon)) {
    out << absl::StrFormat(
        "epsilon = %g: FEASIBLE (expected cost %.6g <= budget %.6g)\n",
        *args.epsilon, cost, model->budget());
    return kExitOk;
  }
  out << absl::StrFormat(
      "epsilon = %g: INFEASIBLE (expected cost %.6g > budget %.6g)\n",
      *args.epsilon, cost, model->budget());
  return kExitRefused;
}

struct ReleaseArgs {
  std::string plan;
  std::string data;
  std::string ledger;
  std::string out;
  bool strict = false;
  std::optional<double> ledger_budget;
  std::optional<uint64_t> seed;
};

// Validate, charge the ledger (persisted before any output), execute, emit.
inline int CmdRelease(const ReleaseArgs& args, std::ostream& out,
                      std::ostream& err) {
  auto plan = LoadPlan(args.plan);
  if (!plan.ok()) return Fail(plan.status(), err);
  auto data = IngestCsv(args.data, args.strict);
  if (!data.ok()) return Fail(data.status(), err);
  auto validated = ValidatePlan(*plan, *data);
  if (!validated.ok()) return Fail(validated.status(), err);
  if (auto s = CheckWritableDir(args.out); !s.ok()) return Fail(s, err);

  std::optional<BudgetLedger> ledger;
  if (std::filesystem::exists(args.ledger)) {
    auto loaded = BudgetLedger::Load(args.ledger);
    if (!loaded.ok()) return Fail(loaded.status(), err);
    ledger.emplace(*std::move(loaded));
  } else {
    const double total = args.ledger_budget.value_or(plan->total_epsilon);
    auto params = PrivacyParams::Create(total, plan->delta.value_or(0.0));
    if (!params.ok()) return Fail(params.status(), err);
    ledger.emplace(*params);
  }
  if (ledger->state() != LedgerState::kOpen) {
    err << "release refused: ledger " << args.ledger << " is "
        << (ledger->state() == LedgerState::kClosed ? "closed" : "exhausted")
        << "\n";
    return kExitRefused;
  }

  RandomSource rng = args.seed.has_value() ? RandomSource::Seeded(*args.seed)
                                           : RandomSource::FromEntropy();
  auto report = Execute(*validated, *data, *ledger, rng);
  if (!report.ok()) {
    if (report.status().code() == absl::StatusCode::kResourceExhausted ||
        report.status().code() == absl::StatusCode::kAlreadyExists) {
      err << "release refused: " << report.status().message() << "\n";
      return kExitRefused;
    }
    return Fail(report.status(), err);
  }
  if (auto s = ledger->Save(args.ledger); !s.ok()) return Fail(s, err);
  auto written = EmitReport(*report, args.out);
  if (!written.ok()) return Fail(written.status(), err);

  out << "released " << report->results.size() << " results, total epsilon "
      << nlohmann::json(report->total_epsilon).dump() << "\n";
  const BudgetAmount left = ledger->Remaining();
  out << absl::StrFormat("ledger remaining epsilon %.6g\n", left.epsilon);
  for (const auto& w : report->warnings) out << "warning: " << w << "\n";
  for (const auto& p : *written) out << "wrote " << p.string() << "\n";
  return kExitOk;
}

struct TestDpArgs {
  std::string mechanism;
  double epsilon = 1.0;
  std::optional<double> actual_epsilon;
  double delta = 0.0;
  int64_t trials = 100000;
  int bins = 20;
  double beta = 1e-9;
  int max_size = 2;
  std::optional<uint64_t> seed;
  std::string out = "verdict.json";
};

inline int CmdTestDp(const TestDpArgs& args, std::ostream& out,
                     std::ostream& err) {
  const auto catalog = MechanismCatalog();
  const CatalogEntry* entry = FindMechanism(catalog, args.mechanism);
  if (entry == nullptr) {
    std::vector<std::string> names;
    for (const auto& e : catalog) names.push_back(e.name);
    err << "error: unknown mechanism '" << args.mechanism
        << "'; available: " << absl::StrJoin(names, ", ") << "\n";
    return kExitValidation;
  }
  auto claimed = PrivacyParams::Create(args.epsilon, args.delta);
  if (!claimed.ok()) return Fail(claimed.status(), err);
  const double actual = args.actual_epsilon.value_or(args.epsilon);
  if (!std::isfinite(actual) || actual <= 0.0) {
    return Fail(absl::InvalidArgumentError("actual epsilon must be positive"),
                err);
  }
  DpTestConfig config{*claimed, args.trials, args.bins, args.beta};
  if (auto s = CheckConfig(config); !s.ok()) return Fail(s, err);
  if (auto s = CheckWritableDir(args.out); !s.ok()) return Fail(s, err);
  auto pairs = GenerateNeighborPairs(entry->domain, args.max_size);
  if (!pairs.ok()) return Fail(pairs.status(), err);

  RandomSource rng = args.seed.has_value() ? RandomSource::Seeded(*args.seed)
                                           : RandomSource::FromEntropy();
  auto verdict = TestMechanism(entry->build(actual), *pairs, config, rng);
  if (!verdict.ok()) return Fail(verdict.status(), err);
  const nlohmann::json j =
      VerdictToJson(*verdict, config, *pairs, entry->name);
  if (auto s = WriteTextFile(args.out, j.dump(2) + "\n"); !s.ok()) {
    return Fail(s, err);
  }
  out << absl::StrFormat(
      "%s at claimed epsilon %g: %s (worst excess %.4g, slack %.4g, %d "
      "pairs)\n",
      entry->name, args.epsilon, OutcomeName(verdict->outcome),
      verdict->worst_excess, verdict->slack_used, verdict->pairs_tested);
  out << "wrote " << args.out << "\n";
  return verdict->outcome == DpTestOutcome::kViolation ? kExitRefused
                                                       : kExitOk;
}

struct SynthArgs {
  int64_t rows = 10646;
  uint64_t seed = 1;
  std::string out;
};

inline int CmdSynth(const SynthArgs& args, std::ostream& out,
                    std::ostream& err) {
  auto data = Synthesize(args.rows, args.seed);
  if (!data.ok()) return Fail(data.status(), err);
  if (auto s = WriteCsv(*data, args.out); !s.ok()) return Fail(s, err);
  out << "wrote " << data->size() << " synthetic rows to " << args.out << "\n";
  return kExitOk;
}

inline int Run(int argc, const char* const* argv, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"Differentially private query release for ECG feature tables"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Check and summarize a CSV");
  ingest_cmd->add_option("--data", ingest.data, "CSV file")->required();
  ingest_cmd->add_flag("--strict", ingest.strict, "Fail on the first bad row");
  ingest_cmd->add_flag("--validate", ingest.validate,
                       "Only validate (the default behavior)");

  FeasibilityArgs feas;
  auto* feas_cmd =
      app.add_subcommand("feasibility", "Economic epsilon feasibility");
  feas_cmd->add_option("--budget", feas.budget, "Study budget B")->required();
  feas_cmd->add_option("--expected-cost", feas.expected_cost,
                       "Expected per-person breach cost E")
      ->required();
  feas_cmd->add_option("--population", feas.population, "Participants N")
      ->required();
  feas_cmd->add_option("--epsilon", feas.epsilon, "Epsilon to check");

  ReleaseArgs rel;
  auto* rel_cmd = app.add_subcommand("release", "Run a release plan");
  rel_cmd->add_option("--plan", rel.plan, "Plan JSON")->required();
  rel_cmd->add_option("--data", rel.data, "CSV file")->required();
  rel_cmd->add_option("--ledger", rel.ledger, "Budget ledger file")
      ->required();
  rel_cmd->add_option("--out", rel.out, "Report JSON path")->required();
  rel_cmd->add_flag("--strict", rel.strict, "Fail on the first bad row");
  rel_cmd->add_option("--ledger-budget", rel.ledger_budget,
                      "Total epsilon for a new ledger (default: plan total)");
  rel_cmd->add_option("--seed", rel.seed,
                      "Seed for reproducible test runs; never recorded");

  TestDpArgs tdp;
  auto* tdp_cmd = app.add_subcommand("test-dp", "Empirical DP tester");
  tdp_cmd->add_option("--mechanism", tdp.mechanism, "Catalog mechanism")
      ->required();
  tdp_cmd->add_option("--epsilon", tdp.epsilon, "Claimed epsilon")
      ->capture_default_str();
  tdp_cmd->add_option("--actual-epsilon", tdp.actual_epsilon,
                      "Epsilon the mechanism runs at (default: claimed)");
  tdp_cmd->add_option("--delta", tdp.delta, "Claimed delta")
      ->capture_default_str();
  tdp_cmd->add_option("--trials", tdp.trials, "Trials per side")
      ->capture_default_str();
  tdp_cmd->add_option("--bins", tdp.bins, "Histogram bins")
      ->capture_default_str();
  tdp_cmd->add_option("--beta", tdp.beta, "Per-frequency confidence")
      ->capture_default_str();
  tdp_cmd->add_option("--max-size", tdp.max_size, "Largest base database")
      ->capture_default_str();
  tdp_cmd->add_option("--seed", tdp.seed, "Seed");
  tdp_cmd->add_option("--out", tdp.out, "Verdict JSON path")
      ->capture_default_str();

  SynthArgs syn;
  auto* syn_cmd = app.add_subcommand("synth", "Write a synthetic dataset");
  syn_cmd->add_option("--rows", syn.rows, "Row count")->capture_default_str();
  syn_cmd->add_option("--seed", syn.seed, "Seed")->capture_default_str();
  syn_cmd->add_option("--out", syn.out, "CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  if (ingest_cmd->parsed()) return CmdIngest(ingest, out, err);
  if (feas_cmd->parsed()) return CmdFeasibility(feas, out, err);
  if (rel_cmd->parsed()) return CmdRelease(rel, out, err);
  if (tdp_cmd->parsed()) return CmdTestDp(tdp, out, err);
  if (syn_cmd->parsed()) return CmdSynth(syn, out, err);
  return kExitValidation;
}

inline int Run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  std::vector<const char*> argv = {"dprelease"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return Run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace cli
}  // namespace dprelease

#endif  // DPRELEASE_CLI_H_
