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

#ifndef DPRELEASE_RELEASE_H_
#define DPRELEASE_RELEASE_H_

#include <openssl/evp.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "absl/time/clock.h"
#include "absl/time/time.h"
#include "dprelease/accountant.h"
#include "dprelease/aggregates.h"
#include "dprelease/dataset.h"
#include "dprelease/exact_sum.h"
#include "dprelease/feasibility.h"
#include "dprelease/mechanisms.h"
#include "dprelease/random_source.h"
#include "dprelease/sensitivity.h"
#include "dprelease/status_macros.h"
#include "json.hpp"

namespace dprelease {

enum class DpType { kPure, kApproximate };
enum class QueryKind { kCount, kSum, kMean, kMedian, kHistogram };

inline const char* QueryKindName(QueryKind kind) {
  switch (kind) {
    case QueryKind::kCount:
      return "count";
    case QueryKind::kSum:
      return "sum";
    case QueryKind::kMean:
      return "mean";
    case QueryKind::kMedian:
      return "median";
    case QueryKind::kHistogram:
      return "histogram";
  }
  return "unknown";
}

inline std::optional<QueryKind> ParseQueryKind(const std::string& s) {
  for (QueryKind k : {QueryKind::kCount, QueryKind::kSum, QueryKind::kMean,
                      QueryKind::kMedian, QueryKind::kHistogram}) {
    if (s == QueryKindName(k)) return k;
  }
  return std::nullopt;
}

// Histogram block as written in the plan; turned into a HistogramSpec by
// validation.
struct HistogramConfig {
  std::optional<std::vector<std::string>> categories;
  std::optional<double> min;
  std::optional<double> max;
  std::optional<int> bins;
};

struct QuerySpec {
  std::string query_id;
  QueryKind kind = QueryKind::kCount;
  std::string column;  // may be empty for count
  std::optional<std::string> group_by;
  std::optional<HistogramConfig> histogram;
};

struct EconomicModelConfig {
  double budget = 0.0;
  double expected_cost = 0.0;
  int64_t population = 0;
};

// Declarative description of one release run, as read from a plan file.
struct ReleasePlan {
  DpType dp_type = DpType::kPure;
  std::optional<double> delta;
  double total_epsilon = 0.0;
  std::vector<QuerySpec> queries;
  std::map<std::string, std::pair<double, double>> bounds;  // raw column keys
  std::vector<double> weights;  // empty means equal weights
  std::optional<EconomicModelConfig> economic_model;
  nlohmann::json source;  // parsed plan file, for the digest
};

inline constexpr double kDefaultHistogramBins = 20;

namespace internal {

inline std::string Sha256Hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) absl::StrAppendFormat(&hex, "%02x", md[i]);
  return hex;
}

inline absl::Status InvalidPlan(const std::vector<std::string>& errors) {
  return absl::InvalidArgumentError(
      absl::StrCat("Invalid release plan: ", absl::StrJoin(errors, "; ")));
}

}  // namespace internal

// Structural parse of a JSON plan. Type errors are collected and reported
// together; semantic checks happen in ValidatePlan.
inline absl::StatusOr<ReleasePlan> ParsePlan(const nlohmann::json& j) {
  std::vector<std::string> errors;
  ReleasePlan plan;
  plan.source = j;
  if (!j.is_object()) return internal::InvalidPlan({"plan must be an object"});

  static const std::set<std::string> kKnownKeys = {
      "dp_type", "total_epsilon", "delta", "queries",
      "weights", "bounds",        "economic_model"};
  for (const auto& [key, _] : j.items()) {
    if (!kKnownKeys.contains(key)) errors.push_back(absl::StrCat("unknown key '", key, "'"));
  }

  if (!j.contains("dp_type") || !j["dp_type"].is_string()) {
    errors.push_back("dp_type must be \"pure\" or \"approximate\"");
  } else if (j["dp_type"] == "pure") {
    plan.dp_type = DpType::kPure;
  } else if (j["dp_type"] == "approximate") {
    plan.dp_type = DpType::kApproximate;
  } else {
    errors.push_back("dp_type must be \"pure\" or \"approximate\"");
  }

  if (!j.contains("total_epsilon") || !j["total_epsilon"].is_number()) {
    errors.push_back("total_epsilon must be a number");
  } else {
    plan.total_epsilon = j["total_epsilon"].get<double>();
  }

  if (j.contains("delta") && !j["delta"].is_null()) {
    if (!j["delta"].is_number()) {
      errors.push_back("delta must be a number");
    } else {
      plan.delta = j["delta"].get<double>();
    }
  }

  if (j.contains("bounds")) {
    if (!j["bounds"].is_object()) {
      errors.push_back("bounds must map column names to [lower, upper]");
    } else {
      for (const auto& [column, pair] : j["bounds"].items()) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
            !pair[1].is_number()) {
          errors.push_back(absl::StrCat("bounds for '", column,
                                        "' must be [lower, upper]"));
          continue;
        }
        plan.bounds[column] = {pair[0].get<double>(), pair[1].get<double>()};
      }
    }
  }

  if (j.contains("weights")) {
    if (!j["weights"].is_array()) {
      errors.push_back("weights must be an array of numbers");
    } else {
      for (const auto& w : j["weights"]) {
        if (!w.is_number()) {
          errors.push_back("weights must be an array of numbers");
          break;
        }
        plan.weights.push_back(w.get<double>());
      }
    }
  }

  if (j.contains("economic_model") && !j["economic_model"].is_null()) {
    const auto& m = j["economic_model"];
    if (!m.is_object() || !m.contains("budget") || !m["budget"].is_number() ||
        !m.contains("expected_cost") || !m["expected_cost"].is_number() ||
        !m.contains("population") || !m["population"].is_number_integer()) {
      errors.push_back(
          "economic_model needs numeric budget, expected_cost and integer "
          "population");
    } else {
      plan.economic_model = EconomicModelConfig{
          m["budget"].get<double>(), m["expected_cost"].get<double>(),
          m["population"].get<int64_t>()};
    }
  }

  if (!j.contains("queries") || !j["queries"].is_array()) {
    errors.push_back("queries must be an array");
  } else {
    size_t index = 0;
    for (const auto& q : j["queries"]) {
      const std::string where = absl::StrCat("queries[", index++, "]");
      if (!q.is_object()) {
        errors.push_back(absl::StrCat(where, " must be an object"));
        continue;
      }
      QuerySpec spec;
      if (!q.contains("query_id") || !q["query_id"].is_string()) {
        errors.push_back(absl::StrCat(where, ".query_id must be a string"));
      } else {
        spec.query_id = q["query_id"].get<std::string>();
      }
      std::optional<QueryKind> kind;
      if (q.contains("kind") && q["kind"].is_string()) {
        kind = ParseQueryKind(q["kind"].get<std::string>());
      }
      if (!kind.has_value()) {
        errors.push_back(absl::StrCat(
            where, ".kind must be one of count, sum, mean, median, histogram"));
      } else {
        spec.kind = *kind;
      }
      if (q.contains("column")) {
        if (!q["column"].is_string()) {
          errors.push_back(absl::StrCat(where, ".column must be a string"));
        } else {
          spec.column = q["column"].get<std::string>();
        }
      }
      if (q.contains("group_by") && !q["group_by"].is_null()) {
        if (!q["group_by"].is_string()) {
          errors.push_back(absl::StrCat(where, ".group_by must be a string"));
        } else {
          spec.group_by = q["group_by"].get<std::string>();
        }
      }
      if (q.contains("histogram") && !q["histogram"].is_null()) {
        const auto& h = q["histogram"];
        HistogramConfig config;
        bool ok = h.is_object();
        if (ok && h.contains("categories")) {
          if (!h["categories"].is_array()) {
            ok = false;
          } else {
            config.categories.emplace();
            for (const auto& c : h["categories"]) {
              if (!c.is_string()) {
                ok = false;
                break;
              }
              config.categories->push_back(c.get<std::string>());
            }
          }
        }
        if (ok && h.contains("min")) {
          ok = h["min"].is_number();
          if (ok) config.min = h["min"].get<double>();
        }
        if (ok && h.contains("max")) {
          ok = h["max"].is_number();
          if (ok) config.max = h["max"].get<double>();
        }
        if (ok && h.contains("bins")) {
          ok = h["bins"].is_number_integer();
          if (ok) config.bins = h["bins"].get<int>();
        }
        if (!ok) {
          errors.push_back(absl::StrCat(
              where,
              ".histogram must hold categories[] or numeric min/max/bins"));
        }
        spec.histogram = std::move(config);
      }
      plan.queries.push_back(std::move(spec));
    }
  }

  if (!errors.empty()) return internal::InvalidPlan(errors);
  return plan;
}

inline absl::StatusOr<ReleasePlan> ParsePlanText(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    return absl::InvalidArgumentError("Plan file is not valid JSON");
  }
  return ParsePlan(j);
}

inline absl::StatusOr<ReleasePlan> LoadPlan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    return absl::NotFoundError(
        absl::StrCat("Cannot open plan file ", path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParsePlanText(buffer.str());
}

// A plan checked against the dataset it will run on.
struct ValidatedPlan {
  ReleasePlan plan;
  std::vector<double> weights;  // resolved, one per query
  std::map<std::string, ClippingBounds> bounds;  // canonical column name
  std::vector<std::optional<HistogramSpec>> histograms;  // per query
  std::vector<std::string> warnings;
  std::string digest;
};

// Checks weights, bounds, column types, the delta rule (delta < 1/n for
// approximate plans) and, when an economic model is given, warns if the total
// epsilon exceeds the feasible maximum. Only structural problems are errors.
inline absl::StatusOr<ValidatedPlan> ValidatePlan(const ReleasePlan& plan,
                                                  const Dataset& data) {
  std::vector<std::string> errors;
  ValidatedPlan out;
  out.plan = plan;

  if (!std::isfinite(plan.total_epsilon) || plan.total_epsilon <= 0.0) {
    errors.push_back(absl::StrCat("total_epsilon must be positive, got ",
                                  plan.total_epsilon));
  }
  if (plan.dp_type == DpType::kPure && plan.delta.has_value()) {
    errors.push_back("pure plans must not set delta");
  }
  if (plan.dp_type == DpType::kApproximate) {
    if (!plan.delta.has_value()) {
      errors.push_back("approximate plans require delta");
    } else {
      const double n = static_cast<double>(data.size());
      const double limit = n > 0 ? 1.0 / n : 1.0;
      if (!(*plan.delta > 0.0) || !(*plan.delta < limit)) {
        errors.push_back(absl::StrFormat(
            "delta %g must lie in (0, 1/n) = (0, %g) for n = %d rows",
            *plan.delta, limit, data.size()));
      }
    }
  }

  for (const auto& [column, raw] : plan.bounds) {
    auto b = ClippingBounds::Create(raw.first, raw.second);
    if (!b.ok()) {
      errors.push_back(absl::StrCat("bounds for '", column,
                                    "': ", b.status().message()));
      continue;
    }
    if (!Dataset::IsNumericColumn(column)) {
      errors.push_back(
          absl::StrCat("bounds given for non-numeric column '", column, "'"));
      continue;
    }
    out.bounds.emplace(internal::CanonicalColumn(column), *b);
  }

  if (plan.queries.empty()) {
    errors.push_back("plan must contain at least one query");
  }
  std::set<std::string> ids;
  for (const auto& q : plan.queries) {
    const std::string where = absl::StrCat("query '", q.query_id, "'");
    std::optional<HistogramSpec> hist;
    if (q.query_id.empty()) {
      errors.push_back("query_id must be nonempty");
    } else if (q.query_id.find('/') != std::string::npos) {
      errors.push_back(absl::StrCat(where, ": query_id must not contain '/'"));
    } else if (!ids.insert(q.query_id).second) {
      errors.push_back(absl::StrCat("duplicate query_id '", q.query_id, "'"));
    }
    if (q.group_by.has_value() &&
        !Dataset::DefaultCategories(*q.group_by).has_value()) {
      errors.push_back(absl::StrCat(
          where, ": group_by must be a closed-set column (rhythm or sex)"));
    }
    const std::string col = internal::CanonicalColumn(q.column);
    switch (q.kind) {
      case QueryKind::kCount:
        break;
      case QueryKind::kSum:
      case QueryKind::kMean:
      case QueryKind::kMedian:
        if (!Dataset::IsNumericColumn(q.column)) {
          errors.push_back(absl::StrCat(where, ": '", q.column,
                                        "' is not a numeric column"));
        } else if (!out.bounds.contains(col) &&
                   !plan.bounds.contains(q.column)) {
          errors.push_back(absl::StrCat(where, ": no bounds for column '",
                                        q.column, "'"));
        }
        break;
      case QueryKind::kHistogram: {
        const HistogramConfig config = q.histogram.value_or(HistogramConfig{});
        if (Dataset::IsCategoricalColumn(q.column)) {
          auto cats = config.categories.has_value()
                          ? config.categories
                          : Dataset::DefaultCategories(q.column);
          if (!cats.has_value()) {
            errors.push_back(absl::StrCat(
                where, ": histogram on '", q.column, "' needs categories"));
            break;
          }
          auto spec = HistogramSpec::Categorical(q.column, *cats);
          if (!spec.ok()) {
            errors.push_back(absl::StrCat(where, ": ", spec.status().message()));
          } else {
            hist = *spec;
          }
        } else if (Dataset::IsNumericColumn(q.column)) {
          std::optional<double> lo = config.min, hi = config.max;
          if (const auto it = out.bounds.find(col); it != out.bounds.end()) {
            if (!lo) lo = it->second.lower();
            if (!hi) hi = it->second.upper();
          }
          if (!lo || !hi) {
            errors.push_back(absl::StrCat(
                where, ": numeric histogram needs min/max or column bounds"));
            break;
          }
          auto spec = HistogramSpec::Numeric(
              q.column, *lo, *hi,
              config.bins.value_or(static_cast<int>(kDefaultHistogramBins)));
          if (!spec.ok()) {
            errors.push_back(absl::StrCat(where, ": ", spec.status().message()));
          } else {
            hist = *spec;
          }
        } else {
          errors.push_back(
              absl::StrCat(where, ": unknown column '", q.column, "'"));
        }
        break;
      }
    }
    if (q.kind == QueryKind::kCount && !q.column.empty() &&
        !Dataset::IsNumericColumn(q.column) &&
        !Dataset::IsCategoricalColumn(q.column)) {
      errors.push_back(absl::StrCat(where, ": unknown column '", q.column, "'"));
    }
    out.histograms.push_back(std::move(hist));
  }

  if (plan.weights.empty()) {
    out.weights.assign(plan.queries.size(), 1.0);
  } else if (plan.weights.size() != plan.queries.size()) {
    errors.push_back(absl::StrCat("weights has ", plan.weights.size(),
                                  " entries for ", plan.queries.size(),
                                  " queries"));
  } else {
    for (double w : plan.weights) {
      if (!std::isfinite(w) || w <= 0.0) {
        errors.push_back(absl::StrCat("weights must be positive, got ", w));
        break;
      }
    }
    out.weights = plan.weights;
  }

  if (plan.economic_model.has_value()) {
    const auto& m = *plan.economic_model;
    auto model = EconomicModel::Create(m.budget, m.expected_cost, m.population);
    if (!model.ok()) {
      errors.push_back(
          absl::StrCat("economic_model: ", model.status().message()));
    } else if (std::isfinite(plan.total_epsilon) &&
               !IsFeasible(*model, plan.total_epsilon)) {
      out.warnings.push_back(absl::StrFormat(
          "feasibility: total_epsilon %g exceeds the economically feasible "
          "maximum %.6g for budget %g, expected cost %g, population %d",
          plan.total_epsilon, MaxFeasibleEpsilon(*model), m.budget,
          m.expected_cost, m.population));
    }
  }

  if (!errors.empty()) return internal::InvalidPlan(errors);
  out.digest = internal::Sha256Hex(plan.source.dump());
  return out;
}

struct ReportEntry {
  NoisyResult result;
  std::string parent_query_id;
  QueryKind kind = QueryKind::kCount;
  std::string column;
  std::optional<std::string> group;
  bool suppressed = false;
};

// The publishable artifact. The total epsilon is the exact sum of the
// per-result spends and equals what was charged to the ledger.
struct DpReport {
  std::string plan_digest;
  std::vector<ReportEntry> results;
  double total_epsilon = 0.0;
  double total_delta = 0.0;
  std::vector<std::string> warnings;
  absl::Time timestamp;
};

namespace internal {

struct Leaf {
  size_t query_index;
  std::optional<std::string> group;
  std::string id;
  double epsilon;
  double delta;
};

inline absl::StatusOr<std::vector<Leaf>> PlanLeaves(const ValidatedPlan& v) {
  const ReleasePlan& plan = v.plan;
  ASSIGN_OR_RETURN(std::vector<double> query_eps,
                   Distribute(plan.total_epsilon, v.weights));
  // Delta is split only among queries that use additive noise.
  std::vector<double> query_delta(plan.queries.size(), 0.0);
  if (plan.dp_type == DpType::kApproximate) {
    std::vector<size_t> additive;
    std::vector<double> additive_weights;
    for (size_t i = 0; i < plan.queries.size(); ++i) {
      if (plan.queries[i].kind != QueryKind::kMedian) {
        additive.push_back(i);
        additive_weights.push_back(v.weights[i]);
      }
    }
    if (!additive.empty()) {
      ASSIGN_OR_RETURN(std::vector<double> shares,
                       Distribute(*plan.delta, additive_weights));
      for (size_t k = 0; k < additive.size(); ++k) {
        query_delta[additive[k]] = shares[k];
      }
    }
  }

  std::vector<Leaf> leaves;
  for (size_t i = 0; i < plan.queries.size(); ++i) {
    const QuerySpec& q = plan.queries[i];
    if (!q.group_by.has_value()) {
      leaves.push_back({i, std::nullopt, q.query_id, query_eps[i], query_delta[i]});
      continue;
    }
    const std::vector<std::string> groups =
        *Dataset::DefaultCategories(*q.group_by);
    const std::vector<double> ones(groups.size(), 1.0);
    ASSIGN_OR_RETURN(std::vector<double> eps, Distribute(query_eps[i], ones));
    std::vector<double> del(groups.size(), 0.0);
    if (query_delta[i] > 0.0) {
      ASSIGN_OR_RETURN(del, Distribute(query_delta[i], ones));
    }
    for (size_t g = 0; g < groups.size(); ++g) {
      leaves.push_back({i, groups[g], absl::StrCat(q.query_id, "/", groups[g]),
                        eps[g], del[g]});
    }
  }
  std::vector<double> all_eps;
  for (const auto& l : leaves) all_eps.push_back(l.epsilon);
  AdjustLastToTotal(all_eps, plan.total_epsilon);
  for (size_t k = 0; k < leaves.size(); ++k) leaves[k].epsilon = all_eps[k];
  return leaves;
}

}  // namespace internal

// Runs a validated plan. All leaf charges (one per query, or one per group for
// grouped queries) are admitted to the ledger atomically before any query
// touches the data; a refusal runs nothing. Empty groups are reported as
// suppressed but stay charged. Refuses a noise-off random source.
inline absl::StatusOr<DpReport> Execute(const ValidatedPlan& validated,
                                        const Dataset& data,
                                        BudgetLedger& ledger,
                                        RandomSource& rng) {
  if (rng.noise_off()) {
    return absl::FailedPreconditionError(
        "Refusing to publish a release computed without noise");
  }
  const ReleasePlan& plan = validated.plan;
  ASSIGN_OR_RETURN(std::vector<internal::Leaf> leaves,
                   internal::PlanLeaves(validated));

  std::vector<ChargeRequest> charges;
  std::vector<double> leaf_eps, leaf_delta;
  for (const auto& leaf : leaves) {
    ASSIGN_OR_RETURN(PrivacyParams params,
                     PrivacyParams::Create(leaf.epsilon, leaf.delta));
    charges.push_back({leaf.id, params});
    leaf_eps.push_back(leaf.epsilon);
    leaf_delta.push_back(leaf.delta);
  }
  RETURN_IF_ERROR(ledger.ChargeBatch(charges));

  DpReport report;
  report.plan_digest = validated.digest;
  report.warnings = validated.warnings;
  report.timestamp = absl::Now();
  report.total_epsilon = ExactSum(leaf_eps);
  report.total_delta = ExactSum(leaf_delta);

  // Group membership per grouped column, computed once.
  std::map<std::string, std::vector<std::string>> group_labels;
  for (const auto& q : plan.queries) {
    if (q.group_by.has_value() && !group_labels.contains(*q.group_by)) {
      ASSIGN_OR_RETURN(group_labels[*q.group_by],
                       data.CategoricalColumn(*q.group_by));
    }
  }

  for (size_t k = 0; k < leaves.size(); ++k) {
    const internal::Leaf& leaf = leaves[k];
    const QuerySpec& q = plan.queries[leaf.query_index];
    const PrivacyParams& params = charges[k].cost;

    std::vector<size_t> rows;
    if (leaf.group.has_value()) {
      const auto& labels = group_labels.at(*q.group_by);
      for (size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] == *leaf.group) rows.push_back(r);
      }
    } else {
      rows.resize(data.size());
      for (size_t r = 0; r < rows.size(); ++r) rows[r] = r;
    }

    ReportEntry entry;
    entry.parent_query_id = q.query_id;
    entry.kind = q.kind;
    entry.column = q.column;
    entry.group = leaf.group;

    auto numeric = [&]() -> absl::StatusOr<std::vector<double>> {
      ASSIGN_OR_RETURN(std::vector<double> column,
                       data.NumericColumn(q.column));
      std::vector<double> out;
      out.reserve(rows.size());
      for (size_t r : rows) out.push_back(column[r]);
      return out;
    };
    auto bounds = [&]() {
      return validated.bounds.at(internal::CanonicalColumn(q.column));
    };

    absl::StatusOr<NoisyResult> result;
    switch (q.kind) {
      case QueryKind::kCount:
        result = DpCount(static_cast<int64_t>(rows.size()), params, rng);
        break;
      case QueryKind::kSum: {
        ASSIGN_OR_RETURN(std::vector<double> values, numeric());
        result = DpSum(values, bounds(), params, rng);
        break;
      }
      case QueryKind::kMean:
      case QueryKind::kMedian: {
        ASSIGN_OR_RETURN(std::vector<double> values, numeric());
        if (values.empty()) {
          entry.suppressed = true;
          entry.result.epsilon_spent = params.epsilon();
          entry.result.delta_spent = params.delta();
          entry.result.value = std::nan("");
          entry.result.bounds = bounds();
          entry.result.mechanism = q.kind == QueryKind::kMedian
                                       ? MechanismKind::kExponential
                                       : internal::AdditiveKind(params);
          report.warnings.push_back(absl::StrCat(
              "suppressed: empty group for '", leaf.id, "'"));
          break;
        }
        if (q.kind == QueryKind::kMean) {
          result = DpMean(values, bounds(), params, rng);
        } else {
          ASSIGN_OR_RETURN(PrivacyParams pure,
                           PrivacyParams::Pure(params.epsilon()));
          result = DpMedian(values, bounds(), pure, rng);
        }
        break;
      }
      case QueryKind::kHistogram: {
        const HistogramSpec& spec = *validated.histograms[leaf.query_index];
        if (spec.is_categorical()) {
          ASSIGN_OR_RETURN(std::vector<std::string> column,
                           data.CategoricalColumn(q.column));
          std::vector<std::string> values;
          for (size_t r : rows) values.push_back(column[r]);
          result = DpHistogram(std::span<const std::string>(values), spec,
                               params, rng);
        } else {
          ASSIGN_OR_RETURN(std::vector<double> values, numeric());
          result =
              DpHistogram(std::span<const double>(values), spec, params, rng);
        }
        break;
      }
    }
    if (!entry.suppressed) {
      if (!result.ok()) return result.status();
      entry.result = *std::move(result);
      if (entry.result.clamped) {
        report.warnings.push_back(absl::StrCat(
            "clamped: '", leaf.id, "' noisy value fell outside its bounds"));
      }
    }
    entry.result.query_id = leaf.id;
    report.results.push_back(std::move(entry));
  }
  return report;
}

inline nlohmann::json ReportToJson(const DpReport& report) {
  nlohmann::json results = nlohmann::json::array();
  for (const auto& e : report.results) {
    nlohmann::json r;
    r["query_id"] = e.result.query_id;
    r["parent_query_id"] = e.parent_query_id;
    r["kind"] = QueryKindName(e.kind);
    r["column"] = e.column;
    r["group"] = e.group.has_value() ? nlohmann::json(*e.group) : nullptr;
    if (e.suppressed) {
      r["value"] = nullptr;
    } else if (std::holds_alternative<double>(e.result.value)) {
      r["value"] = e.result.scalar();
    } else {
      r["value"] = e.result.bins();
      r["bin_labels"] = e.result.bin_labels;
    }
    r["epsilon_spent"] = e.result.epsilon_spent;
    r["delta_spent"] = e.result.delta_spent;
    r["mechanism"] = MechanismName(e.result.mechanism);
    r["clamped"] = e.result.clamped;
    r["suppressed"] = e.suppressed;
    if (e.suppressed) r["suppression_reason"] = "empty group";
    if (e.result.bounds.has_value()) {
      r["bounds"] = {e.result.bounds->lower(), e.result.bounds->upper()};
    }
    results.push_back(std::move(r));
  }
  return {{"plan_digest", report.plan_digest},
          {"results", std::move(results)},
          {"total_epsilon", report.total_epsilon},
          {"total_delta", report.total_delta},
          {"warnings", report.warnings},
          {"timestamp", FormatTimestamp(report.timestamp)},
          {"seed_policy", "not recorded"}};
}

// Sidecar path for a histogram result: <report stem>.<query id>.plot.tsv,
// with '/' in grouped ids replaced by '_'.
inline std::filesystem::path PlotDataPath(const std::filesystem::path& report,
                                          const std::string& query_id) {
  std::string safe = query_id;
  for (char& c : safe) {
    if (c == '/' || c == '\\' || c == ' ') c = '_';
  }
  std::filesystem::path out = report.parent_path() / report.stem();
  out += absl::StrCat(".", safe, ".plot.tsv");
  return out;
}

// Writes the report JSON plus one two-column (label, noisy count) plot-data
// file per histogram. Returns every path written.
inline absl::StatusOr<std::vector<std::filesystem::path>> EmitReport(
    const DpReport& report, const std::filesystem::path& path) {
  if (report.results.empty()) {
    return absl::InvalidArgumentError("A report must contain at least one query");
  }
  std::vector<std::filesystem::path> written;
  {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
      return absl::UnavailableError(
          absl::StrCat("Cannot write report ", path.string()));
    }
    out << ReportToJson(report).dump(2) << "\n";
    if (!out) {
      return absl::UnavailableError(
          absl::StrCat("Failed writing report ", path.string()));
    }
  }
  written.push_back(path);
  for (const auto& e : report.results) {
    if (e.suppressed || !std::holds_alternative<std::vector<double>>(e.result.value)) {
      continue;
    }
    const auto plot = PlotDataPath(path, e.result.query_id);
    std::ofstream out(plot, std::ios::trunc);
    if (!out) {
      return absl::UnavailableError(
          absl::StrCat("Cannot write plot data ", plot.string()));
    }
    const auto& bins = e.result.bins();
    for (size_t i = 0; i < bins.size(); ++i) {
      out << e.result.bin_labels[i] << "\t" << absl::StrFormat("%.0f", bins[i])
          << "\n";
    }
    written.push_back(plot);
  }
  return written;
}

}  // namespace dprelease

#endif  // DPRELEASE_RELEASE_H_
