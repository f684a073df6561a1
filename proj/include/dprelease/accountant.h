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

#ifndef DPRELEASE_ACCOUNTANT_H_
#define DPRELEASE_ACCOUNTANT_H_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/time/clock.h"
#include "absl/time/time.h"
#include "dprelease/exact_sum.h"
#include "dprelease/mechanisms.h"
#include "json.hpp"

namespace dprelease {

// Remaining budget may reach zero, so it is not a PrivacyParams.
struct BudgetAmount {
  double epsilon = 0.0;
  double delta = 0.0;
};

enum class LedgerState { kOpen, kExhausted, kClosed };

struct LedgerEntry {
  std::string query_id;
  PrivacyParams spent;
  absl::Time timestamp;
};

struct ChargeRequest {
  std::string query_id;
  PrivacyParams cost;
};

inline std::string FormatTimestamp(absl::Time t) {
  return absl::FormatTime(absl::RFC3339_full, t, absl::UTCTimeZone());
}

// Sequential-composition account of a fixed total (epsilon, delta). The sum
// of all entries never exceeds the total; a rejected charge leaves the ledger
// untouched. Exhaustion is permanent, and a closed ledger accepts nothing.
//
// Not internally synchronized: concurrent callers must serialize charges.
class BudgetLedger {
 public:
  static constexpr double kTolerance = 1e-12;

  explicit BudgetLedger(PrivacyParams total, absl::Time created = absl::Now())
      : total_(total), created_(created) {}

  const PrivacyParams& total() const { return total_; }
  const std::vector<LedgerEntry>& entries() const { return entries_; }
  absl::Time created() const { return created_; }

  LedgerState state() const {
    if (closed_) return LedgerState::kClosed;
    if (Remaining().epsilon <= kTolerance) return LedgerState::kExhausted;
    return LedgerState::kOpen;
  }

  BudgetAmount Spent() const {
    std::vector<double> eps, del;
    eps.reserve(entries_.size());
    del.reserve(entries_.size());
    for (const auto& e : entries_) {
      eps.push_back(e.spent.epsilon());
      del.push_back(e.spent.delta());
    }
    return {ExactSum(eps), ExactSum(del)};
  }

  BudgetAmount Remaining() const {
    const BudgetAmount spent = Spent();
    return {std::max(0.0, total_.epsilon() - spent.epsilon),
            std::max(0.0, total_.delta() - spent.delta)};
  }

  absl::Status Charge(std::string query_id, const PrivacyParams& cost,
                      absl::Time now = absl::Now()) {
    std::vector<ChargeRequest> one;
    one.push_back({std::move(query_id), cost});
    return ChargeBatch(one, now);
  }

  // All-or-nothing admission of several charges.
  absl::Status ChargeBatch(std::span<const ChargeRequest> requests,
                           absl::Time now = absl::Now()) {
    if (closed_) {
      return absl::FailedPreconditionError("Ledger is closed");
    }
    if (state() == LedgerState::kExhausted) {
      return absl::ResourceExhaustedError("Ledger is exhausted");
    }
    std::set<std::string> seen;
    for (const auto& e : entries_) seen.insert(e.query_id);
    std::vector<double> eps, del;
    for (const auto& e : entries_) {
      eps.push_back(e.spent.epsilon());
      del.push_back(e.spent.delta());
    }
    for (const auto& r : requests) {
      if (!seen.insert(r.query_id).second) {
        return absl::AlreadyExistsError(
            absl::StrCat("Duplicate query id '", r.query_id, "'"));
      }
      eps.push_back(r.cost.epsilon());
      del.push_back(r.cost.delta());
    }
    const double new_eps = ExactSum(eps);
    const double new_del = ExactSum(del);
    if (new_eps > total_.epsilon() + kTolerance ||
        new_del > total_.delta() + kTolerance) {
      const BudgetAmount left = Remaining();
      return absl::ResourceExhaustedError(absl::StrCat(
          "Budget exceeded: requested epsilon ", new_eps - Spent().epsilon,
          " with ", left.epsilon, " remaining (delta requested ",
          new_del - Spent().delta, ", remaining ", left.delta, ")"));
    }
    for (const auto& r : requests) {
      entries_.push_back({r.query_id, r.cost, now});
    }
    return absl::OkStatus();
  }

  void Close(absl::Time now = absl::Now()) {
    closed_ = true;
    closed_at_ = now;
  }

  // Newline-delimited JSON: a header record, one record per charge, and an
  // optional trailing close record.
  std::string Serialize() const {
    std::ostringstream out;
    nlohmann::json header = {{"record", "ledger"},
                             {"total_epsilon", total_.epsilon()},
                             {"total_delta", total_.delta()},
                             {"created", FormatTimestamp(created_)}};
    out << header.dump() << "\n";
    for (const auto& e : entries_) {
      nlohmann::json line = {{"record", "charge"},
                             {"query_id", e.query_id},
                             {"epsilon", e.spent.epsilon()},
                             {"delta", e.spent.delta()},
                             {"timestamp", FormatTimestamp(e.timestamp)}};
      out << line.dump() << "\n";
    }
    if (closed_) {
      nlohmann::json line = {{"record", "close"},
                             {"timestamp", FormatTimestamp(closed_at_)}};
      out << line.dump() << "\n";
    }
    return out.str();
  }

  static absl::StatusOr<BudgetLedger> Parse(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::optional<BudgetLedger> ledger;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("record")) {
        return absl::DataLossError(
            absl::StrCat("Malformed ledger record on line ", line_no));
      }
      try {
        const std::string kind = j.at("record").get<std::string>();
        if (kind == "ledger") {
          if (ledger.has_value()) {
            return absl::DataLossError("Ledger file has two header records");
          }
          auto total = PrivacyParams::Create(j.at("total_epsilon").get<double>(),
                                             j.at("total_delta").get<double>());
          if (!total.ok()) return total.status();
          auto created = ParseTimestamp(j.at("created").get<std::string>());
          if (!created.ok()) return created.status();
          ledger.emplace(*total, *created);
        } else if (!ledger.has_value()) {
          return absl::DataLossError("Ledger file is missing its header");
        } else if (kind == "charge") {
          auto cost = PrivacyParams::Create(j.at("epsilon").get<double>(),
                                            j.at("delta").get<double>());
          if (!cost.ok()) return cost.status();
          auto ts = ParseTimestamp(j.at("timestamp").get<std::string>());
          if (!ts.ok()) return ts.status();
          ledger->entries_.push_back(
              {j.at("query_id").get<std::string>(), *cost, *ts});
        } else if (kind == "close") {
          auto ts = ParseTimestamp(j.at("timestamp").get<std::string>());
          if (!ts.ok()) return ts.status();
          ledger->Close(*ts);
        } else {
          return absl::DataLossError(
              absl::StrCat("Unknown ledger record '", kind, "'"));
        }
      } catch (const nlohmann::json::exception& e) {
        return absl::DataLossError(absl::StrCat(
            "Malformed ledger record on line ", line_no, ": ", e.what()));
      }
    }
    if (!ledger.has_value()) {
      return absl::DataLossError("Ledger file is empty");
    }
    return *std::move(ledger);
  }

  static absl::StatusOr<BudgetLedger> Load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
      return absl::NotFoundError(
          absl::StrCat("Cannot open ledger file ", path.string()));
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return Parse(buffer.str());
  }

  // Writes to a sibling temporary file and renames it over `path`, so a
  // crash leaves either the old or the new ledger on disk.
  absl::Status Save(const std::filesystem::path& path) const {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) {
        return absl::UnavailableError(
            absl::StrCat("Cannot write ledger file ", tmp.string()));
      }
      out << Serialize();
      out.flush();
      if (!out) {
        return absl::UnavailableError(
            absl::StrCat("Failed writing ledger file ", tmp.string()));
      }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
      return absl::UnavailableError(absl::StrCat(
          "Cannot replace ledger file ", path.string(), ": ", ec.message()));
    }
    return absl::OkStatus();
  }

 private:
  static absl::StatusOr<absl::Time> ParseTimestamp(const std::string& s) {
    absl::Time t;
    std::string err;
    if (!absl::ParseTime(absl::RFC3339_full, s, &t, &err)) {
      return absl::DataLossError(
          absl::StrCat("Bad ledger timestamp '", s, "': ", err));
    }
    return t;
  }

  PrivacyParams total_;
  absl::Time created_;
  std::vector<LedgerEntry> entries_;
  bool closed_ = false;
  absl::Time closed_at_;
};

inline BudgetAmount Remaining(const BudgetLedger& ledger) {
  return ledger.Remaining();
}

// Splits `total_epsilon` proportionally to `weights`. The shares' exact sum
// rounds to `total_epsilon`.
inline absl::StatusOr<std::vector<double>> Distribute(
    double total_epsilon, std::span<const double> weights) {
  if (!std::isfinite(total_epsilon) || total_epsilon <= 0.0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "Total epsilon must be finite and positive, got ", total_epsilon));
  }
  if (weights.empty()) {
    return absl::InvalidArgumentError("Need at least one weight");
  }
  for (double w : weights) {
    if (!std::isfinite(w) || w <= 0.0) {
      return absl::InvalidArgumentError(
          absl::StrCat("Weights must be finite and positive, got ", w));
    }
  }
  const double weight_sum = ExactSum(weights);
  std::vector<double> shares;
  shares.reserve(weights.size());
  for (double w : weights) shares.push_back(total_epsilon * (w / weight_sum));
  AdjustLastToTotal(shares, total_epsilon);
  return shares;
}

}  // namespace dprelease

#endif  // DPRELEASE_ACCOUNTANT_H_
