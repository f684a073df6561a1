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

#ifndef DPRELEASE_DATASET_H_
#define DPRELEASE_DATASET_H_

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"

namespace dprelease {

// The eleven rhythm labels of the arrhythmia feature table.
enum class RhythmCode {
  kSB,
  kSR,
  kAFIB,
  kST,
  kAF,
  kSA,
  kSVT,
  kAT,
  kAVNRT,
  kAVRT,
  kSAAWR,
};

inline constexpr size_t kNumRhythms = 11;

struct RhythmInfo {
  RhythmCode code;
  std::string_view acronym;
  std::string_view full_name;
};

// Acronym to name mapping, in enum order.
inline constexpr std::array<RhythmInfo, kNumRhythms> kRhythms = {{
    {RhythmCode::kSB, "SB", "Sinus Bradycardia"},
    {RhythmCode::kSR, "SR", "Sinus Rhythm"},
    {RhythmCode::kAFIB, "AFIB", "Atrial Fibrillation"},
    {RhythmCode::kST, "ST", "Sinus Tachycardia"},
    {RhythmCode::kAF, "AF", "Atrial Flutter"},
    {RhythmCode::kSA, "SA", "Sinus Irregularity"},
    {RhythmCode::kSVT, "SVT", "Supraventricular Tachycardia"},
    {RhythmCode::kAT, "AT", "Atrial Tachycardia"},
    {RhythmCode::kAVNRT, "AVNRT", "Atrioventricular Node Reentrant Tachycardia"},
    {RhythmCode::kAVRT, "AVRT", "Atrioventricular Reentrant Tachycardia"},
    {RhythmCode::kSAAWR, "SAAWR", "Sinus Atrium to Atrial Wandering Rhythm"},
}};

// Order in which per-rhythm results are reported.
inline constexpr std::array<RhythmCode, kNumRhythms> kReportRhythmOrder = {
    RhythmCode::kAFIB, RhythmCode::kSB,  RhythmCode::kSA,    RhythmCode::kAF,
    RhythmCode::kSR,   RhythmCode::kST,  RhythmCode::kSVT,   RhythmCode::kAT,
    RhythmCode::kAVNRT, RhythmCode::kSAAWR, RhythmCode::kAVRT,
};

inline const RhythmInfo& Info(RhythmCode code) {
  return kRhythms[static_cast<size_t>(code)];
}

inline std::string_view Acronym(RhythmCode code) { return Info(code).acronym; }

inline std::optional<RhythmCode> ParseRhythm(std::string_view text) {
  for (const auto& r : kRhythms) {
    if (r.acronym == text) return r.code;
  }
  return std::nullopt;
}

inline std::string ValidRhythmList() {
  std::vector<std::string> names;
  for (const auto& r : kRhythms) names.emplace_back(r.acronym);
  return absl::StrJoin(names, ", ");
}

enum class Sex { kMale, kFemale };

inline std::string_view SexName(Sex s) {
  return s == Sex::kMale ? "MALE" : "FEMALE";
}

struct EcgRecord {
  RhythmCode rhythm = RhythmCode::kSR;
  std::string beat;
  int age = 0;                 // years
  Sex sex = Sex::kMale;
  int ventricular_rate = 0;    // BPM
  int atrial_rate = 0;         // BPM
  int qrs_duration = 0;        // ms
  int qt_interval = 0;         // ms
  int qt_corrected = 0;        // ms
  int r_axis = 0;              // degrees
  int t_axis = 0;              // degrees
  int qrs_count = 0;
  int q_onset = 0;             // samples
  int q_offset = 0;            // samples
  int t_offset = 0;            // samples

  friend bool operator==(const EcgRecord&, const EcgRecord&) = default;
};

// Lower-cases and drops spaces and underscores, so "QRS Duration",
// "qrs_duration" and "QRSDuration" all name the same column.
inline std::string NormalizeColumnName(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (c == ' ' || c == '_') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

namespace internal {

struct NumericField {
  std::string_view header;  // canonical CSV header
  int EcgRecord::*member;
};

inline constexpr std::array<NumericField, 12> kNumericFields = {{
    {"PatientAge", &EcgRecord::age},
    {"VentricularRate", &EcgRecord::ventricular_rate},
    {"AtrialRate", &EcgRecord::atrial_rate},
    {"QRSDuration", &EcgRecord::qrs_duration},
    {"QTInterval", &EcgRecord::qt_interval},
    {"QTCorrected", &EcgRecord::qt_corrected},
    {"RAxis", &EcgRecord::r_axis},
    {"TAxis", &EcgRecord::t_axis},
    {"QRSCount", &EcgRecord::qrs_count},
    {"QOnset", &EcgRecord::q_onset},
    {"QOffset", &EcgRecord::q_offset},
    {"TOffset", &EcgRecord::t_offset},
}};

// Normalized aliases accepted on input.
inline std::string CanonicalColumn(std::string_view raw) {
  std::string n = NormalizeColumnName(raw);
  if (n == "age") return "patientage";
  if (n == "gender") return "sex";
  return n;
}

inline const NumericField* FindNumericField(std::string_view name) {
  const std::string n = CanonicalColumn(name);
  for (const auto& f : kNumericFields) {
    if (NormalizeColumnName(f.header) == n) return &f;
  }
  return nullptr;
}

// Splits one CSV record (RFC 4180 quoting).
inline std::vector<std::string> SplitCsvLine(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

inline std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::optional<int> ParseInt(std::string_view s) {
  s = Trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return value;
}

inline std::string QuoteCsv(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace internal

struct IngestDiagnostics {
  int64_t rows_read = 0;
  int64_t rows_dropped = 0;
  std::map<std::string, int64_t> drop_reasons;
};

// Immutable after construction; safe to share between threads.
class Dataset {
 public:
  Dataset(std::vector<EcgRecord> records, std::string source,
          IngestDiagnostics diagnostics = {})
      : records_(std::move(records)), source_(std::move(source)),
        diagnostics_(std::move(diagnostics)) {}

  const std::vector<EcgRecord>& records() const { return records_; }
  size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::string& source() const { return source_; }
  const IngestDiagnostics& diagnostics() const { return diagnostics_; }

  static bool IsNumericColumn(std::string_view name) {
    return internal::FindNumericField(name) != nullptr;
  }

  static bool IsCategoricalColumn(std::string_view name) {
    const std::string n = internal::CanonicalColumn(name);
    return n == "rhythm" || n == "sex" || n == "beat";
  }

  // Fixed category order for the closed-set columns; nullopt for `beat`.
  static std::optional<std::vector<std::string>> DefaultCategories(
      std::string_view name) {
    const std::string n = internal::CanonicalColumn(name);
    if (n == "rhythm") {
      std::vector<std::string> out;
      for (RhythmCode c : kReportRhythmOrder) out.emplace_back(Acronym(c));
      return out;
    }
    if (n == "sex") return std::vector<std::string>{"MALE", "FEMALE"};
    return std::nullopt;
  }

  absl::StatusOr<std::vector<double>> NumericColumn(
      std::string_view name) const {
    const internal::NumericField* field = internal::FindNumericField(name);
    if (field == nullptr) {
      return absl::InvalidArgumentError(
          absl::StrCat("Unknown numeric column '", std::string(name), "'"));
    }
    std::vector<double> out;
    out.reserve(records_.size());
    for (const auto& r : records_) out.push_back(r.*(field->member));
    return out;
  }

  absl::StatusOr<std::vector<std::string>> CategoricalColumn(
      std::string_view name) const {
    const std::string n = internal::CanonicalColumn(name);
    std::vector<std::string> out;
    out.reserve(records_.size());
    if (n == "rhythm") {
      for (const auto& r : records_) out.emplace_back(Acronym(r.rhythm));
    } else if (n == "sex") {
      for (const auto& r : records_) out.emplace_back(SexName(r.sex));
    } else if (n == "beat") {
      for (const auto& r : records_) out.push_back(r.beat);
    } else {
      return absl::InvalidArgumentError(
          absl::StrCat("Unknown categorical column '", std::string(name), "'"));
    }
    return out;
  }

 private:
  std::vector<EcgRecord> records_;
  std::string source_;
  IngestDiagnostics diagnostics_;
};

inline constexpr std::string_view kCanonicalHeader =
    "Rhythm,Beat,PatientAge,Sex,VentricularRate,AtrialRate,QRSDuration,"
    "QTInterval,QTCorrected,RAxis,TAxis,QRSCount,QOnset,QOffset,TOffset";

// Parses CSV text with a header row. Extra columns are ignored. In strict mode
// the first bad row fails the whole ingest; otherwise bad rows are dropped and
// tallied in the diagnostics.
inline absl::StatusOr<Dataset> ParseCsv(std::string_view text, bool strict,
                                        std::string source = "<memory>") {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") {
    text.remove_prefix(3);
  }
  std::vector<std::string_view> lines;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  while (!lines.empty() && internal::Trim(lines.back()).empty()) {
    lines.pop_back();
  }
  if (lines.empty()) {
    return absl::InvalidArgumentError("CSV input has no header row");
  }

  const std::vector<std::string> header = internal::SplitCsvLine(lines[0]);
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < header.size(); ++i) {
    index.emplace(internal::CanonicalColumn(internal::Trim(header[i])), i);
  }
  auto locate = [&](std::string_view canonical_header) -> std::optional<size_t> {
    const auto it = index.find(NormalizeColumnName(canonical_header));
    if (it == index.end()) return std::nullopt;
    return it->second;
  };

  const auto rhythm_col = locate("Rhythm");
  const auto beat_col = locate("Beat");
  const auto sex_col = locate("Sex");
  std::array<size_t, internal::kNumericFields.size()> numeric_cols{};
  for (auto [name, col] : {std::pair{"Rhythm", rhythm_col},
                           std::pair{"Beat", beat_col},
                           std::pair{"Sex", sex_col}}) {
    if (!col.has_value()) {
      return absl::InvalidArgumentError(
          absl::StrCat("Schema error: missing column '", name, "'"));
    }
  }
  for (size_t f = 0; f < internal::kNumericFields.size(); ++f) {
    const auto col = locate(internal::kNumericFields[f].header);
    if (!col.has_value()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "Schema error: missing column '", std::string(internal::kNumericFields[f].header),
          "'"));
    }
    numeric_cols[f] = *col;
  }

  IngestDiagnostics diag;
  std::vector<EcgRecord> records;
  for (size_t row = 1; row < lines.size(); ++row) {
    if (internal::Trim(lines[row]).empty()) continue;
    ++diag.rows_read;
    const std::vector<std::string> fields = internal::SplitCsvLine(lines[row]);
    std::string problem;
    std::string reason;
    EcgRecord rec;
    if (fields.size() < header.size()) {
      reason = "wrong field count";
      problem = absl::StrCat("expected ", header.size(), " fields, got ",
                             fields.size());
    }
    if (reason.empty()) {
      const std::string code(internal::Trim(fields[*rhythm_col]));
      const auto rhythm = ParseRhythm(code);
      if (!rhythm.has_value()) {
        reason = "unknown rhythm code";
        problem = absl::StrCat("unknown rhythm code '", code,
                               "'; valid codes: ", ValidRhythmList());
      } else {
        rec.rhythm = *rhythm;
      }
    }
    if (reason.empty()) {
      std::string sex(internal::Trim(fields[*sex_col]));
      std::transform(sex.begin(), sex.end(), sex.begin(), [](unsigned char c) {
        return static_cast<char>(std::toupper(c));
      });
      if (sex == "MALE") {
        rec.sex = Sex::kMale;
      } else if (sex == "FEMALE") {
        rec.sex = Sex::kFemale;
      } else {
        reason = "bad sex value";
        problem = absl::StrCat("sex must be MALE or FEMALE, got '", sex, "'");
      }
    }
    if (reason.empty()) {
      rec.beat = std::string(internal::Trim(fields[*beat_col]));
      for (size_t f = 0; f < internal::kNumericFields.size(); ++f) {
        const auto value = internal::ParseInt(fields[numeric_cols[f]]);
        if (!value.has_value()) {
          reason = "unparseable numeric";
          problem = absl::StrCat("column '", std::string(internal::kNumericFields[f].header),
                                 "' is not an integer: '",
                                 fields[numeric_cols[f]], "'");
          break;
        }
        rec.*(internal::kNumericFields[f].member) = *value;
      }
    }
    if (!reason.empty()) {
      if (strict) {
        return absl::InvalidArgumentError(
            absl::StrCat("Row ", row + 1, ": ", problem));
      }
      ++diag.rows_dropped;
      ++diag.drop_reasons[reason];
      continue;
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) {
    return absl::FailedPreconditionError(absl::StrCat(
        "Empty dataset: no valid rows in ", source, " (", diag.rows_read,
        " read, ", diag.rows_dropped, " dropped)"));
  }
  return Dataset(std::move(records), std::move(source), std::move(diag));
}

inline absl::StatusOr<Dataset> IngestCsv(const std::filesystem::path& path,
                                         bool strict) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(
        absl::StrCat("Cannot open data file ", path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseCsv(buffer.str(), strict, path.string());
}

inline std::string ToCsv(const Dataset& data) {
  std::ostringstream out;
  out << kCanonicalHeader << "\n";
  for (const auto& r : data.records()) {
    out << Acronym(r.rhythm) << "," << internal::QuoteCsv(r.beat) << ",";
    out << r.age << "," << SexName(r.sex);
    for (size_t f = 1; f < internal::kNumericFields.size(); ++f) {
      out << "," << r.*(internal::kNumericFields[f].member);
    }
    out << "\n";
  }
  return out.str();
}

inline absl::Status WriteCsv(const Dataset& data,
                             const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    return absl::UnavailableError(
        absl::StrCat("Cannot write data file ", path.string()));
  }
  out << ToCsv(data);
  if (!out) {
    return absl::UnavailableError(
        absl::StrCat("Failed writing data file ", path.string()));
  }
  return absl::OkStatus();
}

using RhythmGroups =
    std::vector<std::pair<RhythmCode, std::vector<EcgRecord>>>;

// Disjoint, exhaustive split in report order; every rhythm has an entry.
inline RhythmGroups PartitionByRhythm(const Dataset& data) {
  RhythmGroups groups;
  for (RhythmCode c : kReportRhythmOrder) groups.emplace_back(c, std::vector<EcgRecord>{});
  for (const auto& r : data.records()) {
    for (auto& [code, members] : groups) {
      if (code == r.rhythm) {
        members.push_back(r);
        break;
      }
    }
  }
  return groups;
}

// Relative rhythm frequencies, in RhythmCode order. Only the ordering (SB and
// SR dominant, SAAWR rarest) is meant to be realistic.
inline constexpr std::array<double, kNumRhythms> kDefaultRhythmWeights = {
    3889, 1826, 1780, 1568, 445, 399, 587, 121, 16, 8, 7};

// Deterministic synthetic feature table. Ages skew old within [4, 98], QRS
// durations stay within [18, 256] ms with a wide-complex tail, and rates
// follow the rhythm (bradycardia slow, tachycardias fast).
inline absl::StatusOr<Dataset> Synthesize(
    int64_t n, uint64_t seed,
    std::optional<std::array<double, kNumRhythms>> group_weights =
        std::nullopt) {
  if (n < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("Synthetic size must be >= 1, got ", n));
  }
  const auto weights = group_weights.value_or(kDefaultRhythmWeights);
  double weight_sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      return absl::InvalidArgumentError("Rhythm weights must be nonnegative");
    }
    weight_sum += w;
  }
  if (weight_sum <= 0.0) {
    return absl::InvalidArgumentError("Rhythm weights must not all be zero");
  }

  // Per-rhythm (mean QRS ms, mean ventricular rate, rate spread).
  struct Profile {
    double qrs;
    double rate;
    double rate_sd;
  };
  static constexpr std::array<Profile, kNumRhythms> kProfiles = {{
      {93.3, 52, 5},    // SB
      {87.0, 75, 9},    // SR
      {92.8, 95, 25},   // AFIB
      {85.3, 115, 12},  // ST
      {97.3, 100, 30},  // AF
      {87.5, 72, 12},   // SA
      {96.1, 160, 20},  // SVT
      {89.0, 120, 25},  // AT
      {89.9, 150, 20},  // AVNRT
      {81.5, 150, 25},  // AVRT
      {84.9, 68, 10},   // SAAWR
  }};
  static constexpr std::array<std::string_view, 6> kBeats = {
      "NONE", "TWC", "RBBB", "STDD", "STTC", "LVH"};

  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> rhythm_dist(weights.begin(), weights.end());
  std::discrete_distribution<int> beat_dist({50, 20, 8, 8, 8, 6});
  std::gamma_distribution<double> age_gap(2.5, 11.0);
  std::bernoulli_distribution male(0.56);
  std::bernoulli_distribution wide_qrs(0.06);
  std::normal_distribution<double> std_normal(0.0, 1.0);

  auto clamp_round = [](double v, double lo, double hi) {
    return static_cast<int>(std::lround(std::clamp(v, lo, hi)));
  };

  std::vector<EcgRecord> records;
  records.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    EcgRecord r;
    const int k = rhythm_dist(rng);
    const Profile& p = kProfiles[static_cast<size_t>(k)];
    r.rhythm = static_cast<RhythmCode>(k);
    r.beat = std::string(kBeats[static_cast<size_t>(beat_dist(rng))]);
    r.age = clamp_round(100.0 - age_gap(rng), 4, 98);
    r.sex = male(rng) ? Sex::kMale : Sex::kFemale;
    r.ventricular_rate = clamp_round(p.rate + p.rate_sd * std_normal(rng), 30, 250);
    const bool irregular_atria =
        r.rhythm == RhythmCode::kAFIB || r.rhythm == RhythmCode::kAF;
    r.atrial_rate = irregular_atria
                        ? clamp_round(250 + 60 * std_normal(rng), 60, 500)
                        : r.ventricular_rate;
    const double qrs_mean = wide_qrs(rng) ? 140.0 : p.qrs;
    r.qrs_duration = clamp_round(qrs_mean + 12.0 * std_normal(rng), 18, 256);
    r.qt_interval = clamp_round(
        400.0 - 1.5 * (r.ventricular_rate - 75) + 30.0 * std_normal(rng), 200,
        700);
    const double rr_seconds = 60.0 / r.ventricular_rate;
    r.qt_corrected = clamp_round(r.qt_interval / std::sqrt(rr_seconds), 200, 800);
    r.r_axis = clamp_round(45.0 + 40.0 * std_normal(rng), -90, 270);
    r.t_axis = clamp_round(45.0 + 35.0 * std_normal(rng), -90, 270);
    r.qrs_count = clamp_round(r.ventricular_rate / 6.0 + std_normal(rng), 1, 60);
    r.q_onset = clamp_round(220.0 + 8.0 * std_normal(rng), 150, 300);
    r.q_offset = r.q_onset + r.qrs_duration / 2;
    r.t_offset = r.q_onset + r.qt_interval / 2;
    records.push_back(std::move(r));
  }
  return Dataset(std::move(records), absl::StrCat("synthetic:seed=", seed));
}

}  // namespace dprelease

#endif  // DPRELEASE_DATASET_H_
