#pragma once

// Dataset CSV ingestion/serialization and the JSON report layer shared by
// the command-line driver and its tests.
//
// CSV schema (wide, one row per subject):
//   y, w_1, ..., w_K, x_2, ..., x_p
// with >= 1 surrogate column; subjects with fewer than K replicates leave
// the trailing w cells blank.

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "modalme/diagnostics.hpp"
#include "modalme/sim_lab.hpp"

namespace modalme {

inline constexpr int kReportSchemaVersion = 1;

// Optional boundary transform y' = {y (n - 1) + 0.5} / n (n = row count),
// applied uniformly before the y in (0,1) domain check.
Dataset parse_dataset(std::istream& in, bool boundary_transform = false);
Dataset parse_dataset(const std::string& path, bool boundary_transform = false);

void write_dataset(std::ostream& out, const Dataset& data);
void write_dataset(const std::string& path, const Dataset& data);

std::string fit_method_to_string(FitMethod m);

// Result fragments of the report JSON.
nlohmann::json to_json(const FitResult& fit);
nlohmann::json to_json(const DiagnosticReport& report);
nlohmann::json to_json(const StudySummary& summary);

// Full report: schema_version + command + fully resolved config + result.
nlohmann::json make_report(const std::string& command,
                           nlohmann::json config, nlohmann::json result);

void write_report(const std::string& path, const nlohmann::json& report);

}  // namespace modalme
