#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "sadepth/gradcheck.hpp"
#include "sadepth/losses.hpp"
#include "sadepth/metrics.hpp"

namespace sadepth::cli {

inline constexpr const char* kToolName = "sadepth";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;

nlohmann::json to_json(const metrics::MetricsReport& m);
nlohmann::json to_json(const losses::LossBreakdown& b);
nlohmann::json to_json(const GradcheckReport& r);

/// Common envelope shared by every command's report; see
/// schema/report.schema.json.
nlohmann::json make_report(const std::string& command, nlohmann::json parameters,
                           std::optional<std::uint64_t> seed);

/// Pretty-printed with a trailing newline.
std::string dump_report(const nlohmann::json& report);

}  // namespace sadepth::cli
