#include "report.hpp"

namespace sadepth::cli {

using nlohmann::json;

json to_json(const metrics::MetricsReport& m) {
  return {{"rel", m.rel},       {"rmse", m.rmse},     {"log10", m.log10},
          {"delta1", m.delta1}, {"delta2", m.delta2}, {"delta3", m.delta3},
          {"pixel_count", m.pixel_count}};
}

json to_json(const losses::LossBreakdown& b) {
  return {{"berhu", b.berhu},
          {"gradient", b.gradient},
          {"normal", b.normal},
          {"gfrl", b.gfrl},
          {"total", b.total},
          {"stage", static_cast<int>(b.stage)},
          {"lambdas", b.lambdas}};
}

json to_json(const GradcheckReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"name", e.name},
                       {"max_rel_error", e.max_rel_error},
                       {"checked", e.checked},
                       {"passed", e.max_rel_error < r.tolerance}});
  }
  return {{"block", r.block},
          {"seed", r.seed},
          {"epsilon", r.epsilon},
          {"tolerance", r.tolerance},
          {"max_rel_error", r.max_rel_error()},
          {"passed", r.passed()},
          {"entries", entries}};
}

json make_report(const std::string& command, json parameters, std::optional<std::uint64_t> seed) {
  return {{"schema_version", kReportSchemaVersion},
          {"tool", {{"name", kToolName}, {"version", kToolVersion}}},
          {"command", command},
          {"parameters", std::move(parameters)},
          {"seed", seed ? json(*seed) : json(nullptr)},
          {"status", "ok"},
          {"results", json::array()},
          {"aggregate", nullptr}};
}

std::string dump_report(const json& report) { return report.dump(2) + "\n"; }

}  // namespace sadepth::cli
