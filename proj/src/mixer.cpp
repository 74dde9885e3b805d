#include "sadepth/mixer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sadepth::mixer {

std::string_view to_string(Category category) {
  switch (category) {
    case Category::kIndoor:
      return "I";
    case Category::kSynthetic:
      return "S";
    case Category::kPortrait:
      return "PT";
    case Category::kHardCase:
      return "HC";
  }
  return "?";
}

std::optional<Category> parse_category(std::string_view text) {
  for (auto c : {Category::kIndoor, Category::kSynthetic, Category::kPortrait, Category::kHardCase}) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

CurriculumSchedule::CurriculumSchedule(std::vector<CategorySet> stages,
                                       std::vector<DatasetDescriptor> datasets,
                                       std::size_t active_stage)
    : stages_(std::move(stages)), datasets_(std::move(datasets)), active_stage_(active_stage) {
  if (stages_.empty()) throw std::invalid_argument("curriculum: no stages");
  for (std::size_t i = 1; i < stages_.size(); ++i) {
    if (!std::includes(stages_[i].begin(), stages_[i].end(), stages_[i - 1].begin(), stages_[i - 1].end())) {
      throw std::invalid_argument("curriculum: stage " + std::to_string(i) + " drops a category of the previous stage");
    }
  }
  if (active_stage_ >= stages_.size()) throw std::invalid_argument("curriculum: active stage out of range");
  std::set<std::string> ids;
  for (const auto& d : datasets_) {
    if (d.size < 1) throw std::invalid_argument("curriculum: dataset '" + d.id + "' is empty");
    if (!ids.insert(d.id).second) throw std::invalid_argument("curriculum: duplicate dataset id '" + d.id + "'");
  }
}

void CurriculumSchedule::set_active_stage(std::size_t stage) {
  if (stage >= stages_.size()) throw std::invalid_argument("curriculum: active stage out of range");
  active_stage_ = stage;
  tracker_ = {};
}

bool CurriculumSchedule::advance() {
  if (at_final_stage()) return false;
  ++active_stage_;
  tracker_ = {};
  return true;
}

CurriculumSchedule CurriculumSchedule::with_datasets(std::vector<DatasetDescriptor> datasets) const {
  CurriculumSchedule out(stages_, std::move(datasets), active_stage_);
  out.tracker_ = tracker_;
  return out;
}

CurriculumSchedule default_curriculum() {
  using enum Category;
  return CurriculumSchedule({{kIndoor, kSynthetic},
                             {kIndoor, kSynthetic, kPortrait},
                             {kIndoor, kSynthetic, kPortrait, kHardCase}},
                            {});
}

ProbabilityTable sampling_weights(const CurriculumSchedule& schedule) {
  double total = 0.0;  // K
  for (const auto& d : schedule.datasets()) {
    if (schedule.is_active(d)) total += static_cast<double>(d.size);
  }
  if (total == 0.0) throw std::invalid_argument("sampling_weights: no active dataset");

  ProbabilityTable table;
  double norm = 0.0;
  for (const auto& d : schedule.datasets()) {
    DatasetProbability p{d.id, schedule.is_active(d), 0.0, 0.0};
    if (p.active) {
      p.per_image = total / static_cast<double>(d.size);
      norm += p.per_image * static_cast<double>(d.size);
    }
    table.datasets.push_back(std::move(p));
  }
  for (std::size_t i = 0; i < table.datasets.size(); ++i) {
    auto& p = table.datasets[i];
    p.per_image /= norm;
    p.mass = p.per_image * static_cast<double>(schedule.datasets()[i].size);
  }
  return table;
}

SampleBatch next_batch(const CurriculumSchedule& schedule, std::size_t batch_size, Rng& rng) {
  if (batch_size < 1) throw std::invalid_argument("next_batch: batch size must be >= 1");
  const ProbabilityTable table = sampling_weights(schedule);
  std::vector<double> masses;
  for (const auto& p : table.datasets) masses.push_back(p.mass);
  std::discrete_distribution<std::size_t> pick_dataset(masses.begin(), masses.end());

  SampleBatch batch;
  batch.entries.reserve(batch_size);
  for (std::size_t n = 0; n < batch_size; ++n) {
    const std::size_t d = pick_dataset(rng);
    std::uniform_int_distribution<std::size_t> pick_image(0, schedule.datasets()[d].size - 1);
    batch.entries.push_back({schedule.datasets()[d].id, pick_image(rng)});
  }
  return batch;
}

bool observe_epoch(CurriculumSchedule& schedule, double validation_loss, const PlateauConfig& cfg) {
  if (!std::isfinite(validation_loss)) throw std::invalid_argument("observe_epoch: loss must be finite");
  if (!(cfg.epsilon > 0.0) || cfg.patience < 1) {
    throw std::invalid_argument("observe_epoch: requires epsilon > 0 and patience >= 1");
  }
  auto& t = schedule.tracker();
  const bool improved = t.best && validation_loss < *t.best &&
                        *t.best - validation_loss >= cfg.epsilon * std::abs(*t.best);
  if (improved) {
    t.best = validation_loss;
    t.stale_epochs = 0;
    return false;
  }
  if (!t.best || validation_loss < *t.best) t.best = validation_loss;
  ++t.stale_epochs;
  if (t.stale_epochs < cfg.patience) return false;
  return schedule.advance();
}

// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

std::string field_name(std::size_t index, const char* member) {
  std::ostringstream s;
  s << "[" << index << "]." << member;
  return s.str();
}

CategorySet categories_from_json(const json& doc, const std::string& field) {
  if (!doc.is_array()) throw SchemaError(field, "expected an array of categories");
  CategorySet out;
  for (const auto& item : doc) {
    const auto c = item.is_string() ? parse_category(item.get<std::string>()) : std::nullopt;
    if (!c) throw SchemaError(field, "unknown category " + item.dump());
    out.insert(*c);
  }
  return out;
}

}  // namespace

std::vector<DatasetDescriptor> load_datasets(const json& doc) {
  if (!doc.is_array()) throw SchemaError("$", "expected an array of dataset objects");
  std::vector<DatasetDescriptor> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& item = doc[i];
    if (!item.is_object()) throw SchemaError(field_name(i, ""), "expected an object");
    const auto id = item.find("id");
    if (id == item.end() || !id->is_string() || id->get<std::string>().empty()) {
      throw SchemaError(field_name(i, "id"), "expected a non-empty string");
    }
    const auto cat = item.find("category");
    const auto parsed = cat != item.end() && cat->is_string() ? parse_category(cat->get<std::string>())
                                                              : std::nullopt;
    if (!parsed) throw SchemaError(field_name(i, "category"), "expected one of \"I\", \"S\", \"PT\", \"HC\"");
    const auto size = item.find("size");
    if (size == item.end() || !size->is_number_integer() || size->get<long long>() < 1) {
      throw SchemaError(field_name(i, "size"), "expected an integer >= 1");
    }
    out.push_back({id->get<std::string>(), *parsed, size->get<std::size_t>()});
  }
  std::set<std::string> ids;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!ids.insert(out[i].id).second) throw SchemaError(field_name(i, "id"), "duplicate id '" + out[i].id + "'");
  }
  return out;
}

json to_json(const CurriculumSchedule& schedule) {
  json stages = json::array();
  for (const auto& s : schedule.stages()) {
    json set = json::array();
    for (auto c : s) set.push_back(std::string(to_string(c)));
    stages.push_back(std::move(set));
  }
  json datasets = json::array();
  for (const auto& d : schedule.datasets()) {
    datasets.push_back({{"id", d.id}, {"category", std::string(to_string(d.category))}, {"size", d.size}});
  }
  const auto& t = schedule.tracker();
  return {{"stages", stages},
          {"active_stage", schedule.active_stage()},
          {"datasets", datasets},
          {"tracker", {{"best", t.best ? json(*t.best) : json(nullptr)}, {"stale_epochs", t.stale_epochs}}}};
}

CurriculumSchedule schedule_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("$", "expected an object");
  const auto stages_it = doc.find("stages");
  if (stages_it == doc.end() || !stages_it->is_array()) throw SchemaError("stages", "expected an array");
  std::vector<CategorySet> stages;
  for (std::size_t i = 0; i < stages_it->size(); ++i) {
    stages.push_back(categories_from_json((*stages_it)[i], "stages[" + std::to_string(i) + "]"));
  }
  const auto active = doc.find("active_stage");
  if (active == doc.end() || !active->is_number_unsigned()) {
    throw SchemaError("active_stage", "expected a non-negative integer");
  }
  const auto datasets_it = doc.find("datasets");
  if (datasets_it == doc.end()) throw SchemaError("datasets", "missing");
  std::vector<DatasetDescriptor> datasets = load_datasets(*datasets_it);

  CurriculumSchedule schedule = [&] {
    try {
      return CurriculumSchedule(std::move(stages), std::move(datasets), active->get<std::size_t>());
    } catch (const std::invalid_argument& e) {
      throw SchemaError("$", e.what());
    }
  }();
  if (const auto tr = doc.find("tracker"); tr != doc.end()) {
    if (!tr->is_object()) throw SchemaError("tracker", "expected an object");
    const auto best = tr->find("best");
    if (best != tr->end() && !best->is_null()) {
      if (!best->is_number()) throw SchemaError("tracker.best", "expected a number or null");
      schedule.tracker().best = best->get<double>();
    }
    const auto stale = tr->find("stale_epochs");
    if (stale != tr->end()) {
      if (!stale->is_number_unsigned()) throw SchemaError("tracker.stale_epochs", "expected a non-negative integer");
      schedule.tracker().stale_epochs = stale->get<int>();
    }
  }
  return schedule;
}

std::vector<CategorySet> parse_stages(std::string_view text) {
  std::vector<CategorySet> stages;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    std::string_view stage = text.substr(start, comma - start);
    CategorySet set;
    std::size_t s = 0;
    while (s <= stage.size()) {
      const std::size_t plus = std::min(stage.find('+', s), stage.size());
      const auto name = stage.substr(s, plus - s);
      const auto c = parse_category(name);
      if (!c) throw std::invalid_argument("unknown category '" + std::string(name) + "'");
      set.insert(*c);
      s = plus + 1;
    }
    stages.push_back(std::move(set));
    start = comma + 1;
  }
  return stages;
}

}  // namespace sadepth::mixer
