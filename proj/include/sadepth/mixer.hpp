#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sadepth/core.hpp"

// Incremental dataset mixing: datasets are grouped into categories, the
// categories are switched on stage by stage, and within a stage every active
// dataset is drawn equally often regardless of its size.
namespace sadepth::mixer {

enum class Category { kIndoor, kSynthetic, kPortrait, kHardCase };

/// "I", "S", "PT", "HC"
std::string_view to_string(Category category);
std::optional<Category> parse_category(std::string_view text);

using CategorySet = std::set<Category>;

struct DatasetDescriptor {
  std::string id;
  Category category = Category::kIndoor;
  std::size_t size = 0;

  friend bool operator==(const DatasetDescriptor&, const DatasetDescriptor&) = default;
};

struct PlateauConfig {
  double epsilon = 1e-3;
  int patience = 5;
};

/// Best loss seen in the current stage and the number of consecutive epochs
/// without a relative improvement of at least epsilon over it.
struct PlateauTracker {
  std::optional<double> best;
  int stale_epochs = 0;

  friend bool operator==(const PlateauTracker&, const PlateauTracker&) = default;
};

class CurriculumSchedule {
 public:
  /// Throws std::invalid_argument unless stages are non-empty and nested,
  /// dataset ids are unique, sizes are >= 1 and active_stage is in bounds.
  CurriculumSchedule(std::vector<CategorySet> stages, std::vector<DatasetDescriptor> datasets,
                     std::size_t active_stage = 0);

  const std::vector<CategorySet>& stages() const { return stages_; }
  const std::vector<DatasetDescriptor>& datasets() const { return datasets_; }
  std::size_t active_stage() const { return active_stage_; }
  const CategorySet& active_categories() const { return stages_[active_stage_]; }
  bool is_active(const DatasetDescriptor& d) const { return active_categories().contains(d.category); }
  bool at_final_stage() const { return active_stage_ + 1 == stages_.size(); }

  const PlateauTracker& tracker() const { return tracker_; }
  PlateauTracker& tracker() { return tracker_; }

  void set_active_stage(std::size_t stage);
  /// Moves to the next stage (if any) and resets the tracker.
  bool advance();

  CurriculumSchedule with_datasets(std::vector<DatasetDescriptor> datasets) const;

  friend bool operator==(const CurriculumSchedule&, const CurriculumSchedule&) = default;

 private:
  std::vector<CategorySet> stages_;
  std::vector<DatasetDescriptor> datasets_;
  std::size_t active_stage_ = 0;
  PlateauTracker tracker_;
};

/// Stages {I,S}, {I,S,PT}, {I,S,PT,HC}; stage 0 active, no datasets.
CurriculumSchedule default_curriculum();

struct DatasetProbability {
  std::string id;
  bool active = false;
  double per_image = 0.0;  // probability of one particular image
  double mass = 0.0;       // per_image * size
};

struct ProbabilityTable {
  std::vector<DatasetProbability> datasets;  // same order as the schedule
};

/// Each image of active dataset i gets weight K / k_i with K the total size
/// of the active datasets; weights are normalized over active images and
/// inactive datasets get zero. Throws std::invalid_argument when no dataset
/// is active.
ProbabilityTable sampling_weights(const CurriculumSchedule& schedule);

struct SampleEntry {
  std::string dataset_id;
  std::size_t image = 0;

  friend bool operator==(const SampleEntry&, const SampleEntry&) = default;
};

struct SampleBatch {
  std::vector<SampleEntry> entries;

  friend bool operator==(const SampleBatch&, const SampleBatch&) = default;
};

inline constexpr std::size_t kDefaultBatchSize = 48;

/// batch_size independent draws, with replacement, from sampling_weights.
SampleBatch next_batch(const CurriculumSchedule& schedule, std::size_t batch_size, Rng& rng);

/// Feeds one epoch's loss to the plateau tracker. An epoch improves when
/// best - loss >= epsilon * |best|; the first epoch of a stage has nothing to
/// improve on and counts as stale. After `patience` consecutive stale epochs
/// the schedule advances and the tracker resets. Returns whether it advanced.
bool observe_epoch(CurriculumSchedule& schedule, double validation_loss, const PlateauConfig& cfg);

// ---------------------------------------------------------------------------
// JSON

/// Error in a JSON document; `field` names the offending member.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Array of {"id": string, "category": "I"|"S"|"PT"|"HC", "size": integer}.
std::vector<DatasetDescriptor> load_datasets(const nlohmann::json& doc);

nlohmann::json to_json(const CurriculumSchedule& schedule);
CurriculumSchedule schedule_from_json(const nlohmann::json& doc);

/// Parses "I+S,I+S+PT,I+S+PT+HC" style stage lists.
std::vector<CategorySet> parse_stages(std::string_view text);

}  // namespace sadepth::mixer
