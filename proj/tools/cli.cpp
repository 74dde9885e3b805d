#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "report.hpp"
#include "sadepth/blocks.hpp"
#include "sadepth/io.hpp"
#include "sadepth/losses.hpp"
#include "sadepth/metrics.hpp"
#include "sadepth/mixer.hpp"

namespace sadepth::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Bad flags or unreadable inputs; maps to kExitUsage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Shared helpers

struct FilePair {
  std::string name;
  fs::path pred;
  fs::path gt;
};

struct Pairing {
  std::vector<FilePair> pairs;
  std::vector<std::string> unmatched;
};

bool is_depth_file(const fs::path& p) {
  const auto ext = p.extension().string();
  return fs::is_regular_file(p) && (ext == ".pfm" || ext == ".pgm");
}

std::map<std::string, fs::path> depth_files_by_stem(const fs::path& dir) {
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!is_depth_file(entry.path())) continue;
    const auto stem = entry.path().stem().string();
    if (!out.emplace(stem, entry.path()).second) {
      throw UsageError("two depth files share the stem '" + stem + "' in " + dir.string());
    }
  }
  return out;
}

// Both arguments are files (one pair) or both are directories (matched by
// file stem, sorted by name).
Pairing pair_inputs(const fs::path& pred, const fs::path& gt) {
  Pairing out;
  if (fs::is_regular_file(pred) && fs::is_regular_file(gt)) {
    out.pairs.push_back({gt.stem().string(), pred, gt});
    return out;
  }
  if (!fs::is_directory(pred) || !fs::is_directory(gt)) {
    throw UsageError("--pred and --gt must both be files or both be directories");
  }
  const auto preds = depth_files_by_stem(pred);
  const auto gts = depth_files_by_stem(gt);
  for (const auto& [stem, path] : gts) {
    const auto it = preds.find(stem);
    if (it == preds.end()) {
      out.unmatched.push_back("gt:" + stem);
    } else {
      out.pairs.push_back({stem, it->second, path});
    }
  }
  for (const auto& [stem, path] : preds) {
    if (!gts.contains(stem)) out.unmatched.push_back("pred:" + stem);
  }
  return out;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Callers write results
// into slot i, so output order never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

void write_report(const json& report, const std::string& path) {
  if (path.empty()) return;
  const std::string text = dump_report(report);
  io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// Seed for file `index` of a run; independent of processing order.
Rng file_rng(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  return Rng(seq);
}

std::string format_metric(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string pred;
  std::string gt;
  std::optional<double> clamp_max;
  double depth_scale = io::kDefaultDepthScale;
  std::string report;
  int jobs = 1;
};

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  const Pairing pairing = pair_inputs(o.pred, o.gt);
  json params = {{"pred", o.pred},
                 {"gt", o.gt},
                 {"clamp_max", o.clamp_max ? json(*o.clamp_max) : json(nullptr)},
                 {"depth_scale", o.depth_scale}};
  json report = make_report("eval", params, std::nullopt);

  struct Outcome {
    std::optional<metrics::MetricsReport> metrics;
    std::string error;
  };
  std::vector<Outcome> outcomes(pairing.pairs.size());
  parallel_for(pairing.pairs.size(), o.jobs, [&](std::size_t i) {
    const auto& p = pairing.pairs[i];
    try {
      DepthMap pred = io::load_depth(p.pred, o.depth_scale);
      const DepthMap gt = io::load_depth(p.gt, o.depth_scale);
      if (o.clamp_max) pred = metrics::clamp_max(pred, *o.clamp_max);
      outcomes[i].metrics = metrics::evaluate(pred, gt);
    } catch (const std::exception& e) {
      outcomes[i].error = e.what();
    }
  });

  bool failed = !pairing.unmatched.empty();
  metrics::MetricsAccumulator total;
  out << std::left << std::setw(24) << "name" << std::right << std::setw(10) << "rel" << std::setw(10)
      << "rmse" << std::setw(10) << "log10" << std::setw(10) << "d1" << std::setw(10) << "d2"
      << std::setw(10) << "d3" << std::setw(10) << "pixels" << "\n";
  auto row = [&](const std::string& name, const metrics::MetricsReport& m) {
    out << std::left << std::setw(24) << name << std::right << std::setw(10) << format_metric(m.rel)
        << std::setw(10) << format_metric(m.rmse) << std::setw(10) << format_metric(m.log10)
        << std::setw(10) << format_metric(m.delta1) << std::setw(10) << format_metric(m.delta2)
        << std::setw(10) << format_metric(m.delta3) << std::setw(10) << m.pixel_count << "\n";
  };
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& name = pairing.pairs[i].name;
    if (outcomes[i].metrics) {
      total.add(*outcomes[i].metrics);
      report["results"].push_back({{"name", name}, {"status", "ok"}, {"metrics", to_json(*outcomes[i].metrics)}});
      row(name, *outcomes[i].metrics);
    } else {
      failed = true;
      report["results"].push_back({{"name", name}, {"status", "error"}, {"error", outcomes[i].error}});
      err << name << ": " << outcomes[i].error << "\n";
    }
  }
  if (total.pixel_count() > 0) {
    report["aggregate"] = {{"metrics", to_json(total.result())}};
    row("[aggregate]", total.result());
  }
  report["unmatched"] = pairing.unmatched;
  for (const auto& u : pairing.unmatched) err << "unmatched: " << u << "\n";
  if (failed) report["status"] = "failed";
  write_report(report, o.report);
  return failed ? kExitFailed : kExitOk;
}

// ---------------------------------------------------------------------------
// loss

struct LossOptions {
  std::string pred;
  std::string gt;
  int stage = 3;
  double gamma = losses::kDefaultGamma;
  double tau = losses::kDefaultOrdinalTau;
  std::vector<double> lambdas = {1.0, 1.0, 1.0, 0.5};
  int grid = losses::kDefaultGridBlocks;
  bool edge_weights = false;
  bool weight_gradient = false;
  bool weight_normal = false;
  double depth_scale = io::kDefaultDepthScale;
  std::uint64_t seed = 0;
  std::string report;
  int jobs = 1;
};

int cmd_loss(const LossOptions& o, std::ostream& out, std::ostream& err) {
  if (o.lambdas.size() != 4) throw UsageError("--lambdas takes exactly four values");
  losses::TotalLossOptions opts;
  opts.stage = losses::stage_from_int(o.stage);
  std::copy(o.lambdas.begin(), o.lambdas.end(), opts.lambdas.begin());
  opts.gamma = o.gamma;
  opts.tau = o.tau;
  opts.grid_rows = opts.grid_cols = o.grid;
  opts.weight_gradient = o.weight_gradient;
  opts.weight_normal = o.weight_normal;

  const Pairing pairing = pair_inputs(o.pred, o.gt);
  json params = {{"pred", o.pred},         {"gt", o.gt},
                 {"stage", o.stage},       {"gamma", o.gamma},
                 {"tau", o.tau},           {"lambdas", o.lambdas},
                 {"grid", o.grid},         {"edge_weights", o.edge_weights},
                 {"weight_gradient", o.weight_gradient}, {"weight_normal", o.weight_normal},
                 {"depth_scale", o.depth_scale}};
  json report = make_report("loss", params, o.seed);

  struct Outcome {
    std::optional<losses::LossBreakdown> loss;
    std::string error;
  };
  std::vector<Outcome> outcomes(pairing.pairs.size());
  parallel_for(pairing.pairs.size(), o.jobs, [&](std::size_t i) {
    const auto& p = pairing.pairs[i];
    try {
      const DepthMap pred = io::load_depth(p.pred, o.depth_scale);
      const DepthMap gt = io::load_depth(p.gt, o.depth_scale);
      std::optional<WeightMask> weights;
      if (o.edge_weights) weights = boundary_weight_mask(gt);
      Rng rng = file_rng(o.seed, i);
      outcomes[i].loss = losses::total_loss(pred, gt, opts, weights ? &*weights : nullptr, rng);
    } catch (const std::exception& e) {
      outcomes[i].error = e.what();
    }
  });

  bool failed = !pairing.unmatched.empty();
  losses::LossBreakdown mean;
  mean.stage = opts.stage;
  mean.lambdas = opts.lambdas;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& name = pairing.pairs[i].name;
    if (!outcomes[i].loss) {
      failed = true;
      report["results"].push_back({{"name", name}, {"status", "error"}, {"error", outcomes[i].error}});
      err << name << ": " << outcomes[i].error << "\n";
      continue;
    }
    const auto& b = *outcomes[i].loss;
    report["results"].push_back({{"name", name}, {"status", "ok"}, {"loss", to_json(b)}});
    out << name << ": berhu=" << b.berhu << " gradient=" << b.gradient << " normal=" << b.normal
        << " gfrl=" << b.gfrl << " total=" << b.total << "\n";
    mean.berhu += b.berhu;
    mean.gradient += b.gradient;
    mean.normal += b.normal;
    mean.gfrl += b.gfrl;
    mean.total += b.total;
    ++ok;
  }
  if (ok > 0) {
    const double n = static_cast<double>(ok);
    mean.berhu /= n;
    mean.gradient /= n;
    mean.normal /= n;
    mean.gfrl /= n;
    mean.total /= n;
    report["aggregate"] = {{"reduction", "mean over pairs"}, {"pairs", ok}, {"loss", to_json(mean)}};
    out << "[aggregate] total=" << mean.total << " over " << ok << " pair(s)\n";
  }
  report["unmatched"] = pairing.unmatched;
  for (const auto& u : pairing.unmatched) err << "unmatched: " << u << "\n";
  if (failed) report["status"] = "failed";
  write_report(report, o.report);
  return failed ? kExitFailed : kExitOk;
}

// ---------------------------------------------------------------------------
// mask

struct MaskOptions {
  std::string gt;
  std::optional<double> low;
  std::optional<double> high;
  int kernel = kBoundaryKernel;
  double depth_scale = io::kDefaultDepthScale;
  std::string out;
  std::string report;
};

int cmd_mask(const MaskOptions& o, std::ostream& out, std::ostream&) {
  if (o.low.has_value() != o.high.has_value()) throw UsageError("--low and --high must be given together");
  const DepthMap gt = io::load_depth(o.gt, o.depth_scale);
  const CannyThresholds t = o.low ? CannyThresholds{*o.low, *o.high} : default_canny_thresholds(gt);
  const BinaryMask band = dilate(canny_edges(gt, t.low, t.high), o.kernel);

  Grid<std::uint8_t> pixels(band.height(), band.width(), 0);
  for (int r = 0; r < band.height(); ++r) {
    for (int c = 0; c < band.width(); ++c) pixels(r, c) = band(r, c) ? 255 : 0;
  }
  io::write_file(o.out, io::write_pgm8(pixels));

  json params = {{"gt", o.gt}, {"low", t.low}, {"high", t.high}, {"kernel", o.kernel}, {"out", o.out}};
  json report = make_report("mask", params, std::nullopt);
  report["results"].push_back({{"name", fs::path(o.gt).stem().string()},
                               {"status", "ok"},
                               {"band_pixels", band.count()},
                               {"pixels", band.bits.size()}});
  write_report(report, o.report);
  out << "wrote " << o.out << " (" << band.count() << " of " << band.bits.size() << " pixels weighted "
      << kEdgeWeight << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sample

struct SampleOptions {
  std::string datasets;
  std::optional<int> stage;
  bool auto_stage = false;
  std::string history;
  std::string stages;
  std::string state_in;
  std::string state_out;
  std::size_t batches = 1;
  std::size_t batch_size = mixer::kDefaultBatchSize;
  double epsilon = mixer::PlateauConfig{}.epsilon;
  int patience = mixer::PlateauConfig{}.patience;
  bool omit_batches = false;
  std::uint64_t seed = 0;
  std::string report;
};

json read_json_file(const std::string& path) {
  const auto bytes = io::read_file(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

std::vector<std::pair<int, double>> read_loss_history(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  auto trim = [](std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    return s;
  };
  std::string line;
  if (!std::getline(in, line) || trim(line) != "epoch,loss") {
    throw UsageError(path + ": header must be 'epoch,loss'");
  }
  std::vector<std::pair<int, double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("missing comma");
      std::size_t used = 0;
      const int epoch = std::stoi(line.substr(0, comma), &used);
      if (used != comma) throw std::invalid_argument("bad epoch");
      const std::string loss_text = line.substr(comma + 1);
      const double loss = std::stod(loss_text, &used);
      if (used != loss_text.size()) throw std::invalid_argument("bad loss");
      rows.emplace_back(epoch, loss);
    } catch (const std::exception&) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected '<epoch>,<loss>'");
    }
  }
  return rows;
}

int cmd_sample(const SampleOptions& o, std::ostream& out, std::ostream&) {
  if (o.stage && o.auto_stage) throw UsageError("--stage and --auto are mutually exclusive");
  if (o.auto_stage && o.history.empty()) throw UsageError("--auto needs --history");
  if (o.datasets.empty() && o.state_in.empty()) throw UsageError("--datasets or --state-in is required");

  mixer::CurriculumSchedule schedule = [&] {
    try {
      if (!o.state_in.empty()) {
        auto s = mixer::schedule_from_json(read_json_file(o.state_in));
        if (!o.datasets.empty()) s = s.with_datasets(mixer::load_datasets(read_json_file(o.datasets)));
        return s;
      }
      auto datasets = mixer::load_datasets(read_json_file(o.datasets));
      auto stages = o.stages.empty() ? mixer::default_curriculum().stages() : mixer::parse_stages(o.stages);
      return mixer::CurriculumSchedule(std::move(stages), std::move(datasets));
    } catch (const mixer::SchemaError& e) {
      throw UsageError(std::string("schema error: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }();

  const mixer::PlateauConfig plateau{o.epsilon, o.patience};
  json transitions = json::array();
  if (o.stage) {
    if (*o.stage < 1) throw UsageError("--stage is 1-based");
    schedule.set_active_stage(static_cast<std::size_t>(*o.stage - 1));
  } else if (o.auto_stage) {
    for (const auto& [epoch, loss] : read_loss_history(o.history)) {
      if (mixer::observe_epoch(schedule, loss, plateau)) {
        transitions.push_back({{"epoch", epoch}, {"stage", schedule.active_stage() + 1}});
      }
    }
  }

  json params = {{"datasets", o.datasets},
                 {"stage", o.stage ? json(*o.stage) : json(nullptr)},
                 {"auto", o.auto_stage},
                 {"history", o.history},
                 {"batches", o.batches},
                 {"batch_size", o.batch_size},
                 {"epsilon", o.epsilon},
                 {"patience", o.patience}};
  json report = make_report("sample", params, o.seed);

  const auto table = mixer::sampling_weights(schedule);
  Rng rng(o.seed);
  std::map<std::string, std::size_t> counts;
  std::size_t draws = 0;
  for (std::size_t b = 0; b < o.batches; ++b) {
    const auto batch = mixer::next_batch(schedule, o.batch_size, rng);
    json entries = json::array();
    for (const auto& e : batch.entries) {
      ++counts[e.dataset_id];
      ++draws;
      if (!o.omit_batches) entries.push_back({{"dataset", e.dataset_id}, {"image", e.image}});
    }
    if (!o.omit_batches) report["results"].push_back({{"batch", b}, {"entries", entries}});
  }

  json frequencies = json::array();
  for (const auto& p : table.datasets) {
    const std::size_t n = counts.contains(p.id) ? counts.at(p.id) : 0;
    const double freq = draws > 0 ? static_cast<double>(n) / static_cast<double>(draws) : 0.0;
    frequencies.push_back({{"id", p.id}, {"active", p.active}, {"count", n}, {"frequency", freq}, {"expected", p.mass}});
    out << std::left << std::setw(20) << p.id << " expected " << format_metric(p.mass) << "  observed "
        << format_metric(freq) << " (" << n << ")\n";
  }
  json categories = json::array();
  for (auto c : schedule.active_categories()) categories.push_back(std::string(mixer::to_string(c)));
  report["aggregate"] = {{"draws", draws},
                         {"final_stage", schedule.active_stage() + 1},
                         {"active_categories", categories},
                         {"transitions", transitions},
                         {"frequencies", frequencies}};
  for (const auto& t : transitions) {
    out << "epoch " << t["epoch"].get<int>() << ": advanced to stage " << t["stage"].get<std::size_t>() << "\n";
  }
  if (!o.state_out.empty()) {
    const std::string text = mixer::to_json(schedule).dump(2) + "\n";
    io::write_file(o.state_out, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }
  write_report(report, o.report);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckOptions {
  std::string block = "sab";
  std::uint64_t seed = 0;
  double eps = kDefaultGradcheckEpsilon;
  std::string report;
};

int cmd_gradcheck(const GradcheckOptions& o, std::ostream& out, std::ostream&) {
  GradcheckReport r;
  if (o.block == "sab") {
    r = blocks::gradcheck(blocks::BlockKind::kSab, o.seed, o.eps);
  } else if (o.block == "gcb") {
    r = blocks::gradcheck(blocks::BlockKind::kGcb, o.seed, o.eps, {4, 8, 8, 2});
  } else {
    r = losses::gradcheck_losses(o.seed, o.eps);
  }
  json report = make_report("gradcheck", {{"block", o.block}, {"eps", o.eps}}, o.seed);
  report["results"] = to_json(r)["entries"];
  report["aggregate"] = {{"max_rel_error", r.max_rel_error()}, {"tolerance", r.tolerance}, {"passed", r.passed()}};
  for (const auto& e : r.entries) {
    out << (e.max_rel_error < r.tolerance ? "pass " : "FAIL ") << r.block << "/" << e.name
        << " max_rel_error=" << e.max_rel_error << " (" << e.checked << " entries)\n";
  }
  if (!r.passed()) report["status"] = "failed";
  write_report(report, o.report);
  return r.passed() ? kExitOk : kExitFailed;
}

// ---------------------------------------------------------------------------
// normals

struct NormalsOptions {
  std::string gt;
  std::string out;
  double depth_scale = io::kDefaultDepthScale;
  std::string report;
};

int cmd_normals(const NormalsOptions& o, std::ostream& out, std::ostream&) {
  const DepthMap gt = io::load_depth(o.gt, o.depth_scale);
  const NormalField field = compute_normals(gt);
  io::write_file(o.out, io::write_pfm(field));
  std::size_t valid = 0;
  for (auto v : field.valid.data()) valid += v != 0;
  json report = make_report("normals", {{"gt", o.gt}, {"out", o.out}}, std::nullopt);
  report["results"].push_back({{"name", fs::path(o.gt).stem().string()}, {"status", "ok"}, {"valid_normals", valid}});
  write_report(report, o.report);
  out << "wrote " << o.out << " (" << valid << " valid normals)\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structure-aware depth estimation toolkit: losses, metrics, attention blocks, dataset mixing",
               kToolName};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate predicted depth maps against ground truth");
  eval_cmd->add_option("--pred", eval.pred, "Prediction file or directory")->required();
  eval_cmd->add_option("--gt", eval.gt, "Ground-truth file or directory")->required();
  eval_cmd->add_option("--clamp-max", eval.clamp_max, "Clamp predictions to this depth (meters)")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--depth-scale", eval.depth_scale, "Meters per unit for 16-bit PGM inputs")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--report", eval.report, "Write the JSON report here");
  eval_cmd->add_option("--jobs", eval.jobs, "Worker threads")->check(CLI::PositiveNumber);

  LossOptions loss;
  auto* loss_cmd = app.add_subcommand("loss", "Evaluate the staged training loss");
  loss_cmd->add_option("--pred", loss.pred, "Prediction file or directory")->required();
  loss_cmd->add_option("--gt", loss.gt, "Ground-truth file or directory")->required();
  loss_cmd->add_option("--stage", loss.stage, "Training stage")->check(CLI::IsMember({1, 2, 3}));
  loss_cmd->add_option("--gamma", loss.gamma, "Focal exponent")->check(CLI::NonNegativeNumber);
  loss_cmd->add_option("--tau", loss.tau, "Ordinal equality threshold")->check(CLI::NonNegativeNumber);
  loss_cmd->add_option("--lambdas", loss.lambdas, "Four term weights")->delimiter(',')->expected(4);
  loss_cmd->add_option("--grid", loss.grid, "Point-sampling blocks per side")->check(CLI::PositiveNumber);
  loss_cmd->add_flag("--edge-weights", loss.edge_weights, "Weight boundary pixels by 5 (BerHu)");
  loss_cmd->add_flag("--weight-gradient", loss.weight_gradient, "Also apply edge weights to the gradient loss");
  loss_cmd->add_flag("--weight-normal", loss.weight_normal, "Also apply edge weights to the normal loss");
  loss_cmd->add_option("--depth-scale", loss.depth_scale, "Meters per unit for 16-bit PGM inputs")
      ->check(CLI::PositiveNumber);
  loss_cmd->add_option("--seed", loss.seed, "Random seed");
  loss_cmd->add_option("--report", loss.report, "Write the JSON report here");
  loss_cmd->add_option("--jobs", loss.jobs, "Worker threads")->check(CLI::PositiveNumber);

  MaskOptions mask;
  auto* mask_cmd = app.add_subcommand("mask", "Write the edge-aware weight mask as an 8-bit PGM");
  mask_cmd->add_option("--gt", mask.gt, "Ground-truth depth file")->required();
  mask_cmd->add_option("--low", mask.low, "Canny low threshold")->check(CLI::NonNegativeNumber);
  mask_cmd->add_option("--high", mask.high, "Canny high threshold")->check(CLI::NonNegativeNumber);
  mask_cmd->add_option("--kernel", mask.kernel, "Dilation kernel (odd)")->check(CLI::PositiveNumber);
  mask_cmd->add_option("--depth-scale", mask.depth_scale, "Meters per unit for 16-bit PGM inputs")
      ->check(CLI::PositiveNumber);
  mask_cmd->add_option("--out", mask.out, "Output PGM")->required();
  mask_cmd->add_option("--report", mask.report, "Write the JSON report here");

  SampleOptions sample;
  auto* sample_cmd = app.add_subcommand("sample", "Draw curriculum-balanced training batches");
  sample_cmd->add_option("--datasets", sample.datasets, "Dataset spec JSON");
  auto* stage_opt = sample_cmd->add_option("--stage", sample.stage, "Active stage (1-based)");
  auto* auto_opt = sample_cmd->add_flag("--auto", sample.auto_stage, "Replay --history to pick the stage");
  stage_opt->excludes(auto_opt);
  sample_cmd->add_option("--history", sample.history, "Loss history CSV (epoch,loss)");
  sample_cmd->add_option("--stages", sample.stages, "Stage list, e.g. I+S,I+S+PT,I+S+PT+HC");
  sample_cmd->add_option("--state-in", sample.state_in, "Resume from a saved schedule");
  sample_cmd->add_option("--state-out", sample.state_out, "Save the schedule after running");
  sample_cmd->add_option("--batches", sample.batches, "Number of batches");
  sample_cmd->add_option("--batch-size", sample.batch_size, "Images per batch")->check(CLI::PositiveNumber);
  sample_cmd->add_option("--epsilon", sample.epsilon, "Plateau relative improvement")->check(CLI::PositiveNumber);
  sample_cmd->add_option("--patience", sample.patience, "Plateau patience (epochs)")->check(CLI::PositiveNumber);
  sample_cmd->add_flag("--omit-batches", sample.omit_batches, "Leave individual draws out of the report");
  sample_cmd->add_option("--seed", sample.seed, "Random seed");
  sample_cmd->add_option("--report", sample.report, "Write the JSON report here");

  GradcheckOptions grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of analytic gradients");
  grad_cmd->add_option("--block", grad.block, "sab, gcb or losses")->check(CLI::IsMember({"sab", "gcb", "losses"}));
  grad_cmd->add_option("--seed", grad.seed, "Random seed");
  grad_cmd->add_option("--eps", grad.eps, "Finite-difference step")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--report", grad.report, "Write the JSON report here");

  NormalsOptions normals;
  auto* normals_cmd = app.add_subcommand("normals", "Write the surface-normal field as a 3-channel PFM");
  normals_cmd->add_option("--gt", normals.gt, "Depth file")->required();
  normals_cmd->add_option("--out", normals.out, "Output PFM")->required();
  normals_cmd->add_option("--depth-scale", normals.depth_scale, "Meters per unit for 16-bit PGM inputs")
      ->check(CLI::PositiveNumber);
  normals_cmd->add_option("--report", normals.report, "Write the JSON report here");

  std::vector<std::string> argv_storage{kToolName};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*eval_cmd) return cmd_eval(eval, out, err);
    if (*loss_cmd) return cmd_loss(loss, out, err);
    if (*mask_cmd) return cmd_mask(mask, out, err);
    if (*sample_cmd) return cmd_sample(sample, out, err);
    if (*grad_cmd) return cmd_gradcheck(grad, out, err);
    if (*normals_cmd) return cmd_normals(normals, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace sadepth::cli
