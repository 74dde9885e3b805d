// Acceptance suite: one line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "sadepth/blocks.hpp"
#include "sadepth/io.hpp"
#include "sadepth/losses.hpp"
#include "sadepth/metrics.hpp"
#include "sadepth/mixer.hpp"
#include "support/oracles.hpp"

using namespace sadepth;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && passed) detail = what;
    passed = passed && ok;
  }
};

bool close_abs(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// ---------------------------------------------------------------------------

Outcome loss_oracles() {
  Outcome o;
  const auto pred = DepthMap::from_rows({{1.0, 2.0}});
  const auto gt = DepthMap::from_rows({{1.1, 2.5}});
  o.require(close_abs(losses::berhu(pred, gt), 0.7, 1e-9), "berhu mean");
  WeightMask w = WeightMask::ones(1, 2);
  w.weights(0, 0) = 5.0;
  o.require(close_abs(losses::berhu(pred, gt, &w), 0.9, 1e-9), "weighted berhu");

  const std::vector<int> s1 = {1};
  o.require(close_abs(losses::scale_invariant_gradient(DepthMap::from_rows({{1.0, 3.0, 1.0}}),
                                                       DepthMap::from_rows({{1.0, 1.0, 1.0}}), s1),
                      0.25, 1e-9),
            "gradient loss 1x3");

  Grid<double> ramp(6, 6);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) ramp(r, c) = 2.0 + c;
  }
  const auto normals = compute_normals(DepthMap(ramp));
  const auto flat = compute_normals(DepthMap::constant(6, 6, 2.0));
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) {
      o.require(close_abs(losses::normal_term(flat(r, c), normals(r, c)), 1.0 - 1.0 / std::sqrt(2.0), 1e-9),
                "normal term per pixel");
    }
  }

  o.require(close_abs(losses::gfrl_pair_term(0, 0.5, 2.0), 0.25, 1e-9), "gfrl r=0");
  o.require(close_abs(losses::gfrl_pair_term(-1, 0.0, 0.0), std::numbers::ln2, 1e-9), "gfrl log 2");
  o.require(close_abs(losses::gfrl_pair_term(-1, 0.0, 2.0), 0.25 * std::numbers::ln2, 1e-9), "gfrl 0.25 log 2");
  return o;
}

// Inputs for one loss gradient check: 8x8 maps, BerHu residuals kept away
// from the junction.
struct LossProblem {
  DepthMap gt;
  DepthMap pred;
  WeightMask weights;
};

LossProblem loss_problem(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> noise(-0.9, 0.9);
  std::bernoulli_distribution edge(0.3);
  LossProblem p{oracle::random_map(8, 8, rng), {}, WeightMask::ones(8, 8)};
  for (double& w : p.weights.weights.data()) w = edge(rng) ? kEdgeWeight : kBaseWeight;
  for (;;) {
    p.pred = p.gt;
    double worst = 0.0;
    for (double& v : p.pred.values.data()) v += noise(rng);
    for (int r = 0; r < 8; ++r) {
      for (int c = 0; c < 8; ++c) worst = std::max(worst, std::abs(p.pred(r, c) - p.gt(r, c)));
    }
    bool safe = true;
    for (int r = 0; r < 8; ++r) {
      for (int c = 0; c < 8; ++c) {
        const double res = std::abs(p.pred(r, c) - p.gt(r, c));
        safe = safe && std::abs(res - 0.2 * worst) > 1e-3 && (res == worst || worst - res > 1e-3);
      }
    }
    if (safe) return p;
  }
}

Outcome gradient_verification() {
  Outcome o;
  constexpr double kTol = 1e-4;
  auto as_vec = [](const Grid<double>& g) { return std::vector<double>(g.data().begin(), g.data().end()); };

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto p = loss_problem(seed);
    std::vector<double*> xs;
    for (double& v : p.pred.values.data()) xs.push_back(&v);
    const std::string tag = " (seed " + std::to_string(seed) + ")";

    const auto b = losses::berhu_with_gradient(p.pred, p.gt);
    o.require(oracle::fd_max_error(xs, as_vec(b.gradient), [&] { return losses::berhu(p.pred, p.gt); }) < kTol,
              "berhu" + tag);
    const auto bw = losses::berhu_with_gradient(p.pred, p.gt, &p.weights);
    o.require(oracle::fd_max_error(xs, as_vec(bw.gradient), [&] { return losses::berhu(p.pred, p.gt, &p.weights); }) <
                  kTol,
              "weighted berhu" + tag);

    const std::vector<int> spacings = {1, 2, 4};
    const auto g = losses::scale_invariant_gradient_with_gradient(p.pred, p.gt, spacings);
    o.require(oracle::fd_max_error(xs, as_vec(g.gradient),
                                   [&] { return losses::scale_invariant_gradient(p.pred, p.gt, spacings); }) < kTol,
              "gradient loss" + tag);

    const auto n = losses::normal_loss_with_gradient(p.pred, p.gt);
    o.require(oracle::fd_max_error(xs, as_vec(n.gradient), [&] { return losses::normal_loss(p.pred, p.gt); }) < kTol,
              "normal loss" + tag);

    Rng rng(seed);
    auto points = losses::sample_grid_points(p.gt, p.pred, 4, 4, rng);
    const auto f = losses::gfrl_with_gradient(points);
    std::vector<double*> ps;
    for (auto& pt : points) ps.push_back(&pt.depth_pred);
    o.require(oracle::fd_max_error(ps, f.gradient, [&] { return losses::gfrl(points); }) < kTol, "gfrl" + tag);
  }

  using namespace blocks;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(1000 + seed);
    const int C = 2 + static_cast<int>(seed % 3);
    const std::string tag = " (seed " + std::to_string(seed) + ")";
    for (;;) {
      auto d = FeatureGrid::random(C, 8, 8, rng);
      auto gcb = FeatureGrid::random(C, 8, 8, rng);
      auto params = SabParams::random(C, rng);
      const auto up = FeatureGrid::random(C, 8, 8, rng);
      const auto fwd = sab_forward(d, gcb, params);
      bool kink = false;
      for (double z : fwd.cache.preactivation.data()) kink = kink || std::abs(z) < 1e-2;
      if (kink) continue;
      const auto gr = sab_backward(up, fwd.cache, params);
      auto obj = [&] { return oracle::inner(up, sab_forward(d, gcb, params).out); };
      double worst = oracle::fd_max_error(oracle::pointers(d), oracle::as_vector(gr.d_next), obj);
      worst = std::max(worst, oracle::fd_max_error(oracle::pointers(gcb), oracle::as_vector(gr.gcb_feat), obj));
      worst = std::max(worst, oracle::fd_max_error(oracle::pointers(params.squeeze_weight), gr.params.squeeze_weight, obj));
      worst = std::max(worst, oracle::fd_max_error({&params.squeeze_bias}, {gr.params.squeeze_bias}, obj));
      worst = std::max(worst, oracle::fd_max_error(oracle::pointers(params.fuse_weight), gr.params.fuse_weight, obj));
      worst = std::max(worst, oracle::fd_max_error(oracle::pointers(params.fuse_bias), gr.params.fuse_bias, obj));
      o.require(worst < kTol, "SAB" + tag);
      break;
    }
  }

  const std::pair<int, int> gcb_shapes[] = {{2, 1}, {3, 1}, {4, 2}};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(2000 + seed);
    const auto [C, ratio] = gcb_shapes[seed % 3];
    const std::string tag = " (seed " + std::to_string(seed) + ")";
    for (;;) {
      auto x = FeatureGrid::random(C, 8, 8, rng);
      auto params = GcbParams::random(C, ratio, rng);
      const auto up = FeatureGrid::random(C, 8, 8, rng);
      const auto fwd = gcb_forward(x, params);
      bool kink = false;
      for (double z : fwd.cache.preactivation) kink = kink || std::abs(z) < 1e-2;
      if (kink) continue;
      const auto gr = gcb_backward(up, fwd.cache, params);
      auto obj = [&] { return oracle::inner(up, gcb_forward(x, params).out); };
      double worst = oracle::fd_max_error(oracle::pointers(x), oracle::as_vector(gr.x), obj);
      worst = std::max(worst, oracle::fd_max_error(oracle::pointers(params.key), gr.params.key, obj));
      worst = std::max(worst, oracle::fd_max_error(oracle::pointers(params.down), gr.params.down, obj));
      worst = std::max(worst, oracle::fd_max_error(oracle::pointers(params.up), gr.params.up, obj));
      worst = std::max(worst, oracle::fd_max_error(oracle::pointers(params.norm_scale), gr.params.norm_scale, obj));
      worst = std::max(worst, oracle::fd_max_error(oracle::pointers(params.norm_shift), gr.params.norm_shift, obj));
      o.require(worst < kTol, "GCB" + tag);
      break;
    }
  }
  return o;
}

Outcome berhu_junction() {
  Outcome o;
  for (double c : {0.01, 0.1, 1.0}) {
    const double h = 1e-9;
    for (double x : {c, -c}) {
      const double s = x > 0 ? 1.0 : -1.0;
      const double inner_branch = std::abs(x);
      const double outer_branch = (x * x + c * c) / (2.0 * c);
      o.require(close_abs(inner_branch, outer_branch, 1e-6), "branch values");
      o.require(close_abs(losses::berhu_penalty(x, c), c, 1e-6), "penalty at junction");
      const double left = (losses::berhu_penalty(x, c) - losses::berhu_penalty(x - s * h, c)) / h;
      const double right = (losses::berhu_penalty(x + s * h, c) - losses::berhu_penalty(x, c)) / h;
      o.require(close_abs(left, right, 1e-6), "one-sided quotients at c=" + std::to_string(c));
      o.require(close_abs(left, 1.0, 1e-6), "left quotient");
    }
  }
  return o;
}

Outcome scale_invariance() {
  Outcome o;
  Rng rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    const auto gt = oracle::random_map(24, 24, rng, 0.5, 10.0, 0.05);
    const auto pred = oracle::random_map(24, 24, rng, 0.5, 10.0, 0.05);
    const double base = losses::scale_invariant_gradient(pred, gt);
    const auto m = metrics::evaluate(pred, gt);
    for (double alpha : {0.5, 2.0, 10.0}) {
      const auto sp = oracle::scaled(pred, alpha);
      const auto sg = oracle::scaled(gt, alpha);
      const double s = losses::scale_invariant_gradient(sp, sg);
      o.require(std::abs(s - base) <= 1e-12 * std::abs(base), "gradient loss under scaling");
      const auto ms = metrics::evaluate(sp, sg);
      o.require(std::abs(ms.rel - m.rel) <= 1e-12 * m.rel, "rel under scaling");
      o.require(std::abs(ms.log10 - m.log10) <= 1e-12 * m.log10, "log10 under scaling");
      o.require(ms.delta1 == m.delta1 && ms.delta2 == m.delta2 && ms.delta3 == m.delta3, "delta under scaling");
      o.require(std::abs(ms.rmse - alpha * m.rmse) <= 1e-12 * alpha * m.rmse, "rmse scales by alpha");
    }
  }
  return o;
}

Outcome gfrl_rl_equivalence() {
  Outcome o;
  Rng rng(55);
  std::uniform_real_distribution<double> gt(0.5, 10.0), pred(-5.0, 5.0);
  std::uniform_int_distribution<int> count(2, 40);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<losses::SamplePoint> pts;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) pts.push_back({i, i, gt(rng), pred(rng)});
    const double a = losses::gfrl(pts, 0.0);
    const double b = losses::relative_loss(pts);
    o.require(std::memcmp(&a, &b, sizeof a) == 0, "bit mismatch on trial " + std::to_string(trial));
  }
  return o;
}

Outcome focal_behaviour() {
  Outcome o;
  const double correct = losses::gfrl_pair_term(1, 10.0, 2.0) / losses::gfrl_pair_term(1, 10.0, 0.0);
  const double wrong = losses::gfrl_pair_term(1, -10.0, 2.0) / losses::gfrl_pair_term(1, -10.0, 0.0);
  o.require(correct < 1e-6, "correct pair ratio " + std::to_string(correct));
  o.require(wrong > 0.99, "incorrect pair ratio " + std::to_string(wrong));
  const double correct_neg = losses::gfrl_pair_term(-1, -10.0, 2.0) / losses::gfrl_pair_term(-1, -10.0, 0.0);
  o.require(correct_neg < 1e-6, "correct r=-1 pair ratio");
  return o;
}

Outcome sampler_balance() {
  Outcome o;
  using namespace mixer;
  constexpr std::size_t kDraws = 100000;
  const auto three = default_curriculum().with_datasets(
      {{"a", Category::kIndoor, 100}, {"b", Category::kIndoor, 300}, {"c", Category::kSynthetic, 600}});
  Rng rng(7);
  std::map<std::string, double> counts;
  for (std::size_t b = 0; b < kDraws / 1000; ++b) {
    for (const auto& e : next_batch(three, 1000, rng).entries) counts[e.dataset_id] += 1.0;
  }
  const std::vector<double> observed = {counts["a"], counts["b"], counts["c"]};
  const double stat = oracle::chi_square(observed, std::vector<double>(3, kDraws / 3.0));
  o.require(stat < oracle::chi_square_critical_01(2), "dataset chi-square " + std::to_string(stat));

  const auto small = default_curriculum().with_datasets({{"ten", Category::kIndoor, 10}, {"big", Category::kIndoor, 90}});
  std::vector<double> images(10, 0.0);
  double in_ten = 0.0;
  for (std::size_t b = 0; b < kDraws / 1000; ++b) {
    for (const auto& e : next_batch(small, 1000, rng).entries) {
      if (e.dataset_id != "ten") continue;
      images[e.image] += 1.0;
      in_ten += 1.0;
    }
  }
  const double image_stat = oracle::chi_square(images, std::vector<double>(10, in_ten / 10.0));
  o.require(image_stat < oracle::chi_square_critical_01(9), "image chi-square " + std::to_string(image_stat));
  return o;
}

Outcome curriculum_staging() {
  Outcome o;
  using namespace mixer;
  const PlateauConfig cfg{1e-3, 3};
  auto flat = default_curriculum().with_datasets({{"a", Category::kIndoor, 5}});
  std::vector<int> at;
  for (int epoch = 1; epoch <= 20; ++epoch) {
    if (observe_epoch(flat, 0.42, cfg)) at.push_back(epoch);
  }
  o.require(at == std::vector<int>{3, 6}, "constant replay transitions");
  auto improving = default_curriculum().with_datasets({{"a", Category::kIndoor, 5}});
  double loss = 2.0;
  for (int epoch = 1; epoch <= 100; ++epoch, loss *= 0.95) {
    o.require(!observe_epoch(improving, loss, cfg), "improving replay advanced at " + std::to_string(epoch));
  }
  return o;
}

Outcome metrics_oracle() {
  Outcome o;
  Rng rng(66);
  const auto gt = oracle::random_map(12, 12, rng, 0.5, 10.0);
  const auto a = metrics::evaluate(oracle::scaled(gt, 1.2), gt);
  o.require(close_abs(a.rel, 0.2, 1e-6), "rel for 1.2 gt");
  o.require(a.delta1 == 1.0, "delta1 for 1.2 gt");
  o.require(close_abs(a.log10, 0.0791812, 1e-6), "log10 for 1.2 gt");

  Grid<double> dyadic(8, 8);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) dyadic(r, c) = std::ldexp(1.0 + (r * 8 + c) / 64.0, (r + c) % 5 - 2);
  }
  const auto b = metrics::evaluate(oracle::scaled(DepthMap(dyadic), 1.25), DepthMap(dyadic));
  o.require(b.delta1 == 0.0, "delta1 for 1.25 gt");
  o.require(b.delta2 == 1.0, "delta2 for 1.25 gt");

  for (int trial = 0; trial < 1000; ++trial) {
    const auto g = oracle::random_map(6, 6, rng, 0.2, 20.0, 0.1);
    const auto p = oracle::random_map(6, 6, rng, 0.2, 20.0, 0.1);
    const auto m = metrics::evaluate(p, g);
    o.require(m.delta1 <= m.delta2 && m.delta2 <= m.delta3, "delta monotonicity");
  }
  return o;
}

Outcome edge_pipeline() {
  Outcome o;
  const auto step = oracle::step_map();
  const auto weights = boundary_weight_mask(step, 0.5, 2.0);
  const auto expected = oracle::brute_dilate(oracle::reference_canny(step, 0.5, 2.0), 5);
  for (int r = 0; r < 16; ++r) {
    int band = 0;
    for (int c = 0; c < 16; ++c) {
      band += weights(r, c) == kEdgeWeight;
      o.require(weights(r, c) == (expected(r, c) ? kEdgeWeight : kBaseWeight), "differs from dilation oracle");
    }
    o.require(band == 5, "band width in row " + std::to_string(r) + " is " + std::to_string(band));
  }
  Rng rng(77);
  std::uniform_int_distribution<int> dim(1, 32);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto m = oracle::random_map(dim(rng), dim(rng), rng, 0.3, 30.0, 0.1);
    const auto w = boundary_weight_mask(m);
    for (double v : w.weights.data()) o.require(v == kBaseWeight || v == kEdgeWeight, "weight outside {1, 5}");
  }
  return o;
}

Outcome io_round_trips() {
  Outcome o;
  Rng rng(88);
  std::uniform_int_distribution<int> dim(1, 24);
  for (int trial = 0; trial < 1000; ++trial) {
    DepthMap m = oracle::random_map(dim(rng), dim(rng), rng, 1e-3, 1e3, 0.1);
    for (int r = 0; r < m.height(); ++r) {
      for (int c = 0; c < m.width(); ++c) {
        if (m.is_valid(r, c)) m.values(r, c) = static_cast<float>(m(r, c));
      }
    }
    const auto back = io::read_pfm_depth(io::write_pfm(m));
    bool same = back.valid == m.valid && back.height() == m.height() && back.width() == m.width();
    for (int r = 0; same && r < m.height(); ++r) {
      for (int c = 0; c < m.width(); ++c) same = same && (!m.is_valid(r, c) || back(r, c) == m(r, c));
    }
    o.require(same, "PFM round trip");
  }

  io::Bytes file = {'P', 'f', '\n', '1', ' ', '1', '\n', '-', '1', '.', '0', '\n', 0x00, 0x00, 0x00, 0x40};
  const auto one = io::read_pfm_depth(file);
  o.require(one.height() == 1 && one.width() == 1 && one(0, 0) == 2.0 && one.is_valid(0, 0), "1x1 PFM parse");
  o.require(io::write_pfm(one) == file, "1x1 PFM bytes");

  std::uniform_int_distribution<int> byte(0, 255), length(0, 96);
  const io::Bytes seeds[] = {file, io::write_pfm(oracle::random_map(4, 3, rng)),
                             io::write_pgm16(oracle::random_map(3, 4, rng, 0.5, 5.0, 0.3))};
  const std::string headers[] = {"Pf\n", "PF\n", "P5\n", "Pf\n3 2\n", "P5\n2 2\n65535\n", ""};
  for (int trial = 0; trial < 10000; ++trial) {
    io::Bytes b;
    if (trial % 2 == 0) {
      b = seeds[trial % 3];
      std::uniform_int_distribution<std::size_t> pos(0, b.size() - 1);
      for (int e = 0; e <= trial % 5; ++e) b[pos(rng)] = static_cast<std::uint8_t>(byte(rng));
      if (trial % 7 == 0) b.resize(pos(rng));
    } else {
      const auto& h = headers[trial % 6];
      b.assign(h.begin(), h.end());
      const int n = length(rng);
      for (int i = 0; i < n; ++i) b.push_back(static_cast<std::uint8_t>(byte(rng)));
    }
    for (int reader = 0; reader < 2; ++reader) {
      try {
        const DepthMap m = reader == 0 ? io::read_pfm_depth(b) : io::read_pgm16(b);
        o.require(validate(m).empty(), "fuzzed input produced an invalid map");
      } catch (const io::ParseError&) {
      } catch (const std::exception& e) {
        o.require(false, std::string("unexpected exception: ") + e.what());
      }
    }
  }
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / "sadepth_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir / "gt");
  fs::create_directories(dir / "pred");
  Rng rng(99);
  for (int i = 0; i < 8; ++i) {
    const std::string name = "img" + std::to_string(i) + ".pfm";
    io::write_file(dir / "gt" / name, io::write_pfm(oracle::random_map(24, 32, rng, 0.5, 10.0, 0.05)));
    io::write_file(dir / "pred" / name, io::write_pfm(oracle::random_map(24, 32, rng, 0.5, 10.0, 0.05)));
  }
  {
    std::ofstream spec(dir / "datasets.json");
    spec << R"([{"id":"nyu","category":"I","size":120},{"id":"syn","category":"S","size":700},)"
         << R"({"id":"pt","category":"PT","size":40},{"id":"hc","category":"HC","size":15}])";
    std::ofstream hist(dir / "history.csv");
    hist << "epoch,loss\n";
    for (int e = 1; e <= 15; ++e) hist << e << "," << (e < 5 ? 1.0 / e : 0.2) << "\n";
  }

  auto run = [&](std::vector<std::string> args, const std::string& report) {
    args.push_back("--report");
    args.push_back((dir / report).string());
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    o.require(code == 0, "command failed: " + err.str());
    return slurp(dir / report);
  };
  const std::vector<std::string> loss = {"loss", "--pred", (dir / "pred").string(), "--gt", (dir / "gt").string(),
                                         "--seed", "1234", "--edge-weights"};
  auto with_jobs = [](std::vector<std::string> args, const char* jobs) {
    args.push_back("--jobs");
    args.push_back(jobs);
    return args;
  };
  const auto l1 = run(loss, "loss1.json");
  const auto l2 = run(loss, "loss2.json");
  const auto l4 = run(with_jobs(loss, "4"), "loss_jobs4.json");
  o.require(!l1.empty() && l1 == l2, "cmd_loss differs between runs");
  o.require(l1 == l4, "cmd_loss differs under parallel processing");

  const std::vector<std::string> sample = {"sample", "--datasets", (dir / "datasets.json").string(), "--auto",
                                           "--history", (dir / "history.csv").string(), "--patience", "3",
                                           "--batches", "20", "--seed", "5678"};
  const auto s1 = run(sample, "sample1.json");
  const auto s2 = run(sample, "sample2.json");
  o.require(!s1.empty() && s1 == s2, "cmd_sample differs between runs");
  fs::remove_all(dir);
  return o;
}

struct Criterion {
  const char* id;
  const char* name;
  std::function<Outcome()> check;
  double time_limit_s;  // 0 = no limit
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"AC1", "loss oracle suite", loss_oracles, 1.0},
      {"AC2", "gradient verification (20 seeds each)", gradient_verification, 30.0},
      {"AC3", "BerHu C1 junction", berhu_junction, 0.0},
      {"AC4", "scale invariance", scale_invariance, 0.0},
      {"AC5", "GFRL gamma=0 equals relative loss bit for bit", gfrl_rl_equivalence, 0.0},
      {"AC6", "focal behaviour", focal_behaviour, 0.0},
      {"AC7", "sampler balance (chi-square, 0.01)", sampler_balance, 5.0},
      {"AC8", "curriculum staging", curriculum_staging, 0.0},
      {"AC9", "metrics oracle", metrics_oracle, 0.0},
      {"AC10", "edge pipeline", edge_pipeline, 0.0},
      {"AC11", "I/O round trips and fuzzing", io_round_trips, 0.0},
      {"AC12", "determinism of loss and sample reports", determinism, 0.0},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0.0 && seconds >= c.time_limit_s) {
      o.require(false, "runtime " + std::to_string(seconds) + " s exceeds " + std::to_string(c.time_limit_s) + " s");
    }
    std::printf("[%s] %-5s %-48s %8.3f s%s%s\n", o.passed ? "PASS" : "FAIL", c.id, c.name, seconds,
                o.detail.empty() ? "" : "  ", o.detail.c_str());
    failures += o.passed ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
