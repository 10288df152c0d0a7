// Acceptance run: one [PASS]/[FAIL] line per criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gazeforge/blocks/gradcheck.hpp"
#include "gazeforge/cli.hpp"
#include "gazeforge/io/dataset.hpp"
#include "gazeforge/io/digest.hpp"
#include "gazeforge/io/map_io.hpp"
#include "gazeforge/loss.hpp"
#include "gazeforge/metrics.hpp"
#include "gazeforge/ot_oracle.hpp"
#include "gazeforge/saliency_gen.hpp"
#include "oracles.hpp"

using namespace gazeforge;
namespace fs = std::filesystem;
namespace b = gazeforge::blocks;

namespace {

// Tolerances and limits fixed by the acceptance contract.
constexpr double kOtTolerance = 1e-9;
constexpr double kOtSeconds = 10;
constexpr int kOtPairs = 1000;
constexpr Eigen::Index kOtMaxLength = 64;
constexpr double kGradTolerance = 1e-4;
constexpr int kGradInstances = 20;
constexpr double kGradSeconds = 60;
constexpr double kLossStep = 1e-5;
constexpr double kWeightTolerance = 1e-4;
constexpr double kWeightA = 0.8466, kWeightB = 1.6931;
constexpr double kPolyHalf = 0.53589, kPolyTolerance = 1e-5;
constexpr double kNssTolerance = 1e-12;
constexpr double kAucIndicator = 0.99;
constexpr double kAucNoiseTolerance = 0.05;
constexpr int kAucSplits = 100;
constexpr double kMetricSeconds = 30;
constexpr double kPipelineSeconds = 60;
constexpr double kPipelineSim = 1, kSimTolerance = 1e-9;
constexpr double kPipelineAuc = 0.95;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("failed: " + what);
    }
  }
  void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

using Batch = std::vector<RealMap<double>>;

RealMap<double> random_map(std::mt19937_64& rng, Eigen::Index h, Eigen::Index w, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return RealMap<double>::NullaryExpr(h, w, [&] { return u(rng); });
}

Eigen::VectorXd pack(const Batch& batch) {
  Eigen::Index n = 0;
  for (const auto& m : batch) n += m.size();
  Eigen::VectorXd v(n);
  Eigen::Index o = 0;
  for (const auto& m : batch)
    for (Eigen::Index i = 0; i < m.size(); ++i) v(o++) = m.data()[i];
  return v;
}

Batch unpack(const Eigen::VectorXd& v, const Batch& like) {
  Batch out = like;
  Eigen::Index o = 0;
  for (auto& m : out)
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = v(o++);
  return out;
}

Eigen::VectorXd squeeze(const Batch& batch) {
  std::vector<double> vals;
  for (const auto& m : batch)
    for (Eigen::Index r = 0; r + 1 < m.rows(); r += 2)
      for (Eigen::Index c = 0; c + 1 < m.cols(); c += 2)
        vals.push_back((m(r, c) + m(r + 1, c) + m(r, c + 1) + m(r + 1, c + 1)) / 4);
  Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  return v / v.sum();
}

Outcome criterion1() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  double worst = 0;
  for (int pair = 0; pair < kOtPairs; ++pair) {
    Batch bp, bq;
    Eigen::VectorXd p, q;
    if (pair % 2 == 0) {
      // Known distributions spread over 2x(2k) maps of constant 2x2 blocks, one scale per side.
      const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % kOtMaxLength);
      p = oracle::random_distribution(rng, n);
      q = oracle::random_distribution(rng, n);
      const double sp = 1 + static_cast<double>(rng() % 5), sq = 1 + static_cast<double>(rng() % 5);
      for (Eigen::Index start = 0; start < n;) {
        const Eigen::Index len = std::min<Eigen::Index>(n - start, 1 + static_cast<Eigen::Index>(rng() % 8));
        RealMap<double> mp(2, 2 * len), mq(2, 2 * len);
        for (Eigen::Index i = 0; i < len; ++i) {
          mp.block(0, 2 * i, 2, 2).setConstant(sp * p(start + i));
          mq.block(0, 2 * i, 2, 2).setConstant(sq * q(start + i));
        }
        bp.push_back(mp);
        bq.push_back(mq);
        start += len;
      }
    } else {
      // Arbitrary maps; the oracle input is an independent 2x2 average and normalization.
      Eigen::Index cells = 0;
      while (true) {
        const Eigen::Index h = 2 + static_cast<Eigen::Index>(rng() % 7), w = 2 + static_cast<Eigen::Index>(rng() % 7);
        if (cells + (h / 2) * (w / 2) > kOtMaxLength) break;
        cells += (h / 2) * (w / 2);
        bp.push_back(random_map(rng, h, w, 0, 1));
        bq.push_back(random_map(rng, h, w, 0, 1));
      }
      p = squeeze(bp);
      q = squeeze(bq);
    }
    const double got = batch_wasserstein(bp, bq).value;
    const double want = exact_ot_oracle(p, q, kOtMaxLength);
    worst = std::max(worst, std::abs(got - want));
  }
  const double t = seconds_since(t0);
  o.require(worst <= kOtTolerance, "max |bW - OT| " + fmt(worst) + " > " + fmt(kOtTolerance));
  o.require(t < kOtSeconds, "runtime " + fmt(t) + " s");
  o.note(std::to_string(kOtPairs) + " pairs, max |bW - OT| = " + fmt(worst) + ", " + fmt(t) + " s");
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);

  auto check_loss = [&](const std::string& name, const std::function<bool(double&)>& instance) {
    int done = 0, attempts = 0;
    double worst = 0;
    while (done < kGradInstances && attempts < 10 * kGradInstances) {
      ++attempts;
      double err = 0;
      if (!instance(err)) continue;  // kink: excluded
      worst = std::max(worst, err);
      ++done;
    }
    o.require(done >= kGradInstances, name + ": only " + std::to_string(done) + " instances away from kinks");
    o.require(worst < kGradTolerance, name + ": max rel error " + fmt(worst));
    o.note(name + " " + std::to_string(done) + "x max " + fmt(worst));
  };

  check_loss("bce_loss", [&](double& err) {
    const Batch pred{random_map(rng, 6, 6, 0.05, 0.95), random_map(rng, 4, 6, 0.05, 0.95)};
    const Batch gt{random_map(rng, 6, 6, 0, 1), random_map(rng, 4, 6, 0, 1)};
    const auto r = bce_loss(pred, gt);
    Batch grad = r.gradient;
    const auto numeric = oracle::central_gradient(
        [&](const Eigen::VectorXd& x) { return bce_loss(unpack(x, pred), gt).value; }, pack(pred), kLossStep);
    err = oracle::max_relative_error(pack(grad), numeric);
    return true;
  });

  check_loss("batch_wasserstein", [&](double& err) {
    const Batch pred{random_map(rng, 6, 6, 0.1, 1), random_map(rng, 4, 4, 0.1, 1)};
    const Batch gt{random_map(rng, 6, 6, 0, 1), random_map(rng, 4, 4, 0, 1)};
    const auto r = batch_wasserstein(pred, gt);
    if (r.min_abs_cdf_gap < 1e-8) return false;
    Batch full;
    for (std::size_t i = 0; i < pred.size(); ++i)
      full.push_back(upsample_gradient(r.gradient[i], pred[i].rows(), pred[i].cols()));
    const auto numeric = oracle::central_gradient(
        [&](const Eigen::VectorXd& x) { return batch_wasserstein(unpack(x, pred), gt).value; }, pack(pred),
        kLossStep);
    err = oracle::max_relative_error(pack(full), numeric);
    return true;
  });

  check_loss("cross_entropy_seg", [&](double& err) {
    const int classes = 2 + static_cast<int>(rng() % 4);
    LabelGrid g(5, 6);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = static_cast<int>(rng() % classes);
    const LabelMask labels(g, classes);
    ScoreStack<double> logits = ScoreStack<double>::NullaryExpr(classes, g.size(), [&] {
      return std::uniform_real_distribution<double>(-3, 3)(rng);
    });
    const auto r = cross_entropy_seg(logits, labels);
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(logits.data(), logits.size());
    const auto numeric = oracle::central_gradient(
        [&](const Eigen::VectorXd& v) {
          return cross_entropy_seg(ScoreStack<double>(Eigen::Map<const ScoreStack<double>>(v.data(), classes, g.size())),
                                   labels)
              .value;
        },
        x, kLossStep);
    err = oracle::max_relative_error(Eigen::Map<const Eigen::VectorXd>(r.gradient.data(), r.gradient.size()), numeric);
    return true;
  });

  for (const auto& e : b::gradcheck_suite(303, kGradInstances)) {
    o.require(e.instances >= kGradInstances && e.checked > 0, e.block + ": too few instances");
    o.require(e.max_rel_error < kGradTolerance, e.block + ": max rel error " + fmt(e.max_rel_error));
    o.note(e.block + " " + std::to_string(e.instances) + "x max " + fmt(e.max_rel_error) + " (" +
           std::to_string(e.excluded) + " kink coords excluded)");
  }
  const double t = seconds_since(t0);
  o.require(t < kGradSeconds, "runtime " + fmt(t) + " s");
  o.note(fmt(t) + " s");
  return o;
}

Outcome criterion3() {
  Outcome o;
  // Direct: A has relative deformation 1 and displacement 5; B has 2 and 10.
  std::vector<PartDynamics> dyn(2);
  dyn[0].instrument_id = 1;
  dyn[0].deformation = 1;
  dyn[0].displacement = 5;
  dyn[1].instrument_id = 2;
  dyn[1].deformation = 2;
  dyn[1].displacement = 10;
  const auto w = instrument_weights(dyn, {0.5, 0.5, 1e-6});
  o.require(std::abs(w.at(1) - kWeightA) < kWeightTolerance, "w_A = " + fmt(w.at(1)));
  o.require(std::abs(w.at(2) - kWeightB) < kWeightTolerance, "w_B = " + fmt(w.at(2)));

  // The same case built from masks: A keeps 100 px and shifts by (3, 4); B grows from 100 to
  // 200 px and its centroid shifts by (6, 8).
  LabelGrid prev = LabelGrid::Zero(60, 60), now = LabelGrid::Zero(60, 60);
  prev.block(5, 5, 10, 10).setConstant(encode_part(1, Part::wrist));
  now.block(8, 9, 10, 10).setConstant(encode_part(1, Part::wrist));
  prev.block(30, 10, 10, 10).setConstant(encode_part(2, Part::wrist));
  now.block(36, 13, 10, 20).setConstant(encode_part(2, Part::wrist));
  const auto frame = generate_frame_saliency(LabelMask(now), LabelMask(prev));
  o.require(std::abs(frame.weights.at(1) - kWeightA) < kWeightTolerance, "mask w_A = " + fmt(frame.weights.at(1)));
  o.require(std::abs(frame.weights.at(2) - kWeightB) < kWeightTolerance, "mask w_B = " + fmt(frame.weights.at(2)));
  o.require(frame.scanpath.instrument_order() == std::vector<int>{2, 1}, "scanpath does not visit B before A");
  o.note("w = (" + fmt(frame.weights.at(1)) + ", " + fmt(frame.weights.at(2)) + "), order B, A");
  return o;
}

Outcome criterion4() {
  Outcome o;
  const long max_iter = 1000;
  o.require(poly_weight(0, max_iter, 0.9) == 1.0, "poly_weight(0) != 1");
  o.require(poly_weight(max_iter, max_iter, 0.9) == 0.0, "poly_weight(max) != 0");
  const double half = poly_weight(max_iter / 2, max_iter, 0.9);
  o.require(std::abs(half - kPolyHalf) <= kPolyTolerance, "poly_weight(max/2) = " + fmt(half));

  for (Task task : {Task::segmentation, Task::saliency}) {
    const long k = 400;
    TwoPhaseSchedule s(max_iter, 0.9);
    bool phase1_ok = true, phase2_ok = true, decayed = false;
    for (long it = 0; it <= max_iter; ++it) {
      const auto w = s.step(it, it == k ? std::optional<Task>(task) : std::nullopt);
      if (it < k) {
        phase1_ok &= w.segmentation == 1.0 && w.saliency == 1.0;
        continue;
      }
      const double moving = task == Task::segmentation ? w.segmentation : w.saliency;
      const double fixed = task == Task::segmentation ? w.saliency : w.segmentation;
      const double expected = it == k ? 1.0 : poly_weight(it - k, max_iter - k, 0.9);
      phase2_ok &= fixed == 1.0 && moving == expected;
      decayed |= moving < 1.0;
    }
    o.require(phase1_ok, std::string("phase I is not (1,1) for ") + to_string(task));
    o.require(phase2_ok && decayed, std::string("phase II does not decay exactly ") + to_string(task));
  }
  o.note("poly(max/2) = " + fmt(half));
  return o;
}

Outcome criterion5() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(505);
  for (int trial = 0; trial < 20; ++trial) {
    const int h = 8 + static_cast<int>(rng() % 40), w = 8 + static_cast<int>(rng() % 40);
    LabelGrid g = LabelGrid::Zero(h, w);
    for (int k = 0; k < 4; ++k) {
      const int r = static_cast<int>(rng() % (h - 4)), c = static_cast<int>(rng() % (w - 4));
      g.block(r, c, 1 + rng() % (h - r), 1 + rng() % (w - c)).setConstant(1 + static_cast<int>(rng() % 3));
    }
    const LabelMask m(g);
    o.require(dice(m, m).mean == 1.0 && dice(m, m, DiceMode::binary).mean == 1.0, "dice(x,x) != 1");
    o.require(hausdorff(m, m) == 0.0, "hausdorff(x,x) != 0");
    const auto sal = random_map(rng, h, w, 0, 1);
    o.require(std::abs(similarity(sal, sal) - 1.0) < 1e-12, "similarity(x,x) != 1");
    FixationSet all;
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) all.push_back({1, Part::wrist, {r, c}, 1});
    o.require(std::abs(nss(sal, all)) <= kNssTolerance, "NSS over all pixels = " + fmt(nss(sal, all)));
  }

  double worst_indicator = 1, worst_noise = 0;
  for (int trial = 0; trial < 5; ++trial) {
    FixationSet fix;
    RealMap<double> indicator = RealMap<double>::Zero(64, 64);
    for (int k = 0; k < 50; ++k) {
      const int r = static_cast<int>(rng() % 64), c = static_cast<int>(rng() % 64);
      fix.push_back({1, Part::wrist, {r, c}, 1});
      indicator(r, c) = 1;
    }
    const AucBorjiParams params{kAucSplits, 0, 1000u + trial};
    worst_indicator = std::min(worst_indicator, auc_borji(indicator, fix, params));
    // Enough fixations that the Monte-Carlo spread sits well inside the tolerance.
    FixationSet many;
    for (int k = 0; k < 400; ++k)
      many.push_back({1, Part::wrist, {static_cast<int>(rng() % 64), static_cast<int>(rng() % 64)}, 1});
    const auto noise = random_map(rng, 64, 64, 0, 1);
    worst_noise = std::max(worst_noise, std::abs(auc_borji(noise, many, params) - 0.5));
  }
  o.require(worst_indicator >= kAucIndicator, "indicator AUC " + fmt(worst_indicator));
  o.require(worst_noise <= kAucNoiseTolerance, "noise AUC off by " + fmt(worst_noise));
  const double t = seconds_since(t0);
  o.require(t < kMetricSeconds, "runtime " + fmt(t) + " s");
  o.note("indicator AUC >= " + fmt(worst_indicator) + ", |noise AUC - 0.5| <= " + fmt(worst_noise) + ", " + fmt(t) +
         " s");
  return o;
}

std::map<std::string, std::string> report_digests(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".csv" || ext == ".json"))
      out[e.path().lexically_relative(dir).generic_string()] = io::sha256_file(e.path());
  }
  return out;
}

std::vector<double> csv_column(const fs::path& file, const std::string& column) {
  std::istringstream in(io::read_file(file));
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) header.push_back(c);
  }
  const auto idx = static_cast<std::size_t>(std::find(header.begin(), header.end(), column) - header.begin());
  std::vector<double> values;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string c;
    for (std::size_t i = 0; std::getline(ls, c, ','); ++i)
      if (i == idx) values.push_back(c.empty() ? std::nan("") : std::stod(c));
  }
  return values;
}

Outcome criterion6(const fs::path& work, const fs::path& fixtures) {
  Outcome o;
  const auto t0 = Clock::now();
  const std::string root = fixtures.string();
  const auto masks = io::sequence_dir(fixtures, "1") / io::kInstrumentsDir;
  std::vector<std::map<std::string, std::string>> digests;
  // Same paths both times: manifests echo input paths, so only a true rerun is comparable.
  const fs::path dir = work / "golden";
  for (const std::string run : {"first run", "rerun"}) {
    fs::remove_all(dir);
    const std::string gen = (dir / "gen").string(), sp = (dir / "scanpath_pred").string();
    const std::vector<std::vector<std::string>> steps = {
        {"gen-saliency", "--root", root, "--seq", "1", "--out", gen, "--seed", "17"},
        {"gen-scanpath", "--root", root, "--seq", "1", "--out", sp, "--pred", gen, "--seed", "17"},
        {"eval-saliency", "--pred", gen, "--gt", gen, "--out", (dir / "eval_saliency").string(), "--seed", "17"},
        {"eval-seg", "--root", root, "--seq", "1", "--pred", masks.string(), "--out", (dir / "eval_seg").string()},
        {"eval-scanpath", "--pred", sp, "--gt", gen, "--out", (dir / "eval_scanpath").string()},
    };
    for (const auto& args : steps) {
      std::ostringstream out, err;
      const int code = run_command(args, out, err);
      o.require(code == 0, run + " " + args[0] + " exited " + std::to_string(code) + ": " + err.str());
      if (code != 0) return o;
    }
    digests.push_back(report_digests(dir));
  }
  o.require(digests[0] == digests[1], "CSV/JSON digests differ between reruns");

  const fs::path run = dir;
  const auto maps = io::frame_files(run / "gen" / "saliency", ".f32");
  o.require(!maps.empty(), "no maps generated");
  for (const auto& [id, file] : maps) {
    const auto m = io::read_map(file);
    o.require(m.minCoeff() >= 0.0f && m.maxCoeff() <= 1.0f, "frame " + std::to_string(id) + " outside [0,1]");
    o.require(m.maxCoeff() == 0.0f || m.maxCoeff() == 1.0f, "frame " + std::to_string(id) + " max not in {0,1}");
  }
  const auto sim = csv_column(run / "eval_saliency" / "saliency_metrics.csv", "sim");
  const auto auc = csv_column(run / "eval_saliency" / "saliency_metrics.csv", "auc_borji");
  double min_auc = 1, worst_sim = 0;
  for (double s : sim) worst_sim = std::max(worst_sim, std::isnan(s) ? 1.0 : std::abs(s - kPipelineSim));
  for (double a : auc) min_auc = std::min(min_auc, std::isnan(a) ? 0.0 : a);
  o.require(sim.size() == maps.size() && worst_sim <= kSimTolerance, "SIM off by " + fmt(worst_sim));
  o.require(auc.size() == maps.size() && min_auc >= kPipelineAuc, "AUC-Borji min " + fmt(min_auc));
  const double t = seconds_since(t0);
  o.require(t < kPipelineSeconds, "runtime " + fmt(t) + " s");
  o.note(std::to_string(maps.size()) + " frames, " + std::to_string(digests[0].size()) +
         " report files identical across reruns, min AUC " + fmt(min_auc) + ", " + fmt(t) + " s");
  return o;
}

Outcome criterion7() {
  Outcome o;
  std::mt19937_64 rng(707);
  for (auto kind : {b::DecoderKind::attention, b::DecoderKind::scse}) {
    std::vector<b::DecoderBlockParams<double>> stack{b::random_decoder_block(rng, kind, 6, 4, 4),
                                                     b::random_decoder_block(rng, kind, 4, 4, 4),
                                                     b::random_decoder_block(rng, kind, 4, 4, 2)};
    const auto y = b::decoder_forward<double>({b::Tensor::uniform({2, 6, 8, 8}, rng)}, stack, kind);
    o.require(y.height() == 64 && y.width() == 64 && y.batch() == 2,
              std::string("decoder ") + b::to_string(kind) + " gives " + b::dims_string(y.dims()));
  }
  auto br = b::random_boundary_refinement(rng, 3);
  br.second.weight.values().setZero();
  br.second.bias.setZero();
  const auto x = b::Tensor::uniform({2, 3, 11, 9}, rng, -5.0, 5.0);
  const auto y = b::br_forward(x, br);
  o.require(y.same_dims(x) &&
                std::memcmp(y.values().data(), x.values().data(), sizeof(double) * static_cast<std::size_t>(x.size())) == 0,
            "BR with zeroed branch is not bit-identical");
  o.note("AM and scSE stacks 8x8 -> 64x64; BR identity bitwise");
  return o;
}

Outcome criterion8() {
  Outcome o;
  std::mt19937_64 rng(808);
  for (int trial = 0; trial < 20; ++trial) {
    const Batch pred{random_map(rng, 8, 6, 0.01, 0.99), random_map(rng, 4, 4, 0.01, 0.99)};
    const Batch gt{random_map(rng, 8, 6, 0, 1), random_map(rng, 4, 4, 0, 1)};
    const double bce = bce_loss(pred, gt).value, bw = batch_wasserstein(pred, gt).value;
    o.require(fused_saliency_loss(pred, gt, 0.0).value == bce, "alpha=0 is not BCE");
    o.require(fused_saliency_loss(pred, gt, 1.0).value == bw, "alpha=1 is not bW");
    const double l_seg = std::uniform_real_distribution<double>(0, 5)(rng);
    o.require(total_loss(l_seg, bce, 1.0, 1.0) == l_seg + bce, "lambda=(1,1) is not the plain sum");
  }
  o.note("exact equality on 20 random batches");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string work = "acceptance_work", fixtures = "fixtures";
  app.add_option("--work-dir", work)->capture_default_str();
  app.add_option("--fixtures", fixtures)->capture_default_str()->check(CLI::ExistingDirectory);
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"OT oracle equivalence", criterion1},
      {"gradient suite", criterion2},
      {"instrument weight worked example", criterion3},
      {"schedule contract", criterion4},
      {"metric identities", criterion5},
      {"pipeline golden run", [&] { return criterion6(work, fixtures); }},
      {"shape contract", criterion7},
      {"loss fusion endpoints", criterion8},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.notes.push_back(std::string("exception: ") + e.what());
    }
    std::string detail;
    for (const auto& n : o.notes) detail += (detail.empty() ? "" : "; ") + n;
    std::cout << (o.pass ? "[PASS]" : "[FAIL]") << " criterion " << i + 1 << ": " << criteria[i].first << " -- "
              << detail << std::endl;
    failed += o.pass ? 0 : 1;
  }
  std::cout << (failed ? std::to_string(failed) + " criterion(s) failed" : std::string("all criteria passed")) << '\n';
  return failed ? 1 : 0;
}
