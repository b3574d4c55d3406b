// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance [RUN_DIR]
//
// RUN_DIR (default ./acceptance_run) receives the full pipeline artifacts of
// the nominal run (run_a, also holding the rotor-failure scenario) and of the
// repeat run used for the determinism check (run_b).

#include "nnreach/io.hpp"
#include "nnreach/pipeline.hpp"
#include "nnreach/rng.hpp"

#include "support/artifacts.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace nnreach;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Outcome {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<Outcome> outcomes;

void record(int id, std::string name, bool passed, std::string detail) {
  std::printf("[%s] %d. %s: %s\n", passed ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  outcomes.push_back({id, std::move(name), passed, std::move(detail)});
}

MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  MatrixXd M(r, c);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = rng.uniform(-1, 1);
  return M;
}

// Criterion 3 is checked on every tube this program produces.
struct Sandwich {
  std::size_t tubes = 0, checks = 0, violations = 0;

  void check(const ReachTube<double>& tube) {
    ++tubes;
    for (const auto& f : tube.fronts)
      for (Eigen::Index i = 0; i < f.size(); ++i) {
        ++checks;
        if (!outer_contains(f, VectorXd(f.contacts.col(i)), 1e-9)) ++violations;
      }
  }
} sandwich;

void dmdc_recovery() {
  const auto t0 = Clock::now();
  Rng rng(1);
  double worst = 0.0;
  for (int s = 0; s < 50; ++s) {
    MatrixXd A = random_matrix(rng, 6, 6);
    A *= 0.9 / A.eigenvalues().cwiseAbs().maxCoeff();
    const MatrixXd B = random_matrix(rng, 6, 2);
    const StepOracle<double> lti = [&](const VectorXd& x, const VectorXd& u) -> VectorXd { return A * x + B * u; };
    const ColumnSampler<double> excite = [s](std::size_t j) -> VectorXd {
      Rng r = Rng::substream(100 + s, j);
      return random_matrix(r, 2, 1);
    };
    const auto step = fit(build_window<double>(lti, random_matrix(rng, 6, 1), excite, 20, 0.1));
    worst = std::max(worst, (A - step.A).norm() + (B - step.B).norm());
  }
  const double t = seconds_since(t0);
  record(1, "DMDc exact recovery", worst <= 1e-6 && t < 5.0,
         "max ||A-A^||_F+||B-B^||_F = " + fmt("%.3g", worst) + " (<= 1e-6) over 50 systems, " + fmt("%.3f", t) +
             " s (< 5 s)");
}

void double_integrator() {
  const auto t0 = Clock::now();
  const std::size_t K = 50, N = 100000;
  MatrixXd A(2, 2), B(2, 1);
  A << 1.0, 0.1, 0.0, 1.0;
  B << 0.005, 0.1;
  const BoxSetd x0((VectorXd(2) << 0.0, 0.0).finished(), (VectorXd(2) << 0.5, 0.2).finished());
  const BoxSetd omega(VectorXd::Zero(1), VectorXd::Ones(1));
  MatrixXd dirs(2, 8);
  for (int i = 0; i < 8; ++i) dirs.col(i) << std::cos(i * std::numbers::pi / 4), std::sin(i * std::numbers::pi / 4);
  const std::vector<LtvStep<double>> lifts(K, [&] {
    LtvStep<double> s;
    s.A = A;
    s.B = B;
    return s;
  }());
  const auto tube = reach_sequence<double>(init_contacts(x0, dirs), lifts, omega, K);
  sandwich.check(tube);
  const auto omega_at = [&](std::size_t) { return omega; };

  const auto mixed = containment_report(tube, mc_reach(ltv_oracle(lifts), x0, omega_at, N, K, SampleScheme::mixed, 1), {1e-9, 0.0});
  const auto vertex = containment_report(tube, mc_reach(ltv_oracle(lifts), x0, omega_at, N, K, SampleScheme::vertex, 2), {1e-9, 0.0});
  double vertex_gap = 0.0;
  for (const auto& s : vertex.steps) vertex_gap = std::max(vertex_gap, s.support_gap.maxCoeff());
  const double t = seconds_since(t0);
  const double min_gap = std::min(mixed.min_support_gap(), vertex.min_support_gap());
  const bool ok = mixed.total_violations() == 0 && vertex.total_violations() == 0 && min_gap >= -1e-9 &&
                  vertex_gap <= 1e-4 && t < 30.0;
  record(2, "Polytopic soundness on LTI truth", ok,
         "violations " + std::to_string(mixed.total_violations()) + " (mixed) / " + std::to_string(vertex.total_violations()) +
             " (vertex) at tol 1e-9, min support gap " + fmt("%.3g", min_gap) + " (>= -1e-9), max vertex-scheme gap " +
             fmt("%.3g", vertex_gap) + " (<= 1e-4), " + fmt("%.2f", t) + " s (< 30 s)");
}

void gradient_check() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    TrainConfig tc;
    tc.hidden = 4;
    tc.seed = 1000 + s;
    MlpParameters p = initialize(3, 2, tc);
    Rng rng(2000 + s);
    std::vector<MatrixXd> S{random_matrix(rng, 3, 6), random_matrix(rng, 3, 6)};
    std::vector<MatrixXd> U{random_matrix(rng, 2, 5), random_matrix(rng, 2, 5)};
    const MultistepData d = MultistepData::from_matrices(S, U, 0.1);
    const VectorXd ga = gradient(p, d).flatten();
    VectorXd theta = p.weights.flatten(), gf(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double t0 = theta(i);
      theta(i) = t0 + 1e-5;
      p.weights.unflatten(theta);
      const double lp = multistep_loss(p, d);
      theta(i) = t0 - 1e-5;
      p.weights.unflatten(theta);
      const double lm = multistep_loss(p, d);
      theta(i) = t0;
      p.weights.unflatten(theta);
      gf(i) = (lp - lm) / 2e-5;
    }
    worst = std::max(worst, (ga - gf).cwiseAbs().maxCoeff() / std::max(gf.cwiseAbs().maxCoeff(), 1e-12));
  }
  record(4, "Gradient correctness", worst <= 1e-5,
         "max relative error vs central differences " + fmt("%.3g", worst) + " (<= 1e-5) over 100 nets");
}

bool same_tube(const ReachTube<double>& a, const ReachTube<double>& b) {
  if (a.fronts.size() != b.fronts.size()) return false;
  for (std::size_t k = 0; k < a.fronts.size(); ++k)
    if (a.fronts[k].normals != b.fronts[k].normals || a.fronts[k].contacts != b.fronts[k].contacts ||
        a.fronts[k].offsets != b.fronts[k].offsets || a.fronts[k].controls != b.fronts[k].controls)
      return false;
  return true;
}

struct NominalRun {
  TrainSummary train;
  ReachSummary reach;
  ValidateSummary validate;
};

NominalRun nominal_pipeline(const RunConfig& c) {
  NominalRun r;
  cmd_generate(c);
  r.train = cmd_train(c);
  r.reach = cmd_reach(c);
  r.validate = cmd_validate(c);
  cmd_report(c);
  sandwich.check(read_tube(reach_dir(c)));
  return r;
}

void training(const NominalRun& r) {
  record(5, "NN training reproduction", r.train.final_loss <= 1e-2 && r.train.wall_seconds <= 600.0,
         "final loss " + fmt("%.4g", r.train.final_loss) + " (<= 1e-2) after " + std::to_string(r.train.epochs) +
             " epochs, wall time " + fmt("%.1f", r.train.wall_seconds) + " s (<= 600 s)");
}

void real_time(const RunConfig& c, const NominalRun& r) {
  const MlpParameters model = io::read_model(model_dir(c) / "model.json");
  const unsigned hw = std::max(2u, std::thread::hardware_concurrency());
  const ReachRun seq = run_reach(c, model, 1);
  const ReachRun par = run_reach(c, model, hw);
  sandwich.check(seq.tube);
  sandwich.check(par.tube);
  Eigen::Index widest = 0;
  for (const auto& t : seq.timing) widest = std::max(widest, t.window);
  const bool shape = seq.tube.fronts.size() == 51 && seq.tube.fronts[0].size() == 24 && c.dmdc.window == 8;
  const bool bitwise = same_tube(seq.tube, par.tube) && same_tube(seq.tube, read_tube(reach_dir(c)));
  record(6, "Real-time reach loop", shape && bitwise && r.reach.max_step_seconds < 0.5,
         "K=" + std::to_string(seq.tube.fronts.size() - 1) + ", " + std::to_string(seq.tube.fronts[0].size()) +
             " hyperplanes, w=" + std::to_string(c.dmdc.window) + " (widest used " + std::to_string(widest) +
             "), per-step max " + fmt("%.4f", r.reach.max_step_seconds) + " s (< 0.5 s), " + std::to_string(hw) +
             "-thread result " + (bitwise ? "bitwise equal to" : "DIFFERS from") + " sequential");
}

void containment(const NominalRun& r) {
  const bool archived = fs::exists(r.validate.report);
  record(7, "NN-pipeline containment", archived && r.validate.nn_max_violation_fraction <= 0.02,
         "max per-step violation fraction " + fmt("%.4f", r.validate.nn_max_violation_fraction) +
             " (<= 0.02, slack 2% of per-axis range, 10^4 rollouts); lift self-test violations " +
             std::to_string(r.validate.self_test_violations) + "; truth plant " +
             fmt("%.4f", r.validate.truth_max_violation_fraction) + "; report " +
             (archived ? r.validate.report.string() : std::string("MISSING")));
}

std::vector<std::string> split(const std::string& s, char d) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string cell;
  while (std::getline(in, cell, d)) out.push_back(cell);
  return out;
}

// failure - nominal for the default seed: plane, k, d_a_min, d_a_max, d_b_min, d_b_max, d_area
struct Pinned {
  const char* plane;
  int k;
  double d[5];
};
constexpr Pinned kPinned[] = {
    {"xy", 5, {0.18942596812637075, -0.13602059216582763, 0.094406651712597101, -0.15881707069373291, -0.22979327859580956}},
    {"yz", 5, {0.094406651712597101, -0.15881707069373291, 0.44996277343489122, 1.3043706721070243, 0.44863028063604493}},
    {"zx", 5, {0.44996277343489122, 1.3043706721070243, 0.18942596812637075, -0.13602059216582763, 0.094924543690612651}},
    {"xy", 50, {17.845572709729375, 32.314870675661027, -6.3343896500759929, 5.3103716991071703, 367.73198116277047}},
    {"yz", 50, {-6.3343896500759929, 5.3103716991071703, 62.286869733168459, 219.00094026859372, 1188.1721326078077}},
    {"zx", 50, {62.286869733168459, 219.00094026859372, 17.845572709729375, 32.314870675661027, 3293.7533865005862}},
};
constexpr double kPinnedRelTol = 0.05;

void rotor_failure(RunConfig c) {
  RunConfig nominal = c;
  c.scenario = Scenario::rotor_failure;
  cmd_generate(c);
  cmd_train(c);
  cmd_reach(c);
  sandwich.check(read_tube(reach_dir(c)));
  cmd_report(c);

  bool omega_differs = true;
  for (std::size_t k = 0; k < c.reach.horizon; ++k) {
    const BoxSetd f = c.omega_at(k), n = nominal.omega_at(k);
    omega_differs = omega_differs && f.center(1) == 0.0 && f.center(2) == 0.0 && n.center(1) > 0.0 && n.center(2) > 0.0 &&
                    f.half_width == n.half_width;
  }

  bool footprint_differs = false;
  for (const auto& plane : c.reach.planes) {
    const std::string file = "footprint_" + plane.name + ".csv";
    const HullExtent f = hull_extent(io::read_polygon_csv(reach_dir(c) / file));
    const HullExtent n = hull_extent(io::read_polygon_csv(reach_dir(nominal) / file));
    footprint_differs = footprint_differs || f.a_min != n.a_min || f.a_max != n.a_max || f.b_min != n.b_min ||
                        f.b_max != n.b_max || f.area != n.area;
  }

  const std::string diff = artifacts::slurp(report_dir(c) / "scenario_diff.csv");
  std::size_t matched = 0, checked = 0;
  std::string worst;
  for (const auto& line : split(diff, '\n')) {
    const auto cells = split(line, ',');
    if (cells.size() != 7 || cells[0] == "plane") continue;
    const int k = std::stoi(cells[1]);
    double d[5];
    for (int i = 0; i < 5; ++i) d[i] = std::stod(cells[2 + i]);
    for (const auto& p : kPinned) {
      if (cells[0] != p.plane || k != p.k) continue;
      ++checked;
      bool ok = true;
      for (int i = 0; i < 5; ++i) {
        const bool same_sign = (d[i] > 0) == (p.d[i] > 0) && (d[i] < 0) == (p.d[i] < 0);
        if (!same_sign || std::abs(d[i] - p.d[i]) > kPinnedRelTol * std::abs(p.d[i]) + 1e-9) {
          ok = false;
          worst = std::string(p.plane) + " k=" + std::to_string(k) + " column " + std::to_string(i) + ": " +
                  fmt("%.6g", d[i]) + " vs pinned " + fmt("%.6g", p.d[i]);
        }
      }
      if (ok) ++matched;
    }
  }
  const std::size_t expected = std::size(kPinned);
  record(8, "Rotor-failure differentiation", omega_differs && footprint_differs && matched == expected,
         std::string("omega box ") + (omega_differs ? "differs (rotors 2,3 centred at 0)" : "DOES NOT differ") +
             ", footprint hull extents " + (footprint_differs ? "differ" : "DO NOT differ") + ", pinned signed differences " +
             std::to_string(matched) + "/" + std::to_string(expected) + " within 5%" +
             (checked < expected ? " (missing rows)" : "") + (worst.empty() ? "" : "; mismatch " + worst));
}

void determinism(const RunConfig& a, const RunConfig& b) {
  const auto x = artifacts::deterministic_artifacts(a.output_dir);
  const auto y = artifacts::deterministic_artifacts(b.output_dir);
  std::size_t same = 0;
  std::string first_diff;
  for (const auto& [name, content] : x) {
    const auto it = y.find(name);
    if (it != y.end() && it->second == content) ++same;
    else if (first_diff.empty()) first_diff = name;
  }
  const bool ok = x.size() == y.size() && same == x.size() && !x.empty();
  record(9, "Determinism", ok,
         std::to_string(same) + "/" + std::to_string(x.size()) + " artifacts bitwise identical across two full runs" +
             " (wall-clock fields excluded)" + (first_diff.empty() ? "" : "; first difference " + first_diff));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_run");
  fs::remove_all(root);
  fs::create_directories(root);

  RunConfig a;
  a.output_dir = root / "run_a";
  RunConfig b = a;
  b.output_dir = root / "run_b";

  try {
    dmdc_recovery();
    double_integrator();
    gradient_check();

    const NominalRun ra = nominal_pipeline(a);
    training(ra);
    real_time(a, ra);
    containment(ra);

    nominal_pipeline(b);
    determinism(a, b);

    rotor_failure(a);

    record(3, "Inner-outer sandwich", sandwich.violations == 0 && sandwich.tubes > 0,
           std::to_string(sandwich.violations) + " violations at tol 1e-9 over " + std::to_string(sandwich.checks) +
               " contact checks in " + std::to_string(sandwich.tubes) + " tubes");
  } catch (const std::exception& e) {
    std::printf("[FAIL] aborted: %s\n", e.what());
    return 1;
  }

  std::sort(outcomes.begin(), outcomes.end(), [](const Outcome& x, const Outcome& y) { return x.id < y.id; });
  std::size_t passed = 0;
  std::printf("\nsummary\n");
  for (const auto& o : outcomes) {
    std::printf("  %-4s %d. %s\n", o.passed ? "PASS" : "FAIL", o.id, o.name.c_str());
    passed += o.passed;
  }
  std::printf("%zu/%zu criteria passed\n", passed, outcomes.size());
  return passed == outcomes.size() ? 0 : 1;
}
