#include "nnreach/pipeline.hpp"

#include "nnreach/io.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>
#include <thread>

namespace nnreach {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string suffix(const RunConfig& c) { return to_string(c.scenario); }

fs::path step_file(const fs::path& dir, const std::string& stem, std::size_t k, const std::string& ext) {
  return dir / (stem + "_" + std::to_string(k) + ext);
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw IoError(what + " not found: " + p.string());
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Controls for window column j at step k: uniform in the box active at t_{k+j}.
ColumnSampler<double> excitation_sampler(const RunConfig& c, std::size_t k) {
  const std::uint64_t stream = splitmix64(c.seeds.excitation) ^ splitmix64(0xE7C1ull + k);
  return [&c, k, stream](std::size_t j) -> Eigen::VectorXd {
    Rng rng = Rng::substream(stream, j);
    const BoxSetd box = c.omega_at(k + j);
    Eigen::VectorXd u(box.dim());
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = rng.uniform(box.lower()(i), box.upper()(i));
    return u;
  };
}

}  // namespace

fs::path dataset_dir(const RunConfig& c) { return c.output_dir / ("dataset_" + suffix(c)); }
fs::path model_dir(const RunConfig& c) { return c.output_dir / ("model_" + suffix(c)); }
fs::path reach_dir(const RunConfig& c) { return c.output_dir / ("reach_" + suffix(c)); }
fs::path validate_dir(const RunConfig& c) { return c.output_dir / ("validate_" + suffix(c)); }
fs::path report_dir(const RunConfig& c) { return c.output_dir / "report"; }

GenerateResult cmd_generate(const RunConfig& c) {
  c.validate_all();
  const TrajectoryDataset ds = generate_dataset(c.dataset_spec(), c.quad, c.control, c.x0);
  GenerateResult r{dataset_dir(c), ds.trajectories.size()};
  if (fs::exists(r.dir)) fs::remove_all(r.dir);
  io::write_dataset(r.dir, ds);
  return r;
}

TrainSummary cmd_train(const RunConfig& c) {
  c.validate_all();
  require_file(dataset_dir(c) / "manifest.json", "dataset");
  const TrajectoryDataset ds = io::read_dataset(dataset_dir(c));
  const MultistepData data = MultistepData::from_dataset(ds);

  const auto t0 = Clock::now();
  const TrainResult tr = train(data, c.train_config());
  TrainSummary s{model_dir(c), tr.params.final_loss, seconds_since(t0), c.train.epochs};

  fs::create_directories(s.dir);
  io::write_model(s.dir / "model.json", tr.params, ds.dt);
  io::write_loss_csv(s.dir / "loss.csv", tr.loss_history);
  io::write_json(s.dir / "train.json", {{"final_loss", s.final_loss}, {"epochs", s.epochs}, {"wall_time_s", s.wall_seconds}});
  return s;
}

ReachRun run_reach(const RunConfig& c, const MlpParameters& model, unsigned threads) {
  const StepOracle<double> oracle = [&model, dt = c.dt](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return Eigen::VectorXd(nn_step_batch(model, x, u, dt).col(0));
  };
  FitOptions fit_options;
  fit_options.svd_tol = c.dmdc.svd_tol;
  fit_options.prior = c.dmdc.prior;
  PropagateOptions prop;
  prop.max_condition = c.reach.max_condition;
  prop.threads = threads;

  ReachRun run;
  run.tube.fronts.push_back(init_contacts(c.x0));
  for (std::size_t k = 0; k < c.reach.horizon; ++k) {
    const auto t0 = Clock::now();
    const ContactFront<double>& front = run.tube.fronts.back();
    const Eigen::VectorXd anchor = front.centroid();
    const ColumnSampler<double> sampler = excitation_sampler(c, k);
    const BoxSetd omega = c.omega_at(k);

    ReachStepTiming timing;
    timing.k = k;
    for (Eigen::Index w = c.dmdc.window;; w = std::min(2 * w, c.dmdc.max_window)) {
      const auto tf = Clock::now();
      LtvStep<double> lift;
      try {
        lift = fit(build_window(oracle, anchor, sampler, w, c.dt, k), fit_options);
      } catch (const DegenerateWindowError& e) {
        throw DegenerateWindowError(std::string("reach: ") + e.what(), k);
      } catch (const NumericError& e) {
        throw NumericError(std::string("reach: ") + e.what(), k);
      }
      const auto tp = Clock::now();
      timing.fit_seconds += std::chrono::duration<double>(tp - tf).count();
      try {
        ContactFront<double> next = propagate_front(front, lift, omega, prop);
        timing.propagate_seconds += seconds_since(tp);
        timing.window = w;
        run.lifts.push_back(std::move(lift));
        run.tube.fronts.push_back(std::move(next));
        break;
      } catch (const IllConditionedLiftError& e) {
        timing.propagate_seconds += seconds_since(tp);
        if (w >= c.dmdc.max_window) throw IllConditionedLiftError(std::string("reach: ") + e.what(), k, e.condition());
      }
    }
    timing.total_seconds = seconds_since(t0);
    run.timing.push_back(timing);
  }
  return run;
}

ReachSummary cmd_reach(const RunConfig& c) {
  c.validate_all();
  const fs::path mpath = model_dir(c) / "model.json";
  require_file(mpath, "model checkpoint");
  double model_dt = 0.0;
  const MlpParameters model = io::read_model(mpath, &model_dt);
  if (model.n_state != kStateDim || model.n_control != kRotorCount)
    throw ConfigError("reach: checkpoint is not a 12-state, 4-rotor model");
  if (model_dt != c.dt) throw ConfigError("reach: checkpoint dt differs from configured dt");

  const ReachRun run = run_reach(c, model, resolve_threads(c.reach.threads));

  ReachSummary s;
  s.dir = reach_dir(c);
  if (fs::exists(s.dir)) fs::remove_all(s.dir);
  fs::create_directories(s.dir);
  s.steps = run.lifts.size();

  std::string timing = "k,window,fit_s,propagate_s,total_s\n";
  for (const auto& t : run.timing) {
    timing += std::to_string(t.k) + "," + std::to_string(t.window) + "," + io::format_double(t.fit_seconds) + "," +
              io::format_double(t.propagate_seconds) + "," + io::format_double(t.total_seconds) + "\n";
    s.max_step_seconds = std::max(s.max_step_seconds, t.total_seconds);
    s.total_seconds += t.total_seconds;
  }
  s.mean_step_seconds = run.timing.empty() ? 0.0 : s.total_seconds / static_cast<double>(run.timing.size());
  io::write_text(s.dir / "timing.csv", timing);

  std::string omega = "k,t,c1,c2,c3,c4,h1,h2,h3,h4\n";
  for (std::size_t k = 0; k < s.steps; ++k) {
    const BoxSetd box = c.omega_at(k);
    omega += std::to_string(k) + "," + io::format_double(static_cast<double>(k) * c.dt);
    for (Eigen::Index j = 0; j < box.dim(); ++j) omega += "," + io::format_double(box.center(j));
    for (Eigen::Index j = 0; j < box.dim(); ++j) omega += "," + io::format_double(box.half_width(j));
    omega += "\n";
  }
  io::write_text(s.dir / "omega.csv", omega);

  for (std::size_t k = 0; k < run.tube.fronts.size(); ++k) {
    const double wall = k == 0 ? 0.0 : run.timing[k - 1].total_seconds;
    io::write_reach(step_file(s.dir, "reach", k, ".json"), run.tube.fronts[k], wall);
  }
  for (const auto& lift : run.lifts) io::write_ltv(step_file(s.dir, "ltv", lift.k, ".json"), lift, c.dt);
  for (const auto& plane : c.reach.planes) {
    const TubeProjection<double> proj = tube_projection(run.tube, plane);
    for (std::size_t k = 0; k < proj.steps.size(); ++k)
      io::write_polygon_csv(step_file(s.dir, "hull_" + plane.name, k, ".csv"), proj.steps[k]);
    io::write_polygon_csv(s.dir / ("footprint_" + plane.name + ".csv"), proj.footprint);
  }
  return s;
}

ReachTube<double> read_tube(const fs::path& dir) {
  ReachTube<double> tube;
  for (std::size_t k = 0;; ++k) {
    const fs::path p = step_file(dir, "reach", k, ".json");
    if (!fs::exists(p)) break;
    tube.fronts.push_back(io::read_reach(p));
    if (tube.fronts.back().k != k) throw IoError(p.string() + ": step index mismatch");
  }
  if (tube.fronts.empty()) throw IoError("no reach artifacts in " + dir.string());
  return tube;
}

std::vector<LtvStep<double>> read_lifts(const fs::path& dir) {
  std::vector<LtvStep<double>> lifts;
  for (std::size_t k = 0;; ++k) {
    const fs::path p = step_file(dir, "ltv", k, ".json");
    if (!fs::exists(p)) break;
    lifts.push_back(io::read_ltv(p));
  }
  return lifts;
}

ValidateSummary cmd_validate(const RunConfig& c) {
  c.validate_all();
  const fs::path rdir = reach_dir(c);
  const ReachTube<double> tube = read_tube(rdir);
  const std::vector<LtvStep<double>> lifts = read_lifts(rdir);
  const std::size_t K = tube.fronts.size() - 1;
  if (K == 0 || lifts.size() < K) throw IoError("reach artifacts in " + rdir.string() + " are incomplete");
  const fs::path mpath = model_dir(c) / "model.json";
  require_file(mpath, "model checkpoint");
  const MlpParameters model = io::read_model(mpath);

  const auto omega = [&c](std::size_t k) { return c.omega_at(k); };
  const std::size_t N = c.validate.samples;
  const SampleScheme scheme = c.validate.scheme;

  const ContainmentTolerance exact{1e-9, 0.0};
  const ContainmentTolerance slack{1e-9, c.validate.slack_fraction};

  const ContainmentReport self = containment_report(tube, mc_reach(ltv_oracle(lifts), c.x0, omega, N, K, scheme, c.seeds.mc), exact);
  const ContainmentReport nn = containment_report(tube, mc_reach(nn_oracle(model, c.dt), c.x0, omega, N, K, scheme, c.seeds.mc), slack);

  ValidateSummary s;
  s.self_test_violations = self.total_violations();
  s.nn_max_violation_fraction = nn.max_violation_fraction();
  s.passed = s.self_test_violations == 0 && s.nn_max_violation_fraction <= c.validate.max_violation_fraction;

  json report = {{"scenario", to_string(c.scenario)},
                 {"steps", K},
                 {"samples", N},
                 {"scheme", to_string(scheme)},
                 {"seed", c.seeds.mc},
                 {"slack_fraction", c.validate.slack_fraction},
                 {"max_violation_fraction", c.validate.max_violation_fraction},
                 {"lift_self_test", io::to_json(self)},
                 {"model", io::to_json(nn)},
                 {"truth", nullptr},
                 {"passed", s.passed}};
  if (c.validate.truth) {
    const ContainmentReport truth =
        containment_report(tube, mc_reach(quad_oracle(c.quad, c.dt), c.x0, omega, N, K, scheme, c.seeds.mc), slack);
    s.truth_max_violation_fraction = truth.max_violation_fraction();
    report["truth"] = io::to_json(truth);
  }
  s.report = validate_dir(c) / "mc_report.json";
  io::write_json(s.report, report);
  return s;
}

HullExtent hull_extent(const Polygon<double>& poly) {
  HullExtent e;
  if (poly.empty()) return e;
  e.a_min = e.a_max = poly.front().x();
  e.b_min = e.b_max = poly.front().y();
  for (const auto& p : poly) {
    e.a_min = std::min(e.a_min, p.x());
    e.a_max = std::max(e.a_max, p.x());
    e.b_min = std::min(e.b_min, p.y());
    e.b_max = std::max(e.b_max, p.y());
  }
  e.area = polygon_area(poly);
  return e;
}

namespace {

struct ScenarioArtifacts {
  std::string name;
  std::vector<std::vector<HullExtent>> hulls;  // [plane][k]
  std::vector<HullExtent> footprints;          // [plane]
  std::vector<double> step_seconds;
  std::vector<Eigen::Index> windows;
  std::optional<json> train;
  std::optional<json> mc;
};

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
  std::istringstream in(io::read_text(path));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::optional<ScenarioArtifacts> load_scenario(const RunConfig& c) {
  const fs::path rdir = reach_dir(c);
  if (!fs::exists(rdir / "reach_0.json")) return std::nullopt;
  ScenarioArtifacts a;
  a.name = to_string(c.scenario);
  for (const auto& plane : c.reach.planes) {
    std::vector<HullExtent> per_step;
    for (std::size_t k = 0;; ++k) {
      const fs::path p = step_file(rdir, "hull_" + plane.name, k, ".csv");
      if (!fs::exists(p)) break;
      per_step.push_back(hull_extent(io::read_polygon_csv(p)));
    }
    if (per_step.empty()) throw IoError("no hull_" + plane.name + " files in " + rdir.string());
    a.hulls.push_back(std::move(per_step));
    a.footprints.push_back(hull_extent(io::read_polygon_csv(rdir / ("footprint_" + plane.name + ".csv"))));
  }
  for (const auto& row : read_csv_rows(rdir / "timing.csv")) {
    if (row.size() != 5) throw IoError("timing.csv: expected 5 columns");
    a.windows.push_back(std::stoll(row[1]));
    a.step_seconds.push_back(std::stod(row[4]));
  }
  if (fs::exists(model_dir(c) / "train.json")) a.train = io::read_json(model_dir(c) / "train.json");
  if (fs::exists(validate_dir(c) / "mc_report.json")) a.mc = io::read_json(validate_dir(c) / "mc_report.json");
  return a;
}

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string extent_row(const HullExtent& e) {
  return io::format_double(e.a_min) + "," + io::format_double(e.a_max) + "," + io::format_double(e.b_min) + "," +
         io::format_double(e.b_max) + "," + io::format_double(e.area);
}

}  // namespace

ReportSummary cmd_report(const RunConfig& c) {
  c.validate_all();
  std::vector<ScenarioArtifacts> found;
  for (Scenario s : {Scenario::nominal, Scenario::rotor_failure}) {
    RunConfig cs = c;
    cs.scenario = s;
    if (auto a = load_scenario(cs)) found.push_back(std::move(*a));
  }
  if (found.empty()) throw IoError("no reach artifacts under " + c.output_dir.string());

  ReportSummary out;
  out.dir = report_dir(c);
  fs::create_directories(out.dir);

  std::string extents = "scenario,plane,k,a_min,a_max,b_min,b_max,area\n";
  std::ostringstream txt;
  txt << "run directory: " << c.output_dir.string() << "\n";
  for (const auto& a : found) {
    out.scenarios.push_back(a.name);
    txt << "\n[" << a.name << "]\n";
    if (a.train)
      txt << "  training: final loss " << fmt((*a.train)["final_loss"].get<double>()) << " after "
          << (*a.train)["epochs"].get<int>() << " epochs, " << fmt((*a.train)["wall_time_s"].get<double>(), "%.1f")
          << " s\n";
    const double max_step = *std::max_element(a.step_seconds.begin(), a.step_seconds.end());
    double total = 0.0;
    for (double t : a.step_seconds) total += t;
    const Eigen::Index wmax = *std::max_element(a.windows.begin(), a.windows.end());
    txt << "  reach: " << a.step_seconds.size() << " steps, per-step wall time mean "
        << fmt(total / static_cast<double>(a.step_seconds.size())) << " s, max " << fmt(max_step) << " s, widest window "
        << wmax << "\n";
    if (a.mc) {
      const json& m = *a.mc;
      txt << "  validation (" << m["samples"].get<std::size_t>() << " samples, " << m["scheme"].get<std::string>()
          << "): lift self-test violations " << m["lift_self_test"]["total_violations"].get<std::size_t>()
          << ", model max violation fraction " << fmt(m["model"]["max_violation_fraction"].get<double>());
      if (!m["truth"].is_null()) txt << ", truth max violation fraction " << fmt(m["truth"]["max_violation_fraction"].get<double>());
      txt << (m["passed"].get<bool>() ? " -> PASS" : " -> FAIL") << "\n";
    }
    for (std::size_t p = 0; p < c.reach.planes.size(); ++p) {
      const std::string& plane = c.reach.planes[p].name;
      for (std::size_t k = 0; k < a.hulls[p].size(); ++k)
        extents += a.name + "," + plane + "," + std::to_string(k) + "," + extent_row(a.hulls[p][k]) + "\n";
      const HullExtent& f = a.footprints[p];
      txt << "  footprint " << plane << ": [" << fmt(f.a_min) << ", " << fmt(f.a_max) << "] x [" << fmt(f.b_min) << ", "
          << fmt(f.b_max) << "], area " << fmt(f.area) << "\n";
    }
  }
  io::write_text(out.dir / "hull_extents.csv", extents);

  if (found.size() == 2) {
    std::string diff = "plane,k,d_a_min,d_a_max,d_b_min,d_b_max,d_area\n";
    txt << "\n[rotor_failure - nominal]\n";
    for (std::size_t p = 0; p < c.reach.planes.size(); ++p) {
      const auto& n = found[0].hulls[p];
      const auto& f = found[1].hulls[p];
      for (std::size_t k = 0; k < std::min(n.size(), f.size()); ++k) {
        diff += c.reach.planes[p].name + "," + std::to_string(k) + "," + io::format_double(f[k].a_min - n[k].a_min) + "," +
                io::format_double(f[k].a_max - n[k].a_max) + "," + io::format_double(f[k].b_min - n[k].b_min) + "," +
                io::format_double(f[k].b_max - n[k].b_max) + "," + io::format_double(f[k].area - n[k].area) + "\n";
      }
      const HullExtent& fn = found[0].footprints[p];
      const HullExtent& ff = found[1].footprints[p];
      txt << "  footprint " << c.reach.planes[p].name << " area: " << fmt(fn.area) << " -> " << fmt(ff.area) << "\n";
    }
    io::write_text(out.dir / "scenario_diff.csv", diff);
  }
  io::write_text(out.dir / "summary.txt", txt.str());
  return out;
}

}  // namespace nnreach
