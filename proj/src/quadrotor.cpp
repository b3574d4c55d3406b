#include "nnreach/quadrotor.hpp"

#include <numbers>

namespace nnreach {

void QuadParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("quad parameter '") + name + "' must be > 0");
  };
  positive(m, "m");
  positive(Ixx, "Ixx");
  positive(Iyy, "Iyy");
  positive(Izz, "Izz");
  positive(kf, "kf");
  positive(km, "km");
  positive(l, "l");
  if (!std::isfinite(g)) throw ConfigError("quad parameter 'g' must be finite");
}

std::string to_string(Scenario s) { return s == Scenario::nominal ? "nominal" : "rotor_failure"; }

Scenario scenario_from_string(const std::string& s) {
  if (s == "nominal") return Scenario::nominal;
  if (s == "rotor_failure") return Scenario::rotor_failure;
  throw ConfigError("unknown scenario '" + s + "' (expected nominal | rotor_failure)");
}

Eigen::Vector4d ControlProfile::nominal(double t, const QuadParams& p, Scenario scenario) const {
  Eigen::Vector4d v;
  const double h = hover(p);
  for (int i = 0; i < 4; ++i) v(i) = h + amplitude(i) * std::sin(2.0 * std::numbers::pi * frequency_hz(i) * t);
  if (scenario == Scenario::rotor_failure) {
    v(1) = 0.0;
    v(2) = 0.0;
  }
  return v;
}

BoxSetd ControlProfile::omega_box(double t, const QuadParams& p, Scenario scenario) const {
  return BoxSetd(nominal(t, p, scenario), Eigen::VectorXd::Constant(4, noise_half_width));
}

RotorCommandd sample_control(const ControlProfile& profile, const QuadParams& p, double t, Scenario scenario,
                             Rng& rng) {
  RotorCommandd omega = profile.nominal(t, p, scenario);
  const double h = profile.noise_half_width;
  for (int i = 0; i < 4; ++i) omega(i) += rng.uniform(-h, h);
  return omega;
}

BoxSetd default_initial_box() {
  Eigen::VectorXd half(kStateDim);
  half.segment<3>(idx::pos).setConstant(0.5);
  half.segment<3>(idx::vel).setConstant(1e-3);
  half.segment<3>(idx::att).setConstant(0.1);
  half.segment<3>(idx::rate).setConstant(1e-3);
  return BoxSetd(Eigen::VectorXd::Zero(kStateDim), half);
}

TrajectoryDataset generate_dataset(const DatasetSpec& spec, const QuadParams& p, const ControlProfile& profile,
                                   const BoxSetd& x0) {
  if (spec.n_traj < 1) throw ConfigError("dataset needs at least one trajectory");
  if (spec.n_steps < 2) throw ConfigError("dataset needs at least two steps");
  if (!(spec.dt > 0.0)) throw ConfigError("dataset dt must be positive");
  if (x0.dim() != kStateDim || !x0.valid()) throw ConfigError("initial box must be a valid 12-dimensional box");
  p.validate();

  TrajectoryDataset ds;
  ds.dt = spec.dt;
  ds.seed = spec.seed;
  ds.scenario = spec.scenario;
  ds.params = p;
  ds.profile = profile;
  ds.x0 = x0;
  ds.trajectories.resize(spec.n_traj);

  for (std::size_t k = 0; k < spec.n_traj; ++k) {
    Rng rng = Rng::substream(spec.seed, k);
    Trajectory& tr = ds.trajectories[k];
    tr.states.reserve(spec.n_steps + 1);
    tr.inputs.reserve(spec.n_steps);

    State12d xi;
    for (int j = 0; j < kStateDim; ++j) xi(j) = rng.uniform(x0.lower()(j), x0.upper()(j));
    tr.states.push_back(xi);
    for (std::size_t n = 0; n < spec.n_steps; ++n) {
      const double t = static_cast<double>(n) * spec.dt;
      const RotorCommandd omega = sample_control(profile, p, t, spec.scenario, rng);
      try {
        xi = integrate_step<double>(xi, omega, spec.dt, p);
      } catch (const NumericError&) {
        throw NumericError("dataset generation blew up in trajectory " + std::to_string(k), n);
      }
      tr.inputs.push_back(omega);
      tr.states.push_back(xi);
    }
  }
  return ds;
}

}  // namespace nnreach
