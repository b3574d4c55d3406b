#pragma once

// 12-DOF quadrotor plant: rotor mixing, rigid-body equations of motion, RK4
// stepping, noisy rotor commands and trajectory-dataset generation.
//
// State layout (z axis points down, so gravity accelerates +z):
//   [x y z | vx vy vz | phi theta psi | p q r]
// where p, q, r are the Euler-angle rates (phi_dot, theta_dot, psi_dot).

#include "nnreach/errors.hpp"
#include "nnreach/rng.hpp"
#include "nnreach/sets.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace nnreach {

inline constexpr int kStateDim = 12;
inline constexpr int kRotorCount = 4;

template <typename Scalar>
using State12 = Eigen::Matrix<Scalar, kStateDim, 1>;
template <typename Scalar>
using RotorCommand = Eigen::Matrix<Scalar, kRotorCount, 1>;
/// Generalized force (u1 thrust, u2..u4 body moments).
template <typename Scalar>
using GeneralizedForce = Eigen::Matrix<Scalar, 4, 1>;

using State12d = State12<double>;
using RotorCommandd = RotorCommand<double>;

namespace idx {
inline constexpr int pos = 0;
inline constexpr int vel = 3;
inline constexpr int att = 6;
inline constexpr int rate = 9;
}  // namespace idx

/// Which trigonometric terms drive the horizontal accelerations.
enum class TranslationalForm {
  /// Terms exactly as in the reference model, including the cos(psi)sin(psi)
  /// term in the y channel.
  printed,
  /// ZYX Euler form: x uses sin(phi)sin(psi), y uses cos(psi)sin(phi).
  textbook,
};

struct QuadParams {
  double m = 1.0;
  double g = 9.81;
  double Ixx = 0.5;
  double Iyy = 0.5;
  double Izz = 1.0;
  double kf = 1.0;
  double km = 0.1;
  double l = 0.2;
  TranslationalForm form = TranslationalForm::printed;

  /// Throws ConfigError when a physical constant is not strictly positive.
  void validate() const;

  /// Rotor speed at which four equal rotors balance gravity.
  double hover_speed() const { return std::sqrt(m * g / (4.0 * kf)); }
};

enum class Scenario { nominal, rotor_failure };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

/// Rotor mixing: generalized forces from the squared rotor speeds.
template <typename Scalar>
GeneralizedForce<Scalar> mix_rotor_speeds(const RotorCommand<Scalar>& omega, const QuadParams& p) {
  const Scalar kf(p.kf), km(p.km), lkf(p.l * p.kf);
  Eigen::Matrix<Scalar, 4, 4> mix;
  // clang-format off
  mix <<  kf,   kf,   kf,   kf,
         -lkf,  lkf,  lkf, -lkf,
          lkf,  lkf, -lkf, -lkf,
          km,  -km,   km,  -km;
  // clang-format on
  return mix * omega.cwiseProduct(omega);
}

/// Time derivative of the 12-DOF state under generalized force `u`.
template <typename Scalar>
State12<Scalar> state_derivative(const State12<Scalar>& xi, const GeneralizedForce<Scalar>& u,
                                 const QuadParams& p) {
  using std::cos;
  using std::sin;
  const Scalar phi = xi(idx::att), theta = xi(idx::att + 1), psi = xi(idx::att + 2);
  const Scalar dphi = xi(idx::rate), dtheta = xi(idx::rate + 1), dpsi = xi(idx::rate + 2);
  const Scalar thrust = u(0) / Scalar(p.m);

  State12<Scalar> d;
  d.template segment<3>(idx::pos) = xi.template segment<3>(idx::vel);
  d.template segment<3>(idx::att) = xi.template segment<3>(idx::rate);

  if (p.form == TranslationalForm::printed) {
    d(idx::vel) = -thrust * (sin(phi) * cos(psi) + cos(phi) * cos(psi) * sin(theta));
    d(idx::vel + 1) = -thrust * (cos(phi) * sin(psi) * sin(theta) - cos(psi) * sin(psi));
  } else {
    d(idx::vel) = -thrust * (sin(phi) * sin(psi) + cos(phi) * cos(psi) * sin(theta));
    d(idx::vel + 1) = -thrust * (cos(phi) * sin(psi) * sin(theta) - cos(psi) * sin(phi));
  }
  d(idx::vel + 2) = Scalar(p.g) - thrust * cos(phi) * cos(theta);

  const Scalar Ixx(p.Ixx), Iyy(p.Iyy), Izz(p.Izz);
  d(idx::rate) = (u(1) - (Izz - Iyy) * dtheta * dpsi) / Ixx;
  d(idx::rate + 1) = (u(2) - (Ixx - Izz) * dphi * dpsi) / Iyy;
  d(idx::rate + 2) = (u(3) - (Iyy - Ixx) * dtheta * dphi) / Izz;
  return d;
}

/// One classical RK4 step with the rotor command held over [t, t + dt].
/// Throws NumericError if the result is not finite.
template <typename Scalar>
State12<Scalar> integrate_step(const State12<Scalar>& xi, const RotorCommand<Scalar>& omega, Scalar dt,
                               const QuadParams& p) {
  if (!(dt > Scalar(0))) throw NumericError("integrate_step: dt must be positive");
  const GeneralizedForce<Scalar> u = mix_rotor_speeds(omega, p);
  const Scalar half = dt / Scalar(2);
  const State12<Scalar> k1 = state_derivative<Scalar>(xi, u, p);
  const State12<Scalar> k2 = state_derivative<Scalar>(xi + half * k1, u, p);
  const State12<Scalar> k3 = state_derivative<Scalar>(xi + half * k2, u, p);
  const State12<Scalar> k4 = state_derivative<Scalar>(xi + dt * k3, u, p);
  State12<Scalar> next = xi + (dt / Scalar(6)) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
  if (!next.allFinite()) throw NumericError("integrate_step: non-finite state");
  return next;
}

/// Nominal sinusoidal rotor commands plus bounded actuator noise.
struct ControlProfile {
  Eigen::Vector4d amplitude = Eigen::Vector4d::Constant(0.5);
  Eigen::Vector4d frequency_hz = Eigen::Vector4d::Constant(0.2);
  double noise_half_width = 0.25;
  /// Overrides the hover speed derived from QuadParams when set (> 0).
  double hover_override = 0.0;

  double hover(const QuadParams& p) const { return hover_override > 0.0 ? hover_override : p.hover_speed(); }

  /// Noise-free command v(t). Failed rotors (2 and 3) command zero.
  Eigen::Vector4d nominal(double t, const QuadParams& p, Scenario scenario) const;

  /// Admissible rotor-command box at time t: nominal center, noise half-width.
  BoxSetd omega_box(double t, const QuadParams& p, Scenario scenario) const;
};

/// v(t) + w with w ~ U[-h, h] drawn independently per rotor.
RotorCommandd sample_control(const ControlProfile& profile, const QuadParams& p, double t, Scenario scenario,
                             Rng& rng);

struct Trajectory {
  std::vector<State12d> states;        // N + 1 samples
  std::vector<RotorCommandd> inputs;   // N samples, inputs[k] acts on [t_k, t_{k+1})
};

struct TrajectoryDataset {
  double dt = 0.1;
  std::uint64_t seed = 0;
  Scenario scenario = Scenario::nominal;
  QuadParams params;
  ControlProfile profile;
  BoxSetd x0;
  std::vector<Trajectory> trajectories;

  std::size_t steps() const { return trajectories.empty() ? 0 : trajectories.front().inputs.size(); }
};

/// Initial-state box: position +-0.5 m, attitude +-0.1 rad, velocities and
/// rates +-1e-3.
BoxSetd default_initial_box();

struct DatasetSpec {
  std::size_t n_traj = 100;
  std::size_t n_steps = 50;
  double dt = 0.1;
  Scenario scenario = Scenario::nominal;
  std::uint64_t seed = 1;
};

/// nT trajectories from uniform X0 draws under sampled controls. Trajectory k
/// uses RNG substream k, so the result is a pure function of the arguments.
TrajectoryDataset generate_dataset(const DatasetSpec& spec, const QuadParams& p, const ControlProfile& profile,
                                   const BoxSetd& x0);

}  // namespace nnreach
