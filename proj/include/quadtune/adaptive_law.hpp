#pragma once

// Retrospective cost adaptive control (RCAC) for single-input P / PID / PID+FF
// laws. One AdaptiveGainState drives one scalar control channel; the autopilot
// owns twelve of them (three per controller block).

#include <quadtune/types.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace quadtune
{
enum class ControllerKind { P, PID, PID_FF };

/// Gain layout of a SISO law. Regressor entries are
/// [g(z_latest), gamma, g(z_latest) - g(z_previous), r] truncated to gain_count().
struct ControllerStructure
{
  ControllerKind kind = ControllerKind::P;

  constexpr int gain_count() const
  {
    switch (kind) {
      case ControllerKind::P:
        return 1;
      case ControllerKind::PID:
        return 3;
      case ControllerKind::PID_FF:
        return 4;
    }
    return 0;
  }
};

enum class Normalization { identity, scaled_erf };

struct RcacHyperparameters
{
  double p0 = 1.0;     // covariance initialized as p0 * I
  double ru = 0.0;     // control weight
  double rz = 1.0;     // performance weight
  double sigma = 1.0;  // sign of the leading control-to-error coefficient
  Normalization normalization = Normalization::identity;

  /// Throws std::invalid_argument when any field is outside its admissible range.
  void validate() const;
};

std::string_view to_string(ControllerKind kind);
std::string_view to_string(Normalization normalization);
ControllerKind controller_kind_from_string(std::string_view name);
Normalization normalization_from_string(std::string_view name);

/// Error normalization g(z): identity, or erf(sqrt(pi)/2 z) which has unit slope at 0
/// and saturates to (-1, 1).
template <typename Scalar>
Scalar normalize_error(Scalar z, Normalization normalization)
{
  if (!std::isfinite(z)) {
    throw std::domain_error("normalize_error: non-finite error input");
  }
  switch (normalization) {
    case Normalization::identity:
      return z;
    case Normalization::scaled_erf:
      return std::erf(Scalar(0.5) * std::sqrt(std::numbers::pi_v<Scalar>) * z);
  }
  return z;
}

template <typename Scalar>
struct AdaptiveGainState
{
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, Eigen::ColMajor, 4, 1>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic, Eigen::RowMajor, 1, 4>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 4, 4>;

  ControllerStructure structure;
  Vector theta;           // current gains
  Vector theta0;          // gains at step 0
  Matrix covariance;      // P_k
  Scalar gamma = 0;       // running sum of normalized errors
  RowVector regressor;    // phi_k, used to produce the latest control
  RowVector prev_regressor;
  Scalar control = 0;     // control paired with `regressor`
  Scalar prev_control = 0;
  Scalar g_latest = 0;    // g(z) of the newest error sample
  Scalar g_previous = 0;
  std::uint64_t step = 0;

  static AdaptiveGainState initial(ControllerStructure structure, Scalar p0,
                                   std::optional<Vector> theta_init = std::nullopt)
  {
    const int n = structure.gain_count();
    AdaptiveGainState s;
    s.structure = structure;
    s.theta = theta_init.value_or(Vector::Zero(n));
    if (s.theta.size() != n) {
      throw std::invalid_argument("AdaptiveGainState: initial gain vector has wrong length");
    }
    s.theta0 = s.theta;
    s.covariance = Matrix::Identity(n, n) * p0;
    s.regressor = RowVector::Zero(n);
    s.prev_regressor = RowVector::Zero(n);
    return s;
  }
};

/// Shifts the normalized error history and advances the integrator
/// (gamma += g unless `hold_integrator`).
template <typename Scalar>
void push_error(AdaptiveGainState<Scalar>& state, Scalar g, bool hold_integrator = false)
{
  state.g_previous = state.g_latest;
  state.g_latest = g;
  if (!hold_integrator) {
    state.gamma += g;
  }
}

template <typename Scalar>
typename AdaptiveGainState<Scalar>::RowVector build_regressor(const AdaptiveGainState<Scalar>& state,
                                                              Scalar feedforward,
                                                              ControllerStructure structure)
{
  if (!std::isfinite(feedforward) || !std::isfinite(state.g_latest) ||
      !std::isfinite(state.g_previous) || !std::isfinite(state.gamma)) {
    throw std::domain_error("build_regressor: non-finite input");
  }
  Eigen::Matrix<Scalar, 1, 4> full;
  full << state.g_latest, state.gamma, state.g_latest - state.g_previous, feedforward;
  return full.leftCols(structure.gain_count());
}

template <typename Scalar>
Scalar compute_control(const typename AdaptiveGainState<Scalar>::Vector& theta,
                       const typename AdaptiveGainState<Scalar>::RowVector& regressor)
{
  if (theta.size() != regressor.size()) {
    throw std::invalid_argument("compute_control: regressor/gain dimension mismatch");
  }
  return regressor.dot(theta.transpose());
}

template <typename Scalar>
Scalar compute_control(const AdaptiveGainState<Scalar>& state,
                       const typename AdaptiveGainState<Scalar>::RowVector& regressor)
{
  return compute_control<Scalar>(state.theta, regressor);
}

/// One RCAC step. Consumes prev_regressor / prev_control (the pair that produced the
/// control acting on `z`) and the current regressor, and returns the state with the
/// minimizer of the retrospective cost as its new gains.
///
/// With ru == 0 the control-penalty row is dropped and the update is rank one.
template <typename Scalar>
AdaptiveGainState<Scalar> rcac_update(AdaptiveGainState<Scalar> state, Scalar z,
                                      const RcacHyperparameters& hyper)
{
  using Matrix = typename AdaptiveGainState<Scalar>::Matrix;
  using Vector = typename AdaptiveGainState<Scalar>::Vector;

  const int n = state.structure.gain_count();
  if (state.regressor.size() != n || state.prev_regressor.size() != n || state.theta.size() != n) {
    throw std::invalid_argument("rcac_update: state dimensions inconsistent with structure");
  }

  const Scalar sigma = Scalar(hyper.sigma);
  const Scalar rz = Scalar(hyper.rz);
  const Scalar ru = Scalar(hyper.ru);
  const Scalar g = normalize_error(z, hyper.normalization);
  const int rows = hyper.ru > 0.0 ? 2 : 1;

  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor, 2, 4> phi(rows, n);
  phi.row(0) = sigma * state.prev_regressor;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 2, 2> innovation(rows, rows);
  innovation.setZero();
  innovation(0, 0) = Scalar(1) / rz;
  if (rows == 2) {
    phi.row(1) = state.regressor;
    innovation(1, 1) = Scalar(1) / ru;
  }

  const Matrix& p = state.covariance;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 4, 2> p_phit =
    p * phi.transpose();
  innovation.noalias() += phi * p_phit;

  const Eigen::LDLT<decltype(innovation)> ldlt(innovation);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !innovation.allFinite() ||
      ldlt.rcond() < Scalar(1e-14)) {
    throw NumericalAbort("rcac_update: singular innovation matrix");
  }

  Matrix p_next = p - p_phit * ldlt.solve(p_phit.transpose());
  p_next = (Scalar(0.5) * (p_next + p_next.transpose())).eval();

  const Scalar residual =
    g + sigma * (state.prev_regressor.dot(state.theta.transpose()) - state.prev_control);
  Vector theta_next = state.theta - sigma * rz * residual * (p_next * state.prev_regressor.transpose());
  if (rows == 2) {
    const Scalar u_now = state.regressor.dot(state.theta.transpose());
    theta_next -= ru * u_now * (p_next * state.regressor.transpose());
  }

  if (!theta_next.allFinite() || !p_next.allFinite()) {
    throw NumericalAbort("rcac_update: non-finite gain or covariance");
  }
  state.theta = theta_next;
  state.covariance = p_next;
  return state;
}

/// One term of the retrospective cost: the data available at an update step.
template <typename Scalar>
struct RetrospectiveSample
{
  typename AdaptiveGainState<Scalar>::RowVector prev_regressor;
  Scalar prev_control = 0;
  Scalar normalized_error = 0;
  typename AdaptiveGainState<Scalar>::RowVector regressor;
};

/// Retrospective cost over a history of update samples. The control penalty is
/// accumulated over every sample, which is the cost whose exact minimizer the
/// recursion in rcac_update tracks.
template <typename Scalar>
Scalar retrospective_cost(const typename AdaptiveGainState<Scalar>::Vector& theta,
                          std::span<const RetrospectiveSample<Scalar>> history,
                          const RcacHyperparameters& hyper,
                          const typename AdaptiveGainState<Scalar>::Vector& theta0)
{
  if (theta.size() != theta0.size()) {
    throw std::invalid_argument("retrospective_cost: gain dimension mismatch");
  }
  Scalar cost = 0;
  for (const auto& s : history) {
    if (s.prev_regressor.size() != theta.size() || s.regressor.size() != theta.size()) {
      throw std::invalid_argument("retrospective_cost: regressor dimension mismatch");
    }
    const Scalar zhat = s.normalized_error +
                        Scalar(hyper.sigma) * (s.prev_regressor.dot(theta.transpose()) - s.prev_control);
    const Scalar u = s.regressor.dot(theta.transpose());
    cost += Scalar(hyper.rz) * zhat * zhat + Scalar(hyper.ru) * u * u;
  }
  const auto delta = (theta - theta0).eval();
  cost += delta.squaredNorm() / Scalar(hyper.p0);
  return cost;
}

/// A single control channel: regressor bookkeeping plus an optional RCAC update
/// per tick. With adaptation off it is a plain discrete P / PID / PID+FF law.
template <typename Scalar>
class SisoController
{
public:
  using State = AdaptiveGainState<Scalar>;

  SisoController() = default;

  SisoController(ControllerStructure structure, const RcacHyperparameters& hyper, bool adaptive,
                 std::optional<typename State::Vector> theta_init = std::nullopt)
  : hyper_(hyper), adaptive_(adaptive), state_(State::initial(structure, Scalar(hyper.p0), theta_init))
  {
    hyper_.validate();
  }

  /// Takes a fresh error sample and returns the control. When adaptive, the gains
  /// are re-optimized before the control is formed.
  Scalar step(Scalar error, Scalar feedforward = 0, bool hold_integrator = false)
  {
    const Scalar g = normalize_error(error, hyper_.normalization);
    state_.prev_regressor = state_.regressor;
    state_.prev_control = state_.control;
    push_error(state_, g, hold_integrator);
    state_.regressor = build_regressor(state_, feedforward, state_.structure);
    if (adaptive_ && state_.step > 0) {
      state_ = rcac_update(state_, error, hyper_);
    }
    const Scalar u = compute_control(state_, state_.regressor);
    state_.control = u;
    ++state_.step;
    return u;
  }

  /// Replaces the stored control with what the actuator chain actually applied
  /// (after clamping), so the next update sees the true past input.
  void set_applied_control(Scalar u) { state_.control = u; }

  const State& state() const { return state_; }
  const RcacHyperparameters& hyperparameters() const { return hyper_; }
  bool adaptive() const { return adaptive_; }
  const typename State::Vector& gains() const { return state_.theta; }

private:
  RcacHyperparameters hyper_;
  bool adaptive_ = false;
  State state_;
};

}  // namespace quadtune
