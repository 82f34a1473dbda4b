#include "jagged/trainer.hpp"

#include <cmath>
#include <string>

#include "jagged/errors.hpp"
#include "jagged/objectives.hpp"

namespace jagged {

namespace {

Vector coupling_form_gain(const std::vector<Vector>& grads, const Vector& coeffs, double eta) {
  const std::size_t m = grads.size();
  const Matrix kappa = coupling_matrix(grads);
  std::vector<double> norms(m);
  for (std::size_t i = 0; i < m; ++i) norms[i] = norm(grads[i]);
  Vector gain = Vector::zeros(m);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += coeffs[j] * norms[i] * norms[j] * kappa(i, j);
    gain[i] = -eta * s;
  }
  return gain;
}

Vector alignments(const std::vector<Vector>& grads, const Vector& loss_gradient) {
  Vector out = Vector::zeros(grads.size());
  for (std::size_t i = 0; i < grads.size(); ++i) out[i] = -dot(grads[i], loss_gradient);
  return out;
}

}  // namespace

double EtaSchedule::at(std::size_t t) const {
  return decay == 1.0 ? eta0 : eta0 * std::pow(decay, static_cast<double>(t));
}

void TrainerConfig::validate() const {
  if (horizon < 1 || horizon > kMaxHorizon) {
    throw UsageError("trainer: horizon must lie in [1, 10^7]");
  }
  if (!(eta.eta0 > 0.0) || !std::isfinite(eta.eta0)) {
    throw UsageError("trainer: eta0 must be finite and positive");
  }
  if (!(eta.decay > 0.0 && eta.decay <= 1.0)) {
    throw UsageError("trainer: eta decay must lie in (0, 1]");
  }
}

StepResult step(const TrainerConfig& config, const TrainerState& state, const Objective& objective,
                const CapabilitySet& capabilities) {
  if (state.theta.size() != objective.dimension() ||
      objective.dimension() != capabilities.dimension()) {
    throw UsageError("trainer: parameter, objective and capability dimensions differ");
  }
  const std::size_t m = capabilities.size();
  const double eta = config.eta.at(state.t);

  const Vector g = objective.gradient(state.theta);
  if (!g.all_finite()) {
    throw DivergenceError("non-finite gradient at step " + std::to_string(state.t), state.t,
                          state.theta);
  }
  const std::vector<Vector> grads = capabilities.gradients(state.theta);

  StepRecord rec;
  rec.t = state.t;
  rec.eta = eta;
  rec.grad_norm = norm(g);
  rec.projections = Vector::zeros(m);
  for (std::size_t i = 0; i < m; ++i) rec.projections[i] = dot(grads[i], g);
  rec.shares = energy_shares(rec.projections);
  LeastSquaresResult parts = least_squares(grads, g);
  rec.coeffs = parts.coefficients;
  rec.residual_norm = norm(parts.residual);
  rec.capability_values = capabilities.values(state.theta);

  Vector applied = g;
  Vector applied_coeffs = parts.coefficients;
  if (config.governance) {
    GovernanceResult gov = apply_governance(*config.governance, capabilities, state.theta, g);
    rec.achieved_shares = gov.achieved_shares;
    if (gov.iterations > 0) {
      applied = std::move(gov.controlled_gradient);
      applied_coeffs = least_squares(grads, applied).coefficients;
    }
  }
  rec.applied_norm = norm(applied);
  rec.applied_projections = Vector::zeros(m);
  for (std::size_t i = 0; i < m; ++i) {
    rec.applied_projections[i] = dot(grads[i], applied);
    if (-rec.applied_projections[i] < -1e-12) rec.flagged = true;
  }
  rec.predicted_gain = coupling_form_gain(grads, applied_coeffs, eta);

  if (const MismatchObjective* mix = objective.as_mismatch()) {
    rec.prox_alignment = alignments(grads, mix->prox().gradient(state.theta));
    rec.struct_alignment = alignments(grads, mix->structural().gradient(state.theta));
  }
  if (config.record_coupling_every > 0 && state.t % config.record_coupling_every == 0) {
    rec.coupling = coupling_matrix(grads);
  }

  TrainerState next{state.theta, state.t + 1};
  next.theta.axpy(-eta, applied);
  if (!next.theta.all_finite()) {
    throw DivergenceError("non-finite parameters after step " + std::to_string(state.t), state.t,
                          state.theta);
  }
  return {std::move(next), std::move(rec)};
}

Trace run(const TrainerConfig& config, const Objective& objective,
          const CapabilitySet& capabilities, const Vector& theta0) {
  config.validate();
  if (config.governance && config.governance->size() != capabilities.size()) {
    throw UsageError("trainer: governance policy size does not match capabilities");
  }
  Trace trace;
  trace.names = capabilities.names();
  trace.lipschitz = capabilities.lipschitz_constants();
  trace.theta_initial = theta0;
  trace.governance_active = config.governance.has_value();
  trace.steps.reserve(config.horizon);

  TrainerState state{theta0, 0};
  for (std::size_t t = 0; t < config.horizon; ++t) {
    StepResult r = step(config, state, objective, capabilities);
    trace.steps.push_back(std::move(r.record));
    state = std::move(r.next);
  }
  trace.theta_final = state.theta;
  trace.capability_values_final = capabilities.values(state.theta);
  trace.coupling_final = coupling_matrix(capabilities, state.theta);
  return trace;
}

}  // namespace jagged
