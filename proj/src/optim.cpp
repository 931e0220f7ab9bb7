#include "sptrim/optim.hpp"

#include <cmath>

namespace sptrim {

namespace {

void check_grads(const std::vector<Tensor>& w, const std::vector<Tensor>& g) {
  if (w.size() != g.size())
    throw DimError("optimizer step: gradient slot count mismatch");
  for (std::size_t i = 0; i < w.size(); ++i)
    if (!w[i].same_shape(g[i]))
      throw DimError("optimizer step: gradient shape mismatch");
}

}  // namespace

SplitState make_split_state(std::vector<Tensor> w,
                            std::vector<std::optional<GroupPartition>> part,
                            double eta, double beta, double lambda) {
  if (w.size() != part.size())
    throw DimError("make_split_state: w/part slot count mismatch");
  if (!(eta > 0.0)) throw ConfigError("make_split_state: eta must be > 0");
  if (beta < 0.0 || lambda < 0.0)
    throw ConfigError("make_split_state: beta and lambda must be >= 0");
  SplitState state;
  state.w = std::move(w);
  state.part = std::move(part);
  state.eta = eta;
  state.beta = beta;
  state.lambda = lambda;
  state.u.resize(state.w.size());
  for (std::size_t i = 0; i < state.w.size(); ++i) {
    if (state.part[i]) {
      validate_partition(*state.part[i], state.w[i]);
      state.u[i] = prox_gl(state.w[i], *state.part[i], lambda);
    }
  }
  return state;
}

void sgd_step(Tensor& w, const Tensor& grad, double eta) {
  if (!w.same_shape(grad)) throw DimError("sgd_step: shape mismatch");
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = w[i] - eta * grad[i];
}

void rgsm_step(SplitState& state, const std::vector<Tensor>& grads_at_w) {
  check_grads(state.w, grads_at_w);
  const double eta = state.eta, beta = state.beta;
  for (std::size_t k = 0; k < state.w.size(); ++k) {
    Tensor& w = state.w[k];
    const Tensor& g = grads_at_w[k];
    if (state.part[k]) {
      Tensor& u = *state.u[k];
      u = prox_gl(w, *state.part[k], state.lambda);
      for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = w[i] - eta * g[i] - eta * beta * (w[i] - u[i]);
    } else {
      sgd_step(w, g, eta);
    }
  }
}

std::vector<Tensor> gsbc_eval_point(const SplitState& state) {
  std::vector<Tensor> point;
  point.reserve(state.w.size());
  for (std::size_t k = 0; k < state.w.size(); ++k) {
    if (state.part[k])
      point.push_back(prox_gl(state.w[k], *state.part[k], state.lambda));
    else
      point.push_back(state.w[k]);
  }
  return point;
}

void gsbc_step(SplitState& state, const std::vector<Tensor>& grads_at_eval) {
  check_grads(state.w, grads_at_eval);
  for (std::size_t k = 0; k < state.w.size(); ++k) {
    if (state.part[k])
      *state.u[k] = prox_gl(state.w[k], *state.part[k], state.lambda);
    sgd_step(state.w[k], grads_at_eval[k], state.eta);
  }
}

void gl_penalty_step(Tensor& w, const GroupPartition* part, const Tensor& grad,
                     double mu, double eta) {
  if (!w.same_shape(grad)) throw DimError("gl_penalty_step: shape mismatch");
  if (mu < 0.0) throw ConfigError("gl_penalty_step: mu must be >= 0");
  if (part == nullptr || mu == 0.0) {
    sgd_step(w, grad, eta);
    return;
  }
  for (const auto& group : part->groups) {
    const double nrm = group_norm(w, group);
    if (nrm == 0.0) {
      // Subgradient of a zero group is 0.
      for (std::size_t i : group) w[i] = w[i] - eta * grad[i];
    } else {
      for (std::size_t i : group)
        w[i] = w[i] - eta * (grad[i] + mu * w[i] / nrm);
    }
  }
}

namespace {

void project_slot(BinConnectState& state, std::size_t k) {
  if (state.binarized[k]) {
    BinaryWeights bw = binary_project_masked(state.wf[k], state.keep[k]);
    state.w[k] = bw.reconstruct(state.wf[k].shape);
  } else {
    state.w[k] = state.wf[k];
  }
}

}  // namespace

BinConnectState make_binconnect_state(std::vector<Tensor> wf,
                                      std::vector<std::uint8_t> binarized,
                                      std::vector<std::vector<std::uint8_t>> keep,
                                      double eta, double rho) {
  if (wf.size() != binarized.size() || wf.size() != keep.size())
    throw DimError("make_binconnect_state: slot count mismatch");
  if (!(eta > 0.0)) throw ConfigError("make_binconnect_state: eta must be > 0");
  if (rho < 0.0 || rho > 1.0)
    throw ConfigError("make_binconnect_state: rho must be in [0, 1]");
  BinConnectState state;
  state.wf = std::move(wf);
  state.binarized = std::move(binarized);
  state.keep = std::move(keep);
  state.eta = eta;
  state.rho = rho;
  state.w.resize(state.wf.size());
  for (std::size_t k = 0; k < state.wf.size(); ++k) project_slot(state, k);
  return state;
}

void bc_step(BinConnectState& state, const std::vector<Tensor>& grads_at_w) {
  check_grads(state.wf, grads_at_w);
  for (std::size_t k = 0; k < state.wf.size(); ++k) {
    sgd_step(state.wf[k], grads_at_w[k], state.eta);
    project_slot(state, k);
  }
}

void blended_bc_step(BinConnectState& state,
                     const std::vector<Tensor>& grads_at_w) {
  if (state.rho == 0.0) {  // stated reduction: rho = 0 is exactly bc_step
    bc_step(state, grads_at_w);
    return;
  }
  check_grads(state.wf, grads_at_w);
  const double eta = state.eta, rho = state.rho;
  for (std::size_t k = 0; k < state.wf.size(); ++k) {
    Tensor& wf = state.wf[k];
    const Tensor& w = state.w[k];
    const Tensor& g = grads_at_w[k];
    for (std::size_t i = 0; i < wf.size(); ++i)
      wf[i] = (1.0 - rho) * wf[i] + rho * w[i] - eta * g[i];
    project_slot(state, k);
  }
}

double lagrangian(const SplitState& state, double loss_at_w) {
  double penalty = 0.0, gap = 0.0;
  for (std::size_t k = 0; k < state.w.size(); ++k) {
    if (!state.part[k]) continue;
    penalty += group_lasso_norm(*state.u[k], *state.part[k]);
    gap += squared_distance(state.w[k], *state.u[k]);
  }
  return loss_at_w + state.lambda * state.beta * penalty +
         0.5 * state.beta * gap;
}

EquilibriumResidual equilibrium_residual(const SplitState& state,
                                         const std::vector<Tensor>& grads_at_w) {
  check_grads(state.w, grads_at_w);
  double prox_sq = 0.0, grad_sq = 0.0;
  for (std::size_t k = 0; k < state.w.size(); ++k) {
    const Tensor& w = state.w[k];
    const Tensor& g = grads_at_w[k];
    if (state.part[k]) {
      const Tensor& u = *state.u[k];
      Tensor pw = prox_gl(w, *state.part[k], state.lambda);
      prox_sq += squared_distance(u, pw);
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double d = g[i] - state.beta * (u[i] - w[i]);
        grad_sq += d * d;
      }
    } else {
      for (std::size_t i = 0; i < w.size(); ++i) grad_sq += g[i] * g[i];
    }
  }
  return {std::sqrt(prox_sq), std::sqrt(grad_sq)};
}

std::size_t descent_monitor(const std::vector<double>& lagrangian_history,
                            double tol) {
  std::size_t violations = 0;
  for (std::size_t i = 1; i < lagrangian_history.size(); ++i)
    if (lagrangian_history[i] > lagrangian_history[i - 1] + tol) ++violations;
  return violations;
}

}  // namespace sptrim
