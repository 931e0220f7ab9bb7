#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sptrim/grouping.hpp"
#include "sptrim/prox.hpp"
#include "sptrim/tensor.hpp"

namespace sptrim {

// Optimizer state for the splitting methods: float parameters w plus, for
// grouped slots, the auxiliary group-sparse iterate u.
struct SplitState {
  std::vector<Tensor> w;
  std::vector<std::optional<GroupPartition>> part;  // aligned with w
  std::vector<std::optional<Tensor>> u;             // engaged iff part is
  double eta = 0.0;
  double beta = 0.0;
  double lambda = 0.0;
};

SplitState make_split_state(std::vector<Tensor> w,
                            std::vector<std::optional<GroupPartition>> part,
                            double eta, double beta, double lambda);

void sgd_step(Tensor& w, const Tensor& grad, double eta);

// u_g = Prox_GL(w_g, lambda); w <- w - eta*grad - eta*beta*(w - u).
// Ungrouped slots take a plain gradient step. grads are evaluated at w.
void rgsm_step(SplitState& state, const std::vector<Tensor>& grads_at_w);

// The point where the GSBC loss gradient is evaluated: prox of w for grouped
// slots, w itself otherwise.
std::vector<Tensor> gsbc_eval_point(const SplitState& state);

// u_g = Prox_GL(w_g, lambda); w <- w - eta*grad, with grads evaluated at the
// prox point (no beta coupling).
void gsbc_step(SplitState& state, const std::vector<Tensor>& grads_at_eval);

// Subgradient step on loss + mu * ||w||_GL; the GL subgradient of a zero
// group is 0. Pass part = nullptr for an ungrouped (plain SGD) step.
void gl_penalty_step(Tensor& w, const GroupPartition* part, const Tensor& grad,
                     double mu, double eta);

// BinaryConnect state: float shadow wf plus the projected weights w that the
// loss gradient is evaluated at. Slots with binarized = 0 (biases) keep
// w = wf. keep holds optional per-coordinate mask flags (empty = all kept).
struct BinConnectState {
  std::vector<Tensor> wf;
  std::vector<Tensor> w;
  std::vector<std::uint8_t> binarized;
  std::vector<std::vector<std::uint8_t>> keep;
  double eta = 0.0;
  double rho = 0.0;
};

BinConnectState make_binconnect_state(std::vector<Tensor> wf,
                                      std::vector<std::uint8_t> binarized,
                                      std::vector<std::vector<std::uint8_t>> keep,
                                      double eta, double rho);

// wf <- wf - eta*grad; w <- proj(wf). grads are evaluated at w.
void bc_step(BinConnectState& state, const std::vector<Tensor>& grads_at_w);

// wf <- (1-rho)*wf + rho*w - eta*grad; w <- proj(wf). rho = 0 reproduces
// bc_step bit-exactly.
void blended_bc_step(BinConnectState& state,
                     const std::vector<Tensor>& grads_at_w);

// L = loss + lambda*beta*||u||_GL + (beta/2)*||w - u||^2 (mu = lambda*beta).
double lagrangian(const SplitState& state, double loss_at_w);

struct EquilibriumResidual {
  double r_prox = 0.0;  // ||u - Prox_GL(w)||
  double r_grad = 0.0;  // ||grad - beta*(u - w)||
};

// Both components vanish exactly at an equilibrium point. grads must be the
// deterministic full-batch gradient at w. Ungrouped slots contribute with
// u = w.
EquilibriumResidual equilibrium_residual(const SplitState& state,
                                         const std::vector<Tensor>& grads_at_w);

// Number of steps where the Lagrangian increased by more than tol.
std::size_t descent_monitor(const std::vector<double>& lagrangian_history,
                            double tol = 1e-10);

}  // namespace sptrim
