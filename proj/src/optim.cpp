#include "seea/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace seea::optim {

namespace {

constexpr double kStdFloor = 1e-12;

double population_std(const std::vector<double>& xs, double mean) {
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace

void OptimConfig::validate() const {
  if (!(eps_low > 0.0 && eps_low <= eps_high && eps_high < 1.0))
    throw std::invalid_argument("optim: need 0 < eps_low <= eps_high < 1");
  if (beta < 0.0) throw std::invalid_argument("optim: beta must be >= 0");
  if (lr0 <= 0.0) throw std::invalid_argument("optim: lr0 must be > 0");
  if (batch_size < 1) throw std::invalid_argument("optim: batch_size must be >= 1");
  if (valid_samples_per_iteration < 1)
    throw std::invalid_argument("optim: valid_samples_per_iteration must be >= 1");
  if (warmup_ratio < 0.0 || warmup_ratio > 1.0)
    throw std::invalid_argument("optim: warmup_ratio must be in [0,1]");
}

bool is_valid_group(const std::vector<double>& pr) {
  if (pr.empty()) return false;
  return population_std(pr, mean_of(pr)) > kStdFloor;
}

std::vector<double> group_advantages(const std::vector<double>& pr) {
  const double mean = mean_of(pr);
  const double std = population_std(pr, mean);
  if (!(std > kStdFloor)) throw std::invalid_argument("group_advantages: zero-std group");
  std::vector<double> adv(pr.size());
  for (std::size_t i = 0; i < pr.size(); ++i) adv[i] = (pr[i] - mean) / std;
  return adv;
}

double importance_ratio(double new_logprob, double old_logprob) {
  return std::exp(new_logprob - old_logprob);
}

double clipped_token_objective(double rho, double advantage, double eps_low, double eps_high) {
  const double clamped = std::clamp(rho, 1.0 - eps_low, 1.0 + eps_high);
  return std::min(rho * advantage, clamped * advantage);
}

double k3_kl(double logp_current, double logp_ref) {
  const double r = std::exp(logp_ref - logp_current);
  return r - (logp_ref - logp_current) - 1.0;
}

namespace {

// Shared token-level accumulation for one group. Returns the group
// objective; appends per-token gradient weights for grad_logprob.
struct TokenTerm {
  double objective = 0.0;        // min(rho*A, clip(rho)*A) - beta*k3
  double grad_weight = 0.0;      // d objective / d logp_new
  bool clipped = false;
  double rho = 1.0;
  double kl = 0.0;
};

TokenTerm token_term(double lp_new, double lp_old, double lp_ref, double advantage,
                     const OptimConfig& cfg) {
  TokenTerm t;
  t.rho = importance_ratio(lp_new, lp_old);
  const double u = t.rho * advantage;
  const double clamped = std::clamp(t.rho, 1.0 - cfg.eps_low, 1.0 + cfg.eps_high);
  const double v = clamped * advantage;
  t.objective = std::min(u, v);
  t.clipped = t.rho < 1.0 - cfg.eps_low || t.rho > 1.0 + cfg.eps_high;
  // min picks the rho branch (or the two coincide): gradient A*rho; otherwise
  // the active clamp branch is constant in theta.
  t.grad_weight = (u <= v) ? advantage * t.rho : 0.0;
  if (cfg.beta > 0.0) {
    const double r = std::exp(lp_ref - lp_new);
    t.kl = r - (lp_ref - lp_new) - 1.0;
    t.objective -= cfg.beta * t.kl;
    t.grad_weight += cfg.beta * (r - 1.0);
  }
  return t;
}

}  // namespace

LossAndGrad tree_grpo_loss_and_grad(const std::vector<ExperienceGroup>& batch,
                                    const policy::ParamVector& params,
                                    const policy::ParamVector& ref,
                                    const OptimConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("tree_grpo: empty batch");
  LossAndGrad out;
  out.grad = policy::make_params(params.dims);
  double sum_obj = 0.0, sum_rho = 0.0, sum_kl = 0.0;
  std::size_t clipped = 0, tokens = 0;

  for (const auto& g : batch) {
    if (!is_valid_group(g.pr)) throw std::invalid_argument("tree_grpo: invalid group in batch");
    if (g.actions.size() != g.pr.size() || g.actions.size() != g.old_logprobs.size())
      throw std::invalid_argument("tree_grpo: misaligned group");
    const auto adv = group_advantages(g.pr);
    std::size_t total_tokens = 0;
    for (const auto& a : g.actions) total_tokens += a.tokens.size();
    const double inv_tok = 1.0 / static_cast<double>(total_tokens);

    double obj = 0.0;
    for (std::size_t i = 0; i < g.actions.size(); ++i) {
      const auto lp_new = policy::logprob(params, g.state, g.actions[i]);
      policy::TokenLogProbs lp_ref;
      if (cfg.beta > 0.0) lp_ref = policy::logprob(ref, g.state, g.actions[i]);
      std::vector<double> weights(g.actions[i].tokens.size(), 0.0);
      for (std::size_t k = 0; k < g.actions[i].tokens.size(); ++k) {
        const double ref_lp = cfg.beta > 0.0 ? lp_ref.values[k] : 0.0;
        const TokenTerm t = token_term(lp_new.values[k], g.old_logprobs[i][k], ref_lp, adv[i], cfg);
        obj += t.objective;
        weights[k] = t.grad_weight * inv_tok;
        sum_rho += t.rho;
        sum_kl += t.kl;
        clipped += t.clipped ? 1 : 0;
        ++tokens;
      }
      const auto g_i = policy::grad_logprob(params, g.state, g.actions[i], weights);
      policy::axpy(out.grad, g_i, 1.0);
    }
    sum_obj += obj * inv_tok;
  }

  const double inv_groups = 1.0 / static_cast<double>(batch.size());
  out.loss = -sum_obj * inv_groups;
  for (double& v : out.grad.values) v *= -inv_groups;
  out.stats.mean_ratio = sum_rho / static_cast<double>(tokens);
  out.stats.mean_kl = tokens ? sum_kl / static_cast<double>(tokens) : 0.0;
  out.stats.clip_frac = static_cast<double>(clipped) / static_cast<double>(tokens);
  out.stats.token_count = tokens;
  return out;
}

LossAndGrad scalar_grpo_loss_and_grad(const std::vector<ScalarGroup>& batch,
                                      const policy::ParamVector& rm_params,
                                      const policy::ParamVector& rm_ref,
                                      const OptimConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("scalar_grpo: empty batch");
  LossAndGrad out;
  out.grad = policy::make_params(rm_params.dims);
  double sum_obj = 0.0, sum_rho = 0.0, sum_kl = 0.0;
  std::size_t clipped = 0, tokens = 0;

  for (const auto& g : batch) {
    if (!is_valid_group(g.rewards)) throw std::invalid_argument("scalar_grpo: invalid group");
    const auto adv = group_advantages(g.rewards);
    const double inv_tok = 1.0 / static_cast<double>(g.labels.size());
    double obj = 0.0;
    for (std::size_t i = 0; i < g.labels.size(); ++i) {
      ActionText label_tok;
      label_tok.tokens = {g.labels[i]};
      const double lp_new = policy::logprob(rm_params, g.state, label_tok).values[0];
      const double lp_ref = cfg.beta > 0.0
                                ? policy::logprob(rm_ref, g.state, label_tok).values[0]
                                : 0.0;
      const TokenTerm t = token_term(lp_new, g.old_logprobs[i], lp_ref, adv[i], cfg);
      obj += t.objective;
      sum_rho += t.rho;
      sum_kl += t.kl;
      clipped += t.clipped ? 1 : 0;
      ++tokens;
      const auto g_i = policy::grad_logprob(rm_params, g.state, label_tok,
                                            {t.grad_weight * inv_tok});
      policy::axpy(out.grad, g_i, 1.0);
    }
    sum_obj += obj * inv_tok;
  }

  const double inv_groups = 1.0 / static_cast<double>(batch.size());
  out.loss = -sum_obj * inv_groups;
  for (double& v : out.grad.values) v *= -inv_groups;
  out.stats.mean_ratio = sum_rho / static_cast<double>(tokens);
  out.stats.mean_kl = tokens ? sum_kl / static_cast<double>(tokens) : 0.0;
  out.stats.clip_frac = static_cast<double>(clipped) / static_cast<double>(tokens);
  out.stats.token_count = tokens;
  return out;
}

policy::ParamVector grpo_scalar_reward_update(const std::vector<ScalarGroup>& groups,
                                              const policy::ParamVector& rm_params,
                                              const OptimConfig& cfg) {
  std::vector<ScalarGroup> valid;
  for (const auto& g : groups)
    if (is_valid_group(g.rewards)) valid.push_back(g);
  if (valid.empty())
    throw std::runtime_error("grpo_scalar_reward_update: all groups degenerate");
  const auto lg = scalar_grpo_loss_and_grad(valid, rm_params, rm_params, cfg);
  return sgd_step(rm_params, lg.grad, cfg.lr0);
}

double cosine_lr(int step, int total_steps, double lr0, double warmup_ratio) {
  if (step < 0 || step > total_steps) throw std::invalid_argument("cosine_lr: step out of range");
  const double warmup = warmup_ratio * static_cast<double>(total_steps);
  if (warmup > 0.0 && static_cast<double>(step) < warmup)
    return lr0 * static_cast<double>(step) / warmup;
  const double denom = static_cast<double>(total_steps) - warmup;
  const double progress = denom > 0.0 ? (static_cast<double>(step) - warmup) / denom : 1.0;
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

policy::ParamVector sgd_step(const policy::ParamVector& params,
                             const policy::ParamVector& grad, double lr) {
  if (params.values.size() != grad.values.size())
    throw std::invalid_argument("sgd_step: shape mismatch");
  for (double g : grad.values)
    if (!std::isfinite(g)) throw std::runtime_error("sgd_step: non-finite gradient");
  policy::ParamVector out = params;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= lr * grad.values[i];
  return out;
}

policy::ParamVector adam_step(const policy::ParamVector& params,
                              const policy::ParamVector& grad, double lr, AdamState& st) {
  if (params.values.size() != grad.values.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  if (st.m.empty()) {
    st.m.assign(params.values.size(), 0.0);
    st.v.assign(params.values.size(), 0.0);
  }
  for (double g : grad.values)
    if (!std::isfinite(g)) throw std::runtime_error("adam_step: non-finite gradient");
  st.t += 1;
  const double bc1 = 1.0 - std::pow(st.beta1, st.t);
  const double bc2 = 1.0 - std::pow(st.beta2, st.t);
  policy::ParamVector out = params;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grad.values[i];
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grad.values[i] * grad.values[i];
    out.values[i] -= lr * (st.m[i] / bc1) / (std::sqrt(st.v[i] / bc2) + st.eps);
  }
  return out;
}

}  // namespace seea::optim
