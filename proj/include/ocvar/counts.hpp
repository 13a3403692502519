#pragma once

#include <cstddef>
#include <vector>

namespace ocvar {

/// Cap returned by pseudo_count when the prediction gain is (numerically) zero.
inline constexpr double kPseudoCountCap = 1e12;

/// Visit counts per (state, action); counts only grow.
class CountTable {
  public:
    CountTable(std::size_t n_states, std::size_t n_actions);

    long get(std::size_t s, std::size_t a) const { return counts_.at(s * n_actions_ + a); }
    void increment(std::size_t s, std::size_t a) { ++counts_.at(s * n_actions_ + a); }
    long total() const;

    std::size_t n_states() const { return n_states_; }
    std::size_t n_actions() const { return n_actions_; }

  private:
    std::size_t n_states_;
    std::size_t n_actions_;
    std::vector<long> counts_;
};

/**
 * Log-linear (softmax) density over the discrete (state, action) grid,
 * trained by one step of gradient ascent on log rho(s, a) per observation.
 */
class LogLinearDensityModel {
  public:
    LogLinearDensityModel(std::size_t n_states, std::size_t n_actions, double learning_rate,
                          double kappa);

    std::size_t cells() const { return logits_.size(); }
    std::size_t cell(std::size_t s, std::size_t a) const { return s * n_actions_ + a; }

    double learning_rate() const { return learning_rate_; }
    double kappa() const { return kappa_; }
    long train_steps() const { return train_steps_; }
    const std::vector<double>& logits() const { return logits_; }
    void set_logits(std::vector<double> logits);

    std::vector<double> probabilities() const;
    double prob(std::size_t s, std::size_t a) const;
    double log_prob(std::size_t s, std::size_t a) const;
    /// d log rho(s, a) / d theta = e_(s,a) - rho.
    std::vector<double> grad_log_prob(std::size_t s, std::size_t a) const;

    /// theta <- theta + eta * grad log rho(s, a); increments the step counter.
    void train_step(std::size_t s, std::size_t a);

  private:
    std::size_t n_actions_;
    double learning_rate_;
    double kappa_;
    long train_steps_ = 0;
    std::vector<double> logits_;
};

/// log rho'(s, a) - log rho(s, a) after one training step on a copy of the model.
double prediction_gain_exact(const LogLinearDensityModel& model, std::size_t s, std::size_t a);

/// First-order estimate eta * ||grad log rho(s, a)||^2.
double prediction_gain_taylor(const LogLinearDensityModel& model, std::size_t s, std::size_t a);

/// (exp(kappa * t^{-1/2} * PG_+) - 1)^{-1}, capped at kPseudoCountCap.
double pseudo_count(double prediction_gain, double kappa, long t);

/// Optimism shift c / sqrt(n_effective).
double bonus(double c, double n_effective);

}  // namespace ocvar
