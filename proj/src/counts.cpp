#include "ocvar/counts.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ocvar {

CountTable::CountTable(std::size_t n_states, std::size_t n_actions)
    : n_states_(n_states), n_actions_(n_actions), counts_(n_states * n_actions, 0) {}

long CountTable::total() const { return std::accumulate(counts_.begin(), counts_.end(), 0L); }

LogLinearDensityModel::LogLinearDensityModel(std::size_t n_states, std::size_t n_actions,
                                             double learning_rate, double kappa)
    : n_actions_(n_actions),
      learning_rate_(learning_rate),
      kappa_(kappa),
      logits_(n_states * n_actions, 0.0) {
    if (n_states == 0 || n_actions == 0) throw std::invalid_argument("density model needs cells");
    if (!(learning_rate >= 0.0)) throw std::domain_error("learning rate must be nonnegative");
    if (!(kappa > 0.0)) throw std::domain_error("kappa must be positive");
}

void LogLinearDensityModel::set_logits(std::vector<double> logits) {
    if (logits.size() != logits_.size()) throw std::invalid_argument("logit vector has wrong size");
    logits_ = std::move(logits);
}

std::vector<double> LogLinearDensityModel::probabilities() const {
    const double top = *std::max_element(logits_.begin(), logits_.end());
    std::vector<double> p(logits_.size());
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(logits_[i] - top);
        total += p[i];
    }
    for (auto& x : p) x /= total;
    return p;
}

double LogLinearDensityModel::prob(std::size_t s, std::size_t a) const {
    return std::exp(log_prob(s, a));
}

double LogLinearDensityModel::log_prob(std::size_t s, std::size_t a) const {
    const double top = *std::max_element(logits_.begin(), logits_.end());
    double total = 0.0;
    for (double l : logits_) total += std::exp(l - top);
    return logits_.at(cell(s, a)) - top - std::log(total);
}

std::vector<double> LogLinearDensityModel::grad_log_prob(std::size_t s, std::size_t a) const {
    auto g = probabilities();
    for (auto& x : g) x = -x;
    g.at(cell(s, a)) += 1.0;
    return g;
}

void LogLinearDensityModel::train_step(std::size_t s, std::size_t a) {
    const auto g = grad_log_prob(s, a);
    for (std::size_t i = 0; i < logits_.size(); ++i) logits_[i] += learning_rate_ * g[i];
    ++train_steps_;
}

double prediction_gain_exact(const LogLinearDensityModel& model, std::size_t s, std::size_t a) {
    LogLinearDensityModel trained = model;
    trained.train_step(s, a);
    return trained.log_prob(s, a) - model.log_prob(s, a);
}

double prediction_gain_taylor(const LogLinearDensityModel& model, std::size_t s, std::size_t a) {
    const auto g = model.grad_log_prob(s, a);
    double sq = 0.0;
    for (double x : g) sq += x * x;
    return model.learning_rate() * sq;
}

double pseudo_count(double prediction_gain, double kappa, long t) {
    if (!(kappa > 0.0)) throw std::domain_error("kappa must be positive");
    if (t < 1) throw std::domain_error("pseudo-count requires t >= 1");
    const double exponent =
        kappa * std::max(prediction_gain, 0.0) / std::sqrt(static_cast<double>(t));
    if (exponent < 1e-12) return kPseudoCountCap;
    return std::min(1.0 / std::expm1(exponent), kPseudoCountCap);
}

double bonus(double c, double n_effective) {
    if (!(n_effective > 0.0)) throw std::domain_error("effective count must be positive");
    return c / std::sqrt(n_effective);
}

}  // namespace ocvar
