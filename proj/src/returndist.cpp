#include "ocvar/returndist.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ocvar {
namespace {

constexpr double kCdfSlack = 1e-12;

void require_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::domain_error("risk level alpha must lie in (0, 1]");
}

void require_same_grid(const CategoricalDistribution& a, const CategoricalDistribution& b) {
    if (!(a.grid() == b.grid()))
        throw std::invalid_argument("distributions are defined on different grids");
}

// Index of the smallest atom with F(z_i) >= alpha.
std::size_t var_index(const std::vector<double>& cdf, double alpha) {
    for (std::size_t i = 0; i < cdf.size(); ++i)
        if (cdf[i] >= alpha - kCdfSlack) return i;
    return cdf.size() - 1;
}

}  // namespace

SupportGrid::SupportGrid(double v_min, double v_max, std::size_t n_atoms)
    : v_min_(v_min), v_max_(v_max), n_atoms_(n_atoms), delta_z_(0.0) {
    if (!std::isfinite(v_min) || !std::isfinite(v_max) || !(v_min < v_max))
        throw std::invalid_argument("support grid requires finite v_min < v_max");
    if (n_atoms < 2) throw std::invalid_argument("support grid requires at least two atoms");
    delta_z_ = (v_max - v_min) / static_cast<double>(n_atoms - 1);
}

std::vector<double> SupportGrid::atoms() const {
    std::vector<double> out(n_atoms_);
    for (std::size_t i = 0; i < n_atoms_; ++i) out[i] = atom(i);
    return out;
}

double SupportGrid::clamp(double x) const { return std::clamp(x, v_min_, v_max_); }

CategoricalDistribution::CategoricalDistribution(SupportGrid grid, std::vector<double> probs)
    : grid_(grid), probs_(std::move(probs)) {
    if (probs_.size() != grid_.size())
        throw std::invalid_argument("probability vector length does not match the grid");
    double total = 0.0;
    for (double p : probs_) {
        if (!std::isfinite(p) || p < 0.0)
            throw std::invalid_argument("probabilities must be finite and nonnegative");
        total += p;
    }
    if (!(total > 0.0)) throw std::invalid_argument("probabilities sum to zero");
    if (std::abs(total - 1.0) > 1e-12)
        for (auto& p : probs_) p /= total;
}

CategoricalDistribution CategoricalDistribution::uniform(const SupportGrid& grid) {
    return {grid, std::vector<double>(grid.size(), 1.0 / static_cast<double>(grid.size()))};
}

CategoricalDistribution CategoricalDistribution::point_mass(const SupportGrid& grid,
                                                            std::size_t atom) {
    if (atom >= grid.size()) throw std::out_of_range("atom index outside the grid");
    std::vector<double> p(grid.size(), 0.0);
    p[atom] = 1.0;
    return {grid, std::move(p)};
}

CategoricalDistribution CategoricalDistribution::interpolated(const SupportGrid& grid, double x) {
    std::vector<double> p(grid.size(), 0.0);
    double b = (grid.clamp(x) - grid.v_min()) / grid.delta_z();
    const double nearest = std::round(b);
    if (std::abs(b - nearest) < 1e-9) b = nearest;
    const auto last = static_cast<double>(grid.size() - 1);
    b = std::clamp(b, 0.0, last);
    const auto l = static_cast<std::size_t>(std::floor(b));
    const auto u = static_cast<std::size_t>(std::ceil(b));
    if (l == u) {
        p[l] = 1.0;
    } else {
        p[l] = static_cast<double>(u) - b;
        p[u] = b - static_cast<double>(l);
    }
    return {grid, std::move(p)};
}

double CategoricalDistribution::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) m += probs_[i] * grid_.atom(i);
    return m;
}

std::vector<double> CategoricalDistribution::cdf() const {
    std::vector<double> f(probs_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
        acc += probs_[i];
        f[i] = std::min(acc, 1.0);
    }
    f.back() = 1.0;
    return f;
}

double cdf_at(const CategoricalDistribution& d, double x) {
    const auto& g = d.grid();
    if (x < g.v_min()) return 0.0;
    if (x >= g.v_max()) return 1.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < d.size() && g.atom(i) <= x; ++i) acc += d.prob(i);
    return std::min(acc, 1.0);
}

double var_at(const CategoricalDistribution& d, double alpha) {
    require_alpha(alpha);
    return d.grid().atom(var_index(d.cdf(), alpha));
}

double cvar(const CategoricalDistribution& d, double alpha) {
    require_alpha(alpha);
    const auto f = d.cdf();
    const std::size_t k = var_index(f, alpha);
    double tail = 0.0;
    for (std::size_t i = 0; i < k; ++i) tail += d.prob(i) * d.grid().atom(i);
    const double below = k == 0 ? 0.0 : f[k - 1];
    const double fractional = std::max(alpha - below, 0.0);
    return (tail + fractional * d.grid().atom(k)) / alpha;
}

double cdf_integral(const CategoricalDistribution& d, double x) {
    const auto& g = d.grid();
    if (x <= g.v_min()) return 0.0;
    const auto f = d.cdf();
    double total = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double lo = g.atom(i);
        if (lo >= x) break;
        // F is constant (= f[i]) on [z_i, z_{i+1}); beyond v_max it stays at 1
        const double hi = i + 1 < f.size() ? std::min(g.atom(i + 1), x) : x;
        total += f[i] * (hi - lo);
    }
    return total;
}

double expected_shortfall_below(const CategoricalDistribution& d, double nu) {
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i)
        total += d.prob(i) * std::max(nu - d.grid().atom(i), 0.0);
    return total;
}

double cvar_sup_oracle(const CategoricalDistribution& d, double alpha, double nu_step) {
    require_alpha(alpha);
    if (!(nu_step > 0.0)) throw std::domain_error("nu_step must be positive");
    const auto& g = d.grid();
    const auto f = d.cdf();
    // prefix[i] = integral of F over [v_min, z_i]
    std::vector<double> prefix(f.size(), 0.0);
    for (std::size_t i = 1; i < f.size(); ++i)
        prefix[i] = prefix[i - 1] + f[i - 1] * (g.atom(i) - g.atom(i - 1));

    // Shifted to nonnegative support: X' = X - v_min, objective
    // (1/alpha) * int_0^nu (alpha - F'(y)) dy for nu in [0, v_max - v_min].
    const double width = g.v_max() - g.v_min();
    const auto steps = static_cast<std::size_t>(std::ceil(width / nu_step));
    double best = 0.0;  // nu = 0
    std::size_t seg = 0;
    for (std::size_t k = 1; k <= steps; ++k) {
        const double nu = std::min(static_cast<double>(k) * nu_step, width);
        const double x = g.v_min() + nu;
        while (seg + 1 < f.size() && g.atom(seg + 1) <= x) ++seg;
        const double integral = prefix[seg] + f[seg] * (x - g.atom(seg));
        best = std::max(best, (alpha * nu - integral) / alpha);
    }
    return g.v_min() + best;
}

double cramer_distance(const CategoricalDistribution& a, const CategoricalDistribution& b) {
    require_same_grid(a, b);
    const auto fa = a.cdf();
    const auto fb = b.cdf();
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < fa.size(); ++i) {
        const double diff = fa[i] - fb[i];
        total += diff * diff;
    }
    return std::sqrt(total * a.grid().delta_z());
}

double wasserstein1(const CategoricalDistribution& a, const CategoricalDistribution& b) {
    require_same_grid(a, b);
    const auto fa = a.cdf();
    const auto fb = b.cdf();
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < fa.size(); ++i) total += std::abs(fa[i] - fb[i]);
    return total * a.grid().delta_z();
}

double sup_distance(const CategoricalDistribution& a, const CategoricalDistribution& b) {
    require_same_grid(a, b);
    const auto fa = a.cdf();
    const auto fb = b.cdf();
    double worst = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) worst = std::max(worst, std::abs(fa[i] - fb[i]));
    return worst;
}

bool dominates_cdf(const CategoricalDistribution& lower, const CategoricalDistribution& upper) {
    require_same_grid(lower, upper);
    const auto fl = lower.cdf();
    const auto fu = upper.cdf();
    for (std::size_t i = 0; i < fl.size(); ++i)
        if (fl[i] > fu[i] + kCdfSlack) return false;
    return true;
}

CategoricalDistribution random_distribution(const SupportGrid& grid, Rng& rng) {
    auto weights = dirichlet_flat(grid.size(), rng);
    // Sparse supports exercise the step structure; keep at least one atom.
    const double keep = 0.15 + 0.85 * uniform01(rng);
    std::size_t kept = 0;
    for (auto& w : weights) {
        if (uniform01(rng) > keep)
            w = 0.0;
        else
            ++kept;
    }
    if (kept == 0) weights[std::uniform_int_distribution<std::size_t>(0, grid.size() - 1)(rng)] = 1.0;
    return {grid, std::move(weights)};
}

}  // namespace ocvar
