#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ocvar/random.hpp"

namespace ocvar {

/// Equally spaced atoms z_i = v_min + i * delta_z, i = 0..n_atoms-1.
class SupportGrid {
  public:
    SupportGrid(double v_min, double v_max, std::size_t n_atoms);

    double v_min() const { return v_min_; }
    double v_max() const { return v_max_; }
    std::size_t size() const { return n_atoms_; }
    double delta_z() const { return delta_z_; }
    double atom(std::size_t i) const {
        return i + 1 == n_atoms_ ? v_max_ : v_min_ + static_cast<double>(i) * delta_z_;
    }
    std::vector<double> atoms() const;

    /// Value clamped into [v_min, v_max].
    double clamp(double x) const;

    bool operator==(const SupportGrid&) const = default;

  private:
    double v_min_;
    double v_max_;
    std::size_t n_atoms_;
    double delta_z_;
};

/**
 * Discrete distribution over the atoms of a SupportGrid.
 *
 * Probabilities are normalized on construction; negative or non-finite entries
 * and an all-zero vector are rejected. Instances are immutable values.
 */
class CategoricalDistribution {
  public:
    CategoricalDistribution(SupportGrid grid, std::vector<double> probs);

    static CategoricalDistribution uniform(const SupportGrid& grid);
    static CategoricalDistribution point_mass(const SupportGrid& grid, std::size_t atom);
    /// Two-atom linear interpolation of the clamped value x onto the grid.
    static CategoricalDistribution interpolated(const SupportGrid& grid, double x);

    const SupportGrid& grid() const { return grid_; }
    std::span<const double> probs() const { return probs_; }
    double prob(std::size_t i) const { return probs_[i]; }
    std::size_t size() const { return probs_.size(); }

    double mean() const;
    /// F(z_i) for every atom; the last entry is exactly 1.
    std::vector<double> cdf() const;

    bool operator==(const CategoricalDistribution&) const = default;

  private:
    SupportGrid grid_;
    std::vector<double> probs_;
};

/// Right-continuous CDF: sum of p_j over atoms z_j <= x.
double cdf_at(const CategoricalDistribution& d, double x);

/// Smallest atom whose cumulative probability reaches alpha.
double var_at(const CategoricalDistribution& d, double alpha);

/// Lower-tail CVaR via the fractional-atom closed form. alpha in (0, 1].
double cvar(const CategoricalDistribution& d, double alpha);

/// Integral of the step CDF from v_min to x (zero for x <= v_min).
double cdf_integral(const CategoricalDistribution& d, double x);

/// E[(nu - X)^+] computed directly from the atoms.
double expected_shortfall_below(const CategoricalDistribution& d, double nu);

/**
 * CVaR by brute-force maximization of sup_nu (1/alpha) * int (alpha - F)
 * over an equally spaced nu grid covering the support. Used to cross-check
 * cvar(); accuracy is bounded by the nu step.
 */
double cvar_sup_oracle(const CategoricalDistribution& d, double alpha, double nu_step);

/// Cramer (l2) distance between CDFs; distributions must share a grid.
double cramer_distance(const CategoricalDistribution& a, const CategoricalDistribution& b);

/// Wasserstein-1 distance: integral of |F_a - F_b|.
double wasserstein1(const CategoricalDistribution& a, const CategoricalDistribution& b);

/// Kolmogorov-Smirnov distance: max over atoms of |F_a - F_b|.
double sup_distance(const CategoricalDistribution& a, const CategoricalDistribution& b);

/// True iff F_lower <= F_upper at every atom, i.e. `lower` is stochastically larger.
bool dominates_cdf(const CategoricalDistribution& lower, const CategoricalDistribution& upper);

/// Random distribution for tests and numerical checks: a flat Dirichlet draw
/// restricted to a random subset of atoms.
CategoricalDistribution random_distribution(const SupportGrid& grid, Rng& rng);

}  // namespace ocvar
