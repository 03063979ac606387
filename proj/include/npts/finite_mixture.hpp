#pragma once

// Finite-K mixture arm with a symmetric Dirichlet(gamma/K) prior on the
// weights. Backs the oracle Thompson-sampling baseline, which is told the true
// number of components of each arm.

#include "npts/npmix.hpp"

namespace npts {

class FiniteArmState {
public:
    /// Throws std::invalid_argument unless num_components >= 1 and concentration > 0.
    FiniteArmState(NIGHyper prior, std::size_t num_components, double concentration);

    static FiniteArmState from_partition(NIGHyper prior, std::size_t num_components, double concentration,
                                         std::vector<Observation> history,
                                         const std::vector<std::size_t>& labels);

    int dim() const { return prior_.dim(); }
    std::size_t size() const { return history_.size(); }
    std::size_t num_components() const { return components_.size(); }
    double concentration() const { return concentration_; }
    const std::vector<Observation>& history() const { return history_; }
    const std::vector<std::size_t>& assignments() const { return assignments_; }
    const std::vector<Component>& components() const { return components_; }
    const NIGHyper& prior() const { return prior_; }

    /// Entry k: log(n_k + gamma/K) + log_predictive(posterior_k, x, y). Empty
    /// components stay available and use the prior predictive.
    std::vector<double> assignment_log_weights(const Vector& x, double y) const;

    void gibbs_sweep(Rng& rng);

    /// Dirichlet-multinomial partition term plus per-component block marginals.
    double joint_log_likelihood() const;

    ObserveDiagnostics observe(Vector x, double y, const GibbsConfig& cfg, Rng& rng);

private:
    void move_to(std::size_t i, std::size_t k);
    void fill_log_weights(const Vector& x, double y, std::vector<double>& out) const;

    NIGHyper prior_;
    double concentration_;
    std::vector<Observation> history_;
    std::vector<std::size_t> assignments_;
    std::vector<Component> components_;
    std::vector<double> scratch_;
};

} // namespace npts
