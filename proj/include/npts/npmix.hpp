#pragma once

// Per-arm Pitman-Yor mixture of Gaussian linear regressions with a
// warm-started collapsed Gibbs sampler over observation assignments.

#include "npts/conjugate.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace npts {

struct PYConfig {
    double discount = 0.0;
    double concentration = 0.1;

    /// Throws std::invalid_argument unless 0 <= discount < 1 and concentration > -discount.
    void validate() const;
};

struct GibbsConfig {
    double epsilon = 0.01;
    int max_iters = 10;

    void validate() const;
};

struct Observation {
    Vector x;
    double y = 0.0;
};

struct Component {
    ComponentStats stats;
    NIGHyper posterior;
};

struct ObserveDiagnostics {
    int sweeps_run = 0;
    bool converged = false;
};

/// Relative change used as the sweep convergence statistic.
double relative_change(double previous, double current);

/// Log probability of a partition with the given block sizes under the
/// Pitman-Yor exchangeable partition function.
double pitman_yor_log_eppf(std::span<const long> block_sizes, const PYConfig& py);

/// Predictive seating probabilities: (n_k - d)/(n + gamma) for each block,
/// then (gamma + K d)/(n + gamma) for a new block. With no observations the
/// single entry is 1.
std::vector<double> pitman_yor_predictive_weights(std::span<const long> block_sizes, const PYConfig& py);

class ArmState {
public:
    ArmState(NIGHyper prior, PYConfig py);

    /// State with an explicit partition; labels may be any values below the
    /// number of distinct labels used. Throws std::invalid_argument on
    /// inconsistent input.
    static ArmState from_partition(NIGHyper prior, PYConfig py, std::vector<Observation> history,
                                   const std::vector<std::size_t>& labels);

    int dim() const { return prior_.dim(); }
    std::size_t size() const { return history_.size(); }
    std::size_t num_components() const { return components_.size(); }
    const std::vector<Observation>& history() const { return history_; }
    const std::vector<std::size_t>& assignments() const { return assignments_; }
    const std::vector<Component>& components() const { return components_; }
    const PYConfig& py() const { return py_; }
    const NIGHyper& prior() const { return prior_; }

    /// Unnormalized log assignment weights of (x, y) against the current
    /// state: one entry per active component, then one for a new component.
    std::vector<double> assignment_log_weights(const Vector& x, double y) const;

    /// One pass over the history in order, resampling every assignment.
    void gibbs_sweep(Rng& rng);

    /// Sum of per-component block marginals plus the partition log-probability.
    double joint_log_likelihood() const;

    /// Append (x, y), seat it by one conditional draw, then sweep until the
    /// relative change of joint_log_likelihood drops below cfg.epsilon or
    /// cfg.max_iters sweeps have run.
    ObserveDiagnostics observe(Vector x, double y, const GibbsConfig& cfg, Rng& rng);

    /// Throws std::logic_error describing the first violated invariant.
    void check_invariants(double tol = 1e-10) const;

private:
    void seat(std::size_t i, std::size_t k);
    void unseat(std::size_t i);
    void fill_log_weights(const Vector& x, double y, std::vector<double>& out) const;

    NIGHyper prior_;
    PYConfig py_;
    std::vector<Observation> history_;
    std::vector<std::size_t> assignments_;
    std::vector<Component> components_;
    std::vector<double> scratch_;
};

} // namespace npts
