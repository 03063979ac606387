#include "npts/finite_mixture.hpp"

#include "npts/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace npts {

FiniteArmState::FiniteArmState(NIGHyper prior, std::size_t num_components, double concentration)
    : prior_(std::move(prior)), concentration_(concentration)
{
    if (num_components < 1)
        throw std::invalid_argument("oracle mixture needs at least one component");
    if (!(concentration > 0.0))
        throw std::invalid_argument("oracle Dirichlet concentration must be positive");
    components_.assign(num_components, Component{ComponentStats::empty(prior_.dim()), prior_});
}

FiniteArmState FiniteArmState::from_partition(NIGHyper prior, std::size_t num_components,
                                              double concentration, std::vector<Observation> history,
                                              const std::vector<std::size_t>& labels)
{
    if (history.size() != labels.size())
        throw std::invalid_argument("one label per observation is required");
    FiniteArmState s(std::move(prior), num_components, concentration);
    s.history_ = std::move(history);
    s.assignments_ = labels;
    for (std::size_t i = 0; i < s.history_.size(); ++i) {
        if (labels[i] >= num_components)
            throw std::invalid_argument("label exceeds the number of components");
        s.components_[labels[i]].stats.add(s.history_[i].x, s.history_[i].y);
    }
    for (auto& c : s.components_)
        c.posterior = posterior_update(s.prior_, c.stats);
    return s;
}

void FiniteArmState::fill_log_weights(const Vector& x, double y, std::vector<double>& out) const
{
    const double share = concentration_ / static_cast<double>(components_.size());
    out.resize(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const auto& c = components_[k];
        out[k] = std::log(static_cast<double>(c.stats.count) + share) + log_predictive(c.posterior, x, y);
    }
}

std::vector<double> FiniteArmState::assignment_log_weights(const Vector& x, double y) const
{
    if (x.size() != dim())
        throw std::invalid_argument("context dimension does not match arm state");
    std::vector<double> out;
    fill_log_weights(x, y, out);
    return out;
}

void FiniteArmState::move_to(std::size_t i, std::size_t k)
{
    const auto& obs = history_[i];
    auto& c = components_[k];
    c.stats.add(obs.x, obs.y);
    c.posterior = posterior_update(prior_, c.stats);
    assignments_[i] = k;
}

void FiniteArmState::gibbs_sweep(Rng& rng)
{
    for (std::size_t i = 0; i < history_.size(); ++i) {
        auto& c = components_[assignments_[i]];
        c.stats.remove(history_[i].x, history_[i].y);
        c.posterior = posterior_update(prior_, c.stats);
        fill_log_weights(history_[i].x, history_[i].y, scratch_);
        move_to(i, sample_log_categorical(scratch_, rng));
    }
}

double FiniteArmState::joint_log_likelihood() const
{
    const double K = static_cast<double>(components_.size());
    const double share = concentration_ / K;
    double ll = std::lgamma(concentration_) - std::lgamma(static_cast<double>(history_.size()) + concentration_);
    for (const auto& c : components_) {
        ll += std::lgamma(static_cast<double>(c.stats.count) + share) - std::lgamma(share);
        ll += log_evidence(prior_, c.posterior, c.stats.count);
    }
    return ll;
}

ObserveDiagnostics FiniteArmState::observe(Vector x, double y, const GibbsConfig& cfg, Rng& rng)
{
    if (x.size() != dim())
        throw std::invalid_argument("context dimension does not match arm state");
    fill_log_weights(x, y, scratch_);
    const std::size_t k = sample_log_categorical(scratch_, rng);
    history_.push_back({std::move(x), y});
    assignments_.push_back(k);
    move_to(history_.size() - 1, k);

    ObserveDiagnostics diag;
    double previous = joint_log_likelihood();
    while (diag.sweeps_run < cfg.max_iters) {
        gibbs_sweep(rng);
        ++diag.sweeps_run;
        const double current = joint_log_likelihood();
        if (relative_change(previous, current) < cfg.epsilon) {
            diag.converged = true;
            break;
        }
        previous = current;
    }
    return diag;
}

} // namespace npts
