#include "npts/npmix.hpp"

#include "npts/sampling.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace npts {

void PYConfig::validate() const
{
    if (!(discount >= 0.0 && discount < 1.0))
        throw std::invalid_argument("Pitman-Yor discount must lie in [0, 1)");
    if (!(concentration > -discount) || !std::isfinite(concentration))
        throw std::invalid_argument("Pitman-Yor concentration must exceed -discount");
}

void GibbsConfig::validate() const
{
    if (!(epsilon > 0.0))
        throw std::invalid_argument("Gibbs epsilon must be positive");
    if (max_iters < 1)
        throw std::invalid_argument("Gibbs max_iters must be at least 1");
}

double relative_change(double previous, double current)
{
    const double delta = std::abs(current - previous);
    if (delta == 0.0)
        return 0.0;
    return delta / std::abs(previous);
}

double pitman_yor_log_eppf(std::span<const long> block_sizes, const PYConfig& py)
{
    long n = 0;
    double lp = 0.0;
    std::size_t k = 0;
    for (long nk : block_sizes) {
        if (nk <= 0)
            continue;
        // the first customer of every table after the first one
        if (k > 0)
            lp += std::log(py.concentration + static_cast<double>(k) * py.discount);
        for (long j = 1; j < nk; ++j)
            lp += std::log(static_cast<double>(j) - py.discount);
        n += nk;
        ++k;
    }
    for (long i = 1; i < n; ++i)
        lp -= std::log(static_cast<double>(i) + py.concentration);
    return lp;
}

std::vector<double> pitman_yor_predictive_weights(std::span<const long> block_sizes, const PYConfig& py)
{
    long n = 0;
    for (long nk : block_sizes)
        n += nk;
    if (n == 0)
        return {1.0};
    const double K = static_cast<double>(block_sizes.size());
    const double denom = static_cast<double>(n) + py.concentration;
    std::vector<double> w;
    w.reserve(block_sizes.size() + 1);
    for (long nk : block_sizes)
        w.push_back((static_cast<double>(nk) - py.discount) / denom);
    w.push_back((py.concentration + K * py.discount) / denom);
    return w;
}

ArmState::ArmState(NIGHyper prior, PYConfig py) : prior_(std::move(prior)), py_(py)
{
    py_.validate();
}

ArmState ArmState::from_partition(NIGHyper prior, PYConfig py, std::vector<Observation> history,
                                  const std::vector<std::size_t>& labels)
{
    if (history.size() != labels.size())
        throw std::invalid_argument("one label per observation is required");
    ArmState s(std::move(prior), py);
    std::size_t num_labels = 0;
    for (auto l : labels)
        num_labels = std::max(num_labels, l + 1);
    for (std::size_t k = 0; k < num_labels; ++k)
        s.components_.push_back({ComponentStats::empty(s.dim()), s.prior_});
    s.history_ = std::move(history);
    s.assignments_ = labels;
    for (std::size_t i = 0; i < s.history_.size(); ++i) {
        if (s.history_[i].x.size() != s.dim())
            throw std::invalid_argument("observation context dimension does not match prior");
        s.components_[labels[i]].stats.add(s.history_[i].x, s.history_[i].y);
    }
    for (auto& c : s.components_) {
        if (c.stats.count == 0)
            throw std::invalid_argument("partition labels must be contiguous from 0");
        c.posterior = posterior_update(s.prior_, c.stats);
    }
    return s;
}

void ArmState::fill_log_weights(const Vector& x, double y, std::vector<double>& out) const
{
    const std::size_t K = components_.size();
    out.resize(K + 1);
    for (std::size_t k = 0; k < K; ++k) {
        const double nk = static_cast<double>(components_[k].stats.count);
        out[k] = std::log(nk - py_.discount) + log_predictive(components_[k].posterior, x, y);
    }
    // the first observation opens a table with probability one
    const double open = K == 0 ? 0.0
                               : std::log(py_.concentration + static_cast<double>(K) * py_.discount);
    out[K] = open + log_predictive(prior_, x, y);
}

std::vector<double> ArmState::assignment_log_weights(const Vector& x, double y) const
{
    if (x.size() != dim())
        throw std::invalid_argument("context dimension does not match arm state");
    std::vector<double> out;
    fill_log_weights(x, y, out);
    return out;
}

void ArmState::seat(std::size_t i, std::size_t k)
{
    const auto& obs = history_[i];
    if (k == components_.size())
        components_.push_back({ComponentStats::empty(dim()), prior_});
    auto& c = components_[k];
    c.stats.add(obs.x, obs.y);
    c.posterior = posterior_update(prior_, c.stats);
    assignments_[i] = k;
}

void ArmState::unseat(std::size_t i)
{
    const auto& obs = history_[i];
    const std::size_t k = assignments_[i];
    auto& c = components_[k];
    c.stats.remove(obs.x, obs.y);
    if (c.stats.count > 0) {
        c.posterior = posterior_update(prior_, c.stats);
        return;
    }
    const std::size_t last = components_.size() - 1;
    if (k != last) {
        components_[k] = std::move(components_[last]);
        for (auto& z : assignments_)
            if (z == last)
                z = k;
    }
    components_.pop_back();
}

void ArmState::gibbs_sweep(Rng& rng)
{
    for (std::size_t i = 0; i < history_.size(); ++i) {
        unseat(i);
        fill_log_weights(history_[i].x, history_[i].y, scratch_);
        seat(i, sample_log_categorical(scratch_, rng));
    }
}

double ArmState::joint_log_likelihood() const
{
    double ll = 0.0;
    std::vector<long> sizes;
    sizes.reserve(components_.size());
    for (const auto& c : components_) {
        ll += log_evidence(prior_, c.posterior, c.stats.count);
        sizes.push_back(c.stats.count);
    }
    return ll + pitman_yor_log_eppf(sizes, py_);
}

ObserveDiagnostics ArmState::observe(Vector x, double y, const GibbsConfig& cfg, Rng& rng)
{
    if (x.size() != dim())
        throw std::invalid_argument("context dimension does not match arm state");
    fill_log_weights(x, y, scratch_);
    const std::size_t k = sample_log_categorical(scratch_, rng);
    history_.push_back({std::move(x), y});
    assignments_.push_back(0);
    seat(history_.size() - 1, k);

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

void ArmState::check_invariants(double tol) const
{
    auto fail = [](const std::string& what) { throw std::logic_error("arm state invariant: " + what); };
    if (assignments_.size() != history_.size())
        fail("assignment vector length differs from history length");

    std::vector<ComponentStats> batch(components_.size(), ComponentStats::empty(dim()));
    for (std::size_t i = 0; i < history_.size(); ++i) {
        if (assignments_[i] >= components_.size())
            fail("assignment references an inactive component");
        batch[assignments_[i]].add(history_[i].x, history_[i].y);
    }
    long total = 0;
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const auto& c = components_[k];
        if (c.stats.count < 1)
            fail("active component with no observations");
        if (c.stats.count != batch[k].count)
            fail("component count differs from assignments");
        total += c.stats.count;
        const NIGHyper expect = posterior_update(prior_, batch[k]);
        auto close = [tol](double a, double b) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); };
        bool ok = close(c.posterior.alpha(), expect.alpha()) && close(c.posterior.beta(), expect.beta());
        for (int r = 0; ok && r < dim(); ++r) {
            ok = close(c.posterior.u()(r), expect.u()(r));
            for (int s = 0; ok && s < dim(); ++s)
                ok = close(c.posterior.precision()(r, s), expect.precision()(r, s));
        }
        if (!ok) {
            std::ostringstream msg;
            msg << "component " << k << " posterior differs from batch recomputation";
            fail(msg.str());
        }
    }
    if (total != static_cast<long>(history_.size()))
        fail("component counts do not sum to history length");
}

} // namespace npts
