#include "npts/policies.hpp"

#include "npts/sampling.hpp"

#include <sstream>
#include <stdexcept>

namespace npts {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void write_hyper(std::ostream& os, const NIGHyper& h)
{
    os << "u=" << h.u().transpose() << " P=" << h.precision().reshaped().transpose() << " a=" << h.alpha()
       << " b=" << h.beta() << '\n';
}

void write_stats(std::ostream& os, const ComponentStats& s)
{
    os << "n=" << s.count << " G=" << s.gram.reshaped().transpose() << " c=" << s.cross.transpose()
       << " e=" << s.energy << '\n';
}

template <class Arm>
std::string snapshot_mixture(const Arm& arm)
{
    std::ostringstream os;
    os << std::hexfloat;
    for (std::size_t i = 0; i < arm.size(); ++i)
        os << arm.history()[i].x.transpose() << ' ' << arm.history()[i].y << " z=" << arm.assignments()[i]
           << '\n';
    for (const auto& c : arm.components()) {
        write_stats(os, c.stats);
        write_hyper(os, c.posterior);
    }
    return os.str();
}

} // namespace

std::string_view policy_name(const PolicyKind& kind)
{
    return std::visit(overloaded{
                          [](const NonparametricTS&) { return std::string_view("nonparametric"); },
                          [](const OracleMixtureTS&) { return std::string_view("oracle"); },
                          [](const LinearGaussianTS&) { return std::string_view("linear"); },
                          [](const UniformRandom&) { return std::string_view("uniform"); },
                          [](const FixedArm&) { return std::string_view("fixed"); },
                      },
                      kind);
}

Policy::Policy(std::size_t num_arms, int dim) : num_arms_(num_arms), dim_(dim)
{
    if (num_arms < 1)
        throw std::invalid_argument("a bandit needs at least one arm");
    if (dim < 1)
        throw std::invalid_argument("context dimension must be at least 1");
}

Decision Policy::select_arm(const Vector& x, Rng& rng) const
{
    if (x.size() != dim_)
        throw std::invalid_argument("context dimension mismatch: expected " + std::to_string(dim_) + ", got "
                                    + std::to_string(x.size()));
    Decision d;
    d.sampled_expected_rewards.assign(num_arms_, 0.0);
    if (fixed_choice(d.arm, rng))
        return d;
    for (std::size_t a = 0; a < num_arms_; ++a)
        d.sampled_expected_rewards[a] = sample_expected_reward(a, x, rng);
    d.arm = argmax_random_tie(d.sampled_expected_rewards, rng);
    return d;
}

UpdateDiagnostics Policy::update(std::size_t arm, const Vector& x, double y, Rng& rng)
{
    if (arm >= num_arms_)
        throw std::out_of_range("arm index out of range");
    if (x.size() != dim_)
        throw std::invalid_argument("context dimension mismatch");
    return do_update(arm, x, y, rng);
}

// nonparametric

NonparametricPolicy::NonparametricPolicy(const NonparametricTS& cfg, std::size_t num_arms, int dim)
    : Policy(num_arms, dim), gibbs_(cfg.gibbs)
{
    gibbs_.validate();
    arms_.assign(num_arms, ArmState(cfg.prior.resolve(dim), cfg.py));
}

void NonparametricPolicy::set_arm(std::size_t a, ArmState state)
{
    if (state.dim() != dim())
        throw std::invalid_argument("arm state dimension mismatch");
    arms_.at(a) = std::move(state);
}

double NonparametricPolicy::sample_expected_reward(std::size_t a, const Vector& x, Rng& rng) const
{
    const ArmState& arm = arms_[a];
    std::vector<long> sizes;
    sizes.reserve(arm.num_components());
    for (const auto& c : arm.components())
        sizes.push_back(c.stats.count);
    const auto weights = pitman_yor_predictive_weights(sizes, arm.py());

    double mu = 0.0;
    for (std::size_t k = 0; k < arm.num_components(); ++k)
        mu += weights[k] * x.dot(sample_params(arm.components()[k].posterior, rng).w);
    // a new component has no posterior; its coefficients come from the base measure
    mu += weights.back() * x.dot(sample_params(arm.prior(), rng).w);
    return mu;
}

UpdateDiagnostics NonparametricPolicy::do_update(std::size_t a, const Vector& x, double y, Rng& rng)
{
    const auto diag = arms_[a].observe(x, y, gibbs_, rng);
    return {diag.sweeps_run, diag.converged};
}

std::string NonparametricPolicy::arm_snapshot(std::size_t a) const
{
    return snapshot_mixture(arms_.at(a));
}

// oracle

OracleMixturePolicy::OracleMixturePolicy(const OracleMixtureTS& cfg, std::size_t num_arms, int dim)
    : Policy(num_arms, dim), gibbs_(cfg.gibbs)
{
    gibbs_.validate();
    const auto& ks = cfg.components_per_arm;
    if (ks.size() != 1 && ks.size() != num_arms)
        throw std::invalid_argument("oracle needs one component count, or one per arm");
    const NIGHyper prior = cfg.prior.resolve(dim);
    for (std::size_t a = 0; a < num_arms; ++a)
        arms_.emplace_back(prior, ks.size() == 1 ? ks.front() : ks[a], cfg.concentration);
}

double OracleMixturePolicy::sample_expected_reward(std::size_t a, const Vector& x, Rng& rng) const
{
    const FiniteArmState& arm = arms_[a];
    const double share = arm.concentration() / static_cast<double>(arm.num_components());
    const double denom = static_cast<double>(arm.size()) + arm.concentration();
    double mu = 0.0;
    for (const auto& c : arm.components()) {
        const double weight = (static_cast<double>(c.stats.count) + share) / denom;
        mu += weight * x.dot(sample_params(c.posterior, rng).w);
    }
    return mu;
}

UpdateDiagnostics OracleMixturePolicy::do_update(std::size_t a, const Vector& x, double y, Rng& rng)
{
    const auto diag = arms_[a].observe(x, y, gibbs_, rng);
    return {diag.sweeps_run, diag.converged};
}

std::string OracleMixturePolicy::arm_snapshot(std::size_t a) const
{
    return snapshot_mixture(arms_.at(a));
}

// linear Gaussian

LinearGaussianPolicy::LinearGaussianPolicy(const LinearGaussianTS& cfg, std::size_t num_arms, int dim)
    : Policy(num_arms, dim), prior_(cfg.prior.resolve(dim))
{
    stats_.assign(num_arms, ComponentStats::empty(dim));
    posteriors_.assign(num_arms, prior_);
}

void LinearGaussianPolicy::set_posterior(std::size_t a, NIGHyper posterior)
{
    if (posterior.dim() != dim())
        throw std::invalid_argument("posterior dimension mismatch");
    posteriors_.at(a) = std::move(posterior);
}

double LinearGaussianPolicy::sample_expected_reward(std::size_t a, const Vector& x, Rng& rng) const
{
    return x.dot(sample_params(posteriors_[a], rng).w);
}

UpdateDiagnostics LinearGaussianPolicy::do_update(std::size_t a, const Vector& x, double y, Rng&)
{
    stats_[a].add(x, y);
    posteriors_[a] = posterior_update(prior_, stats_[a]);
    return {};
}

std::string LinearGaussianPolicy::arm_snapshot(std::size_t a) const
{
    std::ostringstream os;
    os << std::hexfloat;
    write_stats(os, stats_.at(a));
    write_hyper(os, posteriors_.at(a));
    return os.str();
}

bool UniformRandomPolicy::fixed_choice(std::size_t& arm, Rng& rng) const
{
    std::uniform_int_distribution<std::size_t> pick(0, num_arms() - 1);
    arm = pick(rng);
    return true;
}

FixedArmPolicy::FixedArmPolicy(std::size_t arm, std::size_t num_arms, int dim) : Policy(num_arms, dim), arm_(arm)
{
    if (arm >= num_arms)
        throw std::invalid_argument("fixed arm index out of range");
}

std::unique_ptr<Policy> make_policy(const PolicyKind& kind, std::size_t num_arms, int dim)
{
    return std::visit(overloaded{
                          [&](const NonparametricTS& c) -> std::unique_ptr<Policy> {
                              return std::make_unique<NonparametricPolicy>(c, num_arms, dim);
                          },
                          [&](const OracleMixtureTS& c) -> std::unique_ptr<Policy> {
                              return std::make_unique<OracleMixturePolicy>(c, num_arms, dim);
                          },
                          [&](const LinearGaussianTS& c) -> std::unique_ptr<Policy> {
                              return std::make_unique<LinearGaussianPolicy>(c, num_arms, dim);
                          },
                          [&](const UniformRandom&) -> std::unique_ptr<Policy> {
                              return std::make_unique<UniformRandomPolicy>(num_arms, dim);
                          },
                          [&](const FixedArm& c) -> std::unique_ptr<Policy> {
                              return std::make_unique<FixedArmPolicy>(c.arm, num_arms, dim);
                          },
                      },
                      kind);
}

} // namespace npts
