#pragma once

#include "npts/finite_mixture.hpp"
#include "npts/npmix.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace npts {

/// Isotropic NIG prior, resolved to a concrete NIGHyper once the context
/// dimension is known.
struct PriorConfig {
    double mean = 0.0;
    double cov_scale = 1.0;
    double alpha = 1.0;
    double beta = 1.0;

    NIGHyper resolve(int dim) const { return NIGHyper::isotropic(dim, mean, cov_scale, alpha, beta); }
};

struct NonparametricTS {
    PYConfig py;
    GibbsConfig gibbs;
    PriorConfig prior;
};

struct OracleMixtureTS {
    std::vector<std::size_t> components_per_arm; // one entry, or one per arm
    double concentration = 0.1;
    GibbsConfig gibbs;
    PriorConfig prior;
};

struct LinearGaussianTS {
    PriorConfig prior;
};

struct UniformRandom {};

/// Always plays one arm; a replay and regret reference point.
struct FixedArm {
    std::size_t arm = 0;
};

using PolicyKind = std::variant<NonparametricTS, OracleMixtureTS, LinearGaussianTS, UniformRandom, FixedArm>;

std::string_view policy_name(const PolicyKind& kind);

struct Decision {
    std::size_t arm = 0;
    std::vector<double> sampled_expected_rewards;
};

struct UpdateDiagnostics {
    int sweeps_run = 0;
    bool converged = true;
};

class Policy {
public:
    Policy(std::size_t num_arms, int dim);
    virtual ~Policy() = default;

    std::size_t num_arms() const { return num_arms_; }
    int dim() const { return dim_; }

    /// Throws std::invalid_argument on context dimension mismatch.
    Decision select_arm(const Vector& x, Rng& rng) const;
    /// Throws std::out_of_range for an invalid arm.
    UpdateDiagnostics update(std::size_t arm, const Vector& x, double y, Rng& rng);

    /// Exact text rendering of one arm's learned state (hex floats), used to
    /// check that updates leave the other arms untouched.
    virtual std::string arm_snapshot(std::size_t arm) const = 0;

protected:
    virtual double sample_expected_reward(std::size_t arm, const Vector& x, Rng& rng) const = 0;
    virtual UpdateDiagnostics do_update(std::size_t arm, const Vector& x, double y, Rng& rng) = 0;
    /// Override to bypass posterior sampling entirely.
    virtual bool fixed_choice(std::size_t& /*arm*/, Rng& /*rng*/) const { return false; }

private:
    std::size_t num_arms_;
    int dim_;
};

class NonparametricPolicy final : public Policy {
public:
    NonparametricPolicy(const NonparametricTS& cfg, std::size_t num_arms, int dim);

    const ArmState& arm(std::size_t a) const { return arms_.at(a); }
    void set_arm(std::size_t a, ArmState state);
    std::string arm_snapshot(std::size_t arm) const override;

private:
    double sample_expected_reward(std::size_t arm, const Vector& x, Rng& rng) const override;
    UpdateDiagnostics do_update(std::size_t arm, const Vector& x, double y, Rng& rng) override;

    GibbsConfig gibbs_;
    std::vector<ArmState> arms_;
};

class OracleMixturePolicy final : public Policy {
public:
    OracleMixturePolicy(const OracleMixtureTS& cfg, std::size_t num_arms, int dim);

    const FiniteArmState& arm(std::size_t a) const { return arms_.at(a); }
    std::string arm_snapshot(std::size_t arm) const override;

private:
    double sample_expected_reward(std::size_t arm, const Vector& x, Rng& rng) const override;
    UpdateDiagnostics do_update(std::size_t arm, const Vector& x, double y, Rng& rng) override;

    GibbsConfig gibbs_;
    std::vector<FiniteArmState> arms_;
};

class LinearGaussianPolicy final : public Policy {
public:
    LinearGaussianPolicy(const LinearGaussianTS& cfg, std::size_t num_arms, int dim);

    const NIGHyper& posterior(std::size_t a) const { return posteriors_.at(a); }
    const ComponentStats& stats(std::size_t a) const { return stats_.at(a); }
    void set_posterior(std::size_t a, NIGHyper posterior);
    std::string arm_snapshot(std::size_t arm) const override;

private:
    double sample_expected_reward(std::size_t arm, const Vector& x, Rng& rng) const override;
    UpdateDiagnostics do_update(std::size_t arm, const Vector& x, double y, Rng& rng) override;

    NIGHyper prior_;
    std::vector<ComponentStats> stats_;
    std::vector<NIGHyper> posteriors_;
};

class UniformRandomPolicy final : public Policy {
public:
    UniformRandomPolicy(std::size_t num_arms, int dim) : Policy(num_arms, dim) {}
    std::string arm_snapshot(std::size_t) const override { return {}; }

private:
    double sample_expected_reward(std::size_t, const Vector&, Rng&) const override { return 0.0; }
    UpdateDiagnostics do_update(std::size_t, const Vector&, double, Rng&) override { return {}; }
    bool fixed_choice(std::size_t& arm, Rng& rng) const override;
};

class FixedArmPolicy final : public Policy {
public:
    FixedArmPolicy(std::size_t arm, std::size_t num_arms, int dim);
    std::string arm_snapshot(std::size_t) const override { return {}; }

private:
    double sample_expected_reward(std::size_t, const Vector&, Rng&) const override { return 0.0; }
    UpdateDiagnostics do_update(std::size_t, const Vector&, double, Rng&) override { return {}; }
    bool fixed_choice(std::size_t& arm, Rng&) const override
    {
        arm = arm_;
        return true;
    }

    std::size_t arm_;
};

std::unique_ptr<Policy> make_policy(const PolicyKind& kind, std::size_t num_arms, int dim);

} // namespace npts
