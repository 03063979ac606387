#pragma once

// Ground-truth reward generators and the logged-data replay evaluator.

#include "npts/policies.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace npts {

/// One arm's true reward law: a mixture of N(x^T w_k, variance_k).
struct MixtureArmSpec {
    std::vector<double> weights;
    std::vector<Vector> coefficients;
    std::vector<double> variances;

    std::size_t num_components() const { return weights.size(); }
    void validate(int dim) const;
};

enum class ContextSource { uniform01, standard_normal, file };

std::string_view to_string(ContextSource source);
ContextSource context_source_from_string(std::string_view name);

struct ScenarioSpec {
    std::vector<MixtureArmSpec> arms;
    int context_dim = 2;
    ContextSource context_source = ContextSource::uniform01;
    /// Only for ContextSource::file: CSV with header context_0,...,context_{d-1}.
    std::string context_file;
    /// Contexts loaded from context_file; drawn uniformly with replacement.
    std::vector<Vector> context_pool;

    std::size_t num_arms() const { return arms.size(); }
    void validate() const;
};

/// Names accepted by builtin_scenario.
const std::vector<std::string>& builtin_scenario_names();

/// Throws std::invalid_argument naming the valid options for an unknown name.
ScenarioSpec builtin_scenario(std::string_view name);

std::string scenario_to_json(const ScenarioSpec& spec);
/// Parses and validates; a "file" context source loads its pool relative to
/// `base_dir` when the path is relative.
ScenarioSpec scenario_from_json(std::string_view text, const std::string& base_dir = {});
ScenarioSpec load_scenario_file(const std::string& path);

std::vector<Vector> read_context_csv(std::istream& in);

double true_expected_reward(const ScenarioSpec& spec, std::size_t arm, const Vector& x);

struct StepSample {
    Vector x;
    std::vector<double> rewards;  // realized reward of every arm
    std::vector<double> expected; // true conditional means
    std::size_t optimal_arm = 0;  // argmax of expected, lowest index on ties
};

StepSample sample_step(const ScenarioSpec& spec, Rng& rng);

struct LoggedEvent {
    Vector context;
    std::size_t logged_arm = 0;
    double reward = 0.0;
};

struct LoggedDataset {
    int context_dim = 0;
    std::size_t num_arms = 0;
    std::vector<LoggedEvent> events;

    void validate() const;
};

/// Reads the `context_0,...,context_{d-1},arm,reward` schema. num_arms is one
/// past the largest logged arm unless `declared_arms` is given.
LoggedDataset read_logged_csv(std::istream& in, std::optional<std::size_t> declared_arms = std::nullopt);
LoggedDataset load_logged_csv(const std::string& path, std::optional<std::size_t> declared_arms = std::nullopt);
void write_logged_csv(std::ostream& out, const LoggedDataset& data);

struct ReplayResult {
    std::size_t total_events = 0;
    std::size_t accepted_count = 0;
    double click_sum = 0.0;
    std::optional<double> ctr; // absent when nothing was accepted
};

/// Rejection replay: an event counts only when the policy picks the logged arm,
/// and only then is the reward revealed to the policy.
ReplayResult replay(const LoggedDataset& data, Policy& policy, Rng& rng);

} // namespace npts
