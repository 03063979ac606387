#pragma once

// Replication runner, regret bookkeeping, aggregation and CSV persistence.

#include "npts/environments.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace npts {

/// Version string embedded in every CSV header block.
std::string_view code_version();

struct ExperimentConfig {
    std::string scenario_name = "A"; // builtin name, or the source path for file scenarios
    ScenarioSpec scenario = builtin_scenario("A");
    PolicyKind policy = NonparametricTS{};
    int horizon = 500;
    int replications = 100;
    std::uint64_t base_seed = 0;
    std::string output_path;
    int parallelism = 1;

    void validate() const;
};

/// An oracle policy with no component counts gets the scenario's true
/// per-arm counts.
void resolve_oracle_components(ExperimentConfig& cfg);

/// Resolved config as JSON. Parallelism and output_path are left out: neither
/// changes results, so outputs stay byte-identical across them.
std::string config_to_json(const ExperimentConfig& cfg);
/// Values present in `text` override those already in `cfg`.
void apply_config_json(ExperimentConfig& cfg, std::string_view text, const std::string& base_dir = {});

struct StepRecord {
    int t = 0;
    std::size_t arm = 0;
    double reward = 0.0;
    double realized_regret = 0.0;
    double pseudo_regret = 0.0;
    double cum_realized = 0.0;
    double cum_pseudo = 0.0;
    int sweeps_run = 0;
};

struct RegretTrace {
    int replication = 0;
    std::vector<StepRecord> steps;

    /// Throws std::logic_error if the cumulative columns are not prefix sums.
    void check_integrity(double tol = 1e-9) const;
};

struct AggregateRow {
    int t = 0;
    double mean_cum_pseudo = 0.0;
    double std_cum_pseudo = 0.0;
    double mean_cum_realized = 0.0;
    double std_cum_realized = 0.0;
};

/// One independent replication on the stream make_stream(base_seed, rep).
RegretTrace run_replication(const ExperimentConfig& cfg, int rep);

/// Reference implementation: replications one after another.
std::vector<RegretTrace> run_replications_serial(const ExperimentConfig& cfg);
/// OpenMP over replications with cfg.parallelism threads. Output order and
/// content match run_replications_serial.
std::vector<RegretTrace> run_replications_parallel(const ExperimentConfig& cfg);

/// Per-t mean and sample standard deviation (n - 1) of the cumulative
/// columns, in replication-index order. All traces must share a horizon.
std::vector<AggregateRow> aggregate(std::span<const RegretTrace> traces);

struct ExperimentResult {
    std::vector<RegretTrace> traces;
    std::vector<AggregateRow> table;
    std::string trace_path;
    std::string aggregate_path;
};

/// Runs all replications and, when cfg.output_path is set, writes the trace
/// CSV there and the aggregate CSV next to it (a.csv -> a.agg.csv). Throws
/// std::runtime_error for an unwritable path.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

std::string aggregate_path_for(const std::string& trace_path);

/// `#`-prefixed metadata lines followed by the header and rows.
void write_traces_csv(std::ostream& out, std::span<const RegretTrace> traces, const std::vector<std::string>& meta);
void write_aggregate_csv(std::ostream& out, std::span<const AggregateRow> rows, const std::vector<std::string>& meta);
std::vector<RegretTrace> read_traces_csv(std::istream& in);
std::vector<AggregateRow> read_aggregate_csv(std::istream& in);

/// Metadata lines for a run: resolved config, seeds, code version.
std::vector<std::string> run_metadata(const ExperimentConfig& cfg);

/// Policy kind from a CLI-style name using the given settings.
PolicyKind policy_from_name(std::string_view name);

} // namespace npts
