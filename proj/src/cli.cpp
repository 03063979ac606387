#include "npts/cli.hpp"

#include "npts/harness.hpp"
#include "npts/sampling.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace npts {

namespace {

struct PolicyFlags {
    std::string policy = "nonparametric";
    double gamma = 0.1;
    double discount = 0.0;
    int gibbs_max = 10;
    double gibbs_eps = 0.01;
    std::vector<std::size_t> oracle_k;
    PriorConfig prior;
    std::size_t fixed_arm = 0;

    std::vector<CLI::Option*> opts;

    void add_to(CLI::App& app)
    {
        opts.push_back(app.add_option("--policy", policy, "Bandit policy")
                           ->check(CLI::IsMember({"nonparametric", "oracle", "linear", "uniform", "fixed"}))
                           ->capture_default_str());
        opts.push_back(app.add_option("--gamma", gamma, "Concentration (Pitman-Yor gamma; oracle Dirichlet total)")
                           ->capture_default_str());
        opts.push_back(app.add_option("--discount", discount, "Pitman-Yor discount d in [0, 1)")
                           ->capture_default_str());
        opts.push_back(app.add_option("--gibbs-max", gibbs_max, "Maximum Gibbs sweeps per observation")
                           ->check(CLI::PositiveNumber)
                           ->capture_default_str());
        opts.push_back(app.add_option("--gibbs-eps", gibbs_eps, "Relative log-likelihood convergence margin")
                           ->check(CLI::PositiveNumber)
                           ->capture_default_str());
        opts.push_back(app.add_option("--oracle-k", oracle_k,
                                      "Oracle components: one value or one per arm (default: true counts)")
                           ->delimiter(','));
        opts.push_back(app.add_option("--prior-mean", prior.mean, "Prior coefficient mean")->capture_default_str());
        opts.push_back(app.add_option("--prior-scale", prior.cov_scale, "Prior coefficient covariance scale")
                           ->check(CLI::PositiveNumber)
                           ->capture_default_str());
        opts.push_back(app.add_option("--prior-alpha", prior.alpha, "Prior inverse-gamma shape")
                           ->check(CLI::PositiveNumber)
                           ->capture_default_str());
        opts.push_back(app.add_option("--prior-beta", prior.beta, "Prior inverse-gamma scale")
                           ->check(CLI::PositiveNumber)
                           ->capture_default_str());
        opts.push_back(app.add_option("--fixed-arm", fixed_arm, "Arm played by --policy fixed")
                           ->capture_default_str());
    }

    bool any_given() const
    {
        for (const auto* o : opts)
            if (o->count() > 0)
                return true;
        return false;
    }

    PolicyKind build() const
    {
        PolicyKind kind = policy_from_name(policy);
        if (auto* np = std::get_if<NonparametricTS>(&kind)) {
            np->py = {discount, gamma};
            np->py.validate();
            np->gibbs = {gibbs_eps, gibbs_max};
            np->prior = prior;
        } else if (auto* o = std::get_if<OracleMixtureTS>(&kind)) {
            o->components_per_arm = oracle_k;
            o->concentration = gamma;
            o->gibbs = {gibbs_eps, gibbs_max};
            o->prior = prior;
        } else if (auto* l = std::get_if<LinearGaussianTS>(&kind)) {
            l->prior = prior;
        } else if (auto* f = std::get_if<FixedArm>(&kind)) {
            f->arm = fixed_arm;
        }
        return kind;
    }
};

std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Thompson sampling with nonparametric mixture reward models: simulator, replayer and "
                 "regret tools",
                 "npts"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Simulate replications on a synthetic scenario and write regret CSVs");
    std::string scenario = "A";
    std::string scenario_file;
    std::string config_file;
    int horizon = 500;
    int reps = 100;
    std::uint64_t seed = 0;
    std::string out_path;
    int parallelism = 1;
    PolicyFlags run_policy;
    auto* opt_scenario = run->add_option("--scenario", scenario, "Built-in scenario")
                             ->check(CLI::IsMember(builtin_scenario_names()))
                             ->capture_default_str();
    auto* opt_scenario_file = run->add_option("--scenario-file", scenario_file, "Scenario JSON file")
                                  ->check(CLI::ExistingFile)
                                  ->excludes(opt_scenario);
    run->add_option("--config", config_file, "Experiment JSON config; flags override its values")
        ->check(CLI::ExistingFile);
    auto* opt_horizon = run->add_option("--horizon", horizon, "Interactions per replication")
                            ->check(CLI::PositiveNumber)
                            ->capture_default_str();
    auto* opt_reps = run->add_option("--reps", reps, "Independent replications")
                         ->check(CLI::PositiveNumber)
                         ->capture_default_str();
    auto* opt_seed = run->add_option("--seed", seed, "Base seed; replication r uses stream (seed, r)")
                         ->capture_default_str();
    auto* opt_out = run->add_option("--out", out_path, "Trace CSV path; aggregate goes to <stem>.agg.csv");
    auto* opt_par = run->add_option("--parallelism", parallelism, "Worker threads")
                        ->check(CLI::PositiveNumber)
                        ->capture_default_str();
    run_policy.add_to(*run);

    // replay
    auto* rep = app.add_subcommand("replay", "Rejection-replay a policy on logged bandit data");
    std::string log_file;
    std::size_t declared_arms = 0;
    std::uint64_t replay_seed = 0;
    std::string replay_out;
    PolicyFlags replay_policy;
    rep->add_option("--log-file", log_file, "CSV with header context_0,...,context_{d-1},arm,reward")
        ->required()
        ->check(CLI::ExistingFile);
    auto* opt_arms = rep->add_option("--arms", declared_arms, "Declared arm count (default: max logged arm + 1)");
    rep->add_option("--seed", replay_seed, "Seed")->capture_default_str();
    rep->add_option("--out", replay_out, "Write the JSON summary here as well as to stdout");
    replay_policy.add_to(*rep);

    // aggregate
    auto* agg = app.add_subcommand("aggregate", "Aggregate per-replication trace CSVs");
    std::vector<std::string> inputs;
    std::string agg_out;
    agg->add_option("--inputs", inputs, "Trace CSV files")->required()->check(CLI::ExistingFile);
    agg->add_option("--out", agg_out, "Aggregate CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        err << "\n" << (run->parsed() ? run->help() : rep->parsed() ? rep->help() : app.help());
        return kExitUsage;
    }

    // usage-level problems in flag values
    ExperimentConfig cfg;
    LoggedDataset data;
    PolicyKind replay_kind;
    try {
        if (run->parsed()) {
            if (!config_file.empty())
                apply_config_json(cfg, read_file(config_file),
                                  std::filesystem::path(config_file).parent_path().string());
            if (opt_scenario->count() > 0) {
                cfg.scenario_name = scenario;
                cfg.scenario = builtin_scenario(scenario);
            } else if (opt_scenario_file->count() > 0) {
                cfg.scenario_name = scenario_file;
                cfg.scenario = load_scenario_file(scenario_file);
            }
            if (config_file.empty() || run_policy.any_given())
                cfg.policy = run_policy.build();
            if (config_file.empty() || opt_horizon->count() > 0)
                cfg.horizon = horizon;
            if (config_file.empty() || opt_reps->count() > 0)
                cfg.replications = reps;
            if (config_file.empty() || opt_seed->count() > 0)
                cfg.base_seed = seed;
            if (config_file.empty() || opt_out->count() > 0)
                cfg.output_path = out_path;
            if (config_file.empty() || opt_par->count() > 0)
                cfg.parallelism = parallelism;
            resolve_oracle_components(cfg);
            cfg.validate();
        } else if (rep->parsed()) {
            replay_kind = replay_policy.build();
        }
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n\n" << (run->parsed() ? run->help() : rep->help());
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }

    try {
        if (run->parsed()) {
            const auto result = run_experiment(cfg);
            const auto& last = result.table.back();
            out << "replications: " << cfg.replications << ", horizon: " << cfg.horizon
                << ", mean cumulative pseudo-regret at t=" << last.t << ": " << last.mean_cum_pseudo
                << " (std " << last.std_cum_pseudo << ")\n";
            if (!result.trace_path.empty())
                out << "wrote " << result.trace_path << " and " << result.aggregate_path << '\n';
        } else if (rep->parsed()) {
            data = load_logged_csv(log_file, opt_arms->count() > 0 ? std::optional(declared_arms) : std::nullopt);
            if (auto* o = std::get_if<OracleMixtureTS>(&replay_kind); o && o->components_per_arm.empty())
                o->components_per_arm = {1};
            auto policy = make_policy(replay_kind, data.num_arms, data.context_dim);
            Rng rng = make_stream(replay_seed, 0);
            const auto r = replay(data, *policy, rng);
            nlohmann::json j;
            j["policy"] = std::string(policy_name(replay_kind));
            j["log_file"] = log_file;
            j["seed"] = replay_seed;
            j["total_events"] = r.total_events;
            j["accepted_count"] = r.accepted_count;
            j["click_sum"] = r.click_sum;
            j["ctr"] = r.ctr ? nlohmann::json(*r.ctr) : nlohmann::json(nullptr);
            j["code_version"] = std::string(code_version());
            out << j.dump(2) << '\n';
            if (!replay_out.empty()) {
                std::ofstream f(replay_out);
                if (!(f << j.dump(2) << '\n'))
                    throw std::runtime_error("cannot write " + replay_out);
            }
        } else if (agg->parsed()) {
            std::vector<RegretTrace> traces;
            for (const auto& path : inputs) {
                std::ifstream in(path);
                if (!in)
                    throw std::runtime_error("cannot open " + path);
                try {
                    auto part = read_traces_csv(in);
                    traces.insert(traces.end(), std::make_move_iterator(part.begin()),
                                  std::make_move_iterator(part.end()));
                } catch (const std::exception& e) {
                    throw std::runtime_error(path + ": " + e.what());
                }
            }
            const auto rows = aggregate(traces);
            std::ofstream f(agg_out);
            if (!f)
                throw std::runtime_error("cannot write " + agg_out);
            std::vector<std::string> meta{"code_version: " + std::string(code_version())};
            std::string joined;
            for (const auto& p : inputs)
                joined += (joined.empty() ? "" : " ") + p;
            meta.push_back("inputs: " + joined);
            meta.push_back("replications: " + std::to_string(traces.size()));
            write_aggregate_csv(f, rows, meta);
            if (!f.flush())
                throw std::runtime_error("failed writing " + agg_out);
            out << "aggregated " << traces.size() << " replications into " << agg_out << '\n';
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

} // namespace npts
