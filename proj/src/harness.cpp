#include "npts/harness.hpp"

#include "npts/sampling.hpp"

#include <json.hpp>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#ifndef NPTS_VERSION
#define NPTS_VERSION "dev"
#endif

namespace npts {

using nlohmann::json;

namespace {

constexpr const char* kTraceHeader = "rep,t,arm,reward,realized_regret,pseudo_regret,cum_realized,cum_pseudo,sweeps_run";
constexpr const char* kAggregateHeader = "t,mean_cum_pseudo,std_cum_pseudo,mean_cum_realized,std_cum_realized";

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

std::string fmt_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json prior_to_json(const PriorConfig& p)
{
    return {{"mean", p.mean}, {"cov_scale", p.cov_scale}, {"alpha", p.alpha}, {"beta", p.beta}};
}

PriorConfig prior_from_json(const json& j, PriorConfig p)
{
    p.mean = j.value("mean", p.mean);
    p.cov_scale = j.value("cov_scale", p.cov_scale);
    p.alpha = j.value("alpha", p.alpha);
    p.beta = j.value("beta", p.beta);
    return p;
}

json policy_to_json(const PolicyKind& kind)
{
    json j;
    j["kind"] = std::string(policy_name(kind));
    std::visit(overloaded{
                   [&](const NonparametricTS& c) {
                       j["gamma"] = c.py.concentration;
                       j["discount"] = c.py.discount;
                       j["gibbs_max"] = c.gibbs.max_iters;
                       j["gibbs_eps"] = c.gibbs.epsilon;
                       j["prior"] = prior_to_json(c.prior);
                   },
                   [&](const OracleMixtureTS& c) {
                       j["oracle_k"] = c.components_per_arm;
                       j["gamma"] = c.concentration;
                       j["gibbs_max"] = c.gibbs.max_iters;
                       j["gibbs_eps"] = c.gibbs.epsilon;
                       j["prior"] = prior_to_json(c.prior);
                   },
                   [&](const LinearGaussianTS& c) { j["prior"] = prior_to_json(c.prior); },
                   [&](const UniformRandom&) {},
                   [&](const FixedArm& c) { j["arm"] = c.arm; },
               },
               kind);
    return j;
}

PolicyKind policy_from_json(const json& j)
{
    PolicyKind kind = policy_from_name(j.at("kind").get<std::string>());
    std::visit(overloaded{
                   [&](NonparametricTS& c) {
                       c.py.concentration = j.value("gamma", c.py.concentration);
                       c.py.discount = j.value("discount", c.py.discount);
                       c.gibbs.max_iters = j.value("gibbs_max", c.gibbs.max_iters);
                       c.gibbs.epsilon = j.value("gibbs_eps", c.gibbs.epsilon);
                       if (j.contains("prior"))
                           c.prior = prior_from_json(j["prior"], c.prior);
                   },
                   [&](OracleMixtureTS& c) {
                       c.components_per_arm = j.value("oracle_k", c.components_per_arm);
                       c.concentration = j.value("gamma", c.concentration);
                       c.gibbs.max_iters = j.value("gibbs_max", c.gibbs.max_iters);
                       c.gibbs.epsilon = j.value("gibbs_eps", c.gibbs.epsilon);
                       if (j.contains("prior"))
                           c.prior = prior_from_json(j["prior"], c.prior);
                   },
                   [&](LinearGaussianTS& c) {
                       if (j.contains("prior"))
                           c.prior = prior_from_json(j["prior"], c.prior);
                   },
                   [&](UniformRandom&) {},
                   [&](FixedArm& c) { c.arm = j.value("arm", c.arm); },
               },
               kind);
    return kind;
}

bool next_data_line(std::istream& in, std::string& line)
{
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line.front() == '#')
            continue;
        return true;
    }
    return false;
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ','))
        cells.push_back(cell);
    return cells;
}

std::string replication_failure(const ExperimentConfig& cfg, int rep, const std::string& what)
{
    return "replication " + std::to_string(rep) + " (base_seed " + std::to_string(cfg.base_seed)
           + ", stream " + std::to_string(rep) + ") failed: " + what;
}

} // namespace

std::string_view code_version()
{
    return "npts " NPTS_VERSION;
}

void ExperimentConfig::validate() const
{
    if (horizon < 1)
        throw std::invalid_argument("horizon must be at least 1");
    if (replications < 1)
        throw std::invalid_argument("replications must be at least 1");
    if (parallelism < 1)
        throw std::invalid_argument("parallelism must be at least 1");
    scenario.validate();
    if (const auto* o = std::get_if<OracleMixtureTS>(&policy)) {
        if (o->components_per_arm.size() != 1 && o->components_per_arm.size() != scenario.num_arms())
            throw std::invalid_argument("oracle component counts must be one value or one per arm");
    }
    if (const auto* f = std::get_if<FixedArm>(&policy); f && f->arm >= scenario.num_arms())
        throw std::invalid_argument("fixed arm index out of range");
}

void resolve_oracle_components(ExperimentConfig& cfg)
{
    auto* o = std::get_if<OracleMixtureTS>(&cfg.policy);
    if (!o || !o->components_per_arm.empty())
        return;
    for (const auto& arm : cfg.scenario.arms)
        o->components_per_arm.push_back(arm.num_components());
}

std::string config_to_json(const ExperimentConfig& cfg)
{
    json j;
    j["scenario"] = cfg.scenario_name;
    j["scenario_spec"] = json::parse(scenario_to_json(cfg.scenario));
    j["policy"] = policy_to_json(cfg.policy);
    j["horizon"] = cfg.horizon;
    j["replications"] = cfg.replications;
    j["base_seed"] = cfg.base_seed;
    return j.dump();
}

void apply_config_json(ExperimentConfig& cfg, std::string_view text, const std::string& base_dir)
{
    json j;
    try {
        j = json::parse(text);
        if (j.contains("scenario_spec")) {
            cfg.scenario = scenario_from_json(j["scenario_spec"].dump(), base_dir);
            cfg.scenario_name = j.value("scenario", std::string("custom"));
        } else if (j.contains("scenario")) {
            cfg.scenario_name = j["scenario"].get<std::string>();
            cfg.scenario = builtin_scenario(cfg.scenario_name);
        }
        if (j.contains("policy"))
            cfg.policy = policy_from_json(j["policy"]);
        cfg.horizon = j.value("horizon", cfg.horizon);
        cfg.replications = j.value("replications", cfg.replications);
        cfg.base_seed = j.value("base_seed", cfg.base_seed);
        cfg.output_path = j.value("output_path", cfg.output_path);
        cfg.parallelism = j.value("parallelism", cfg.parallelism);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config JSON: ") + e.what());
    }
}

PolicyKind policy_from_name(std::string_view name)
{
    if (name == "nonparametric")
        return NonparametricTS{};
    if (name == "oracle")
        return OracleMixtureTS{};
    if (name == "linear")
        return LinearGaussianTS{};
    if (name == "uniform")
        return UniformRandom{};
    if (name == "fixed")
        return FixedArm{};
    throw std::invalid_argument("unknown policy '" + std::string(name)
                                + "' (valid: nonparametric, oracle, linear, uniform, fixed)");
}

void RegretTrace::check_integrity(double tol) const
{
    double cum_r = 0.0;
    double cum_p = 0.0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& s = steps[i];
        cum_r += s.realized_regret;
        cum_p += s.pseudo_regret;
        if (s.t != static_cast<int>(i) + 1)
            throw std::logic_error("trace time index is not 1..T");
        if (std::abs(cum_r - s.cum_realized) > tol * std::max(1.0, std::abs(cum_r))
            || std::abs(cum_p - s.cum_pseudo) > tol * std::max(1.0, std::abs(cum_p)))
            throw std::logic_error("trace cumulative columns are not prefix sums at t=" + std::to_string(s.t));
    }
}

RegretTrace run_replication(const ExperimentConfig& cfg, int rep)
{
    Rng rng = make_stream(cfg.base_seed, static_cast<std::uint64_t>(rep));
    auto policy = make_policy(cfg.policy, cfg.scenario.num_arms(), cfg.scenario.context_dim);

    RegretTrace trace;
    trace.replication = rep;
    trace.steps.reserve(static_cast<std::size_t>(cfg.horizon));
    double cum_realized = 0.0;
    double cum_pseudo = 0.0;
    for (int t = 1; t <= cfg.horizon; ++t) {
        const StepSample step = sample_step(cfg.scenario, rng);
        const Decision d = policy->select_arm(step.x, rng);
        const double y = step.rewards[d.arm];
        const UpdateDiagnostics diag = policy->update(d.arm, step.x, y, rng);

        StepRecord r;
        r.t = t;
        r.arm = d.arm;
        r.reward = y;
        r.realized_regret = step.rewards[step.optimal_arm] - y;
        r.pseudo_regret = step.expected[step.optimal_arm] - step.expected[d.arm];
        cum_realized += r.realized_regret;
        cum_pseudo += r.pseudo_regret;
        r.cum_realized = cum_realized;
        r.cum_pseudo = cum_pseudo;
        r.sweeps_run = diag.sweeps_run;
        trace.steps.push_back(r);
    }
    return trace;
}

std::vector<RegretTrace> run_replications_serial(const ExperimentConfig& cfg)
{
    cfg.validate();
    std::vector<RegretTrace> traces;
    traces.reserve(static_cast<std::size_t>(cfg.replications));
    for (int rep = 0; rep < cfg.replications; ++rep) {
        try {
            traces.push_back(run_replication(cfg, rep));
        } catch (const std::exception& e) {
            throw std::runtime_error(replication_failure(cfg, rep, e.what()));
        }
    }
    return traces;
}

std::vector<RegretTrace> run_replications_parallel(const ExperimentConfig& cfg)
{
    cfg.validate();
    const int reps = cfg.replications;
    std::vector<RegretTrace> traces(static_cast<std::size_t>(reps));
    std::vector<std::string> errors(static_cast<std::size_t>(reps));

#pragma omp parallel for num_threads(cfg.parallelism) schedule(dynamic, 1)
    for (int rep = 0; rep < reps; ++rep) {
        try {
            traces[static_cast<std::size_t>(rep)] = run_replication(cfg, rep);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(rep)] = e.what();
        }
    }

    for (int rep = 0; rep < reps; ++rep)
        if (!errors[static_cast<std::size_t>(rep)].empty())
            throw std::runtime_error(replication_failure(cfg, rep, errors[static_cast<std::size_t>(rep)]));
    return traces;
}

std::vector<AggregateRow> aggregate(std::span<const RegretTrace> traces)
{
    if (traces.empty())
        return {};
    const std::size_t horizon = traces.front().steps.size();
    for (const auto& tr : traces)
        if (tr.steps.size() != horizon)
            throw std::invalid_argument("cannot aggregate traces with different horizons");

    const double n = static_cast<double>(traces.size());
    std::vector<AggregateRow> rows(horizon);
    for (std::size_t i = 0; i < horizon; ++i) {
        double sum_p = 0.0;
        double sum_r = 0.0;
        for (const auto& tr : traces) {
            sum_p += tr.steps[i].cum_pseudo;
            sum_r += tr.steps[i].cum_realized;
        }
        const double mean_p = sum_p / n;
        const double mean_r = sum_r / n;
        double ss_p = 0.0;
        double ss_r = 0.0;
        for (const auto& tr : traces) {
            ss_p += (tr.steps[i].cum_pseudo - mean_p) * (tr.steps[i].cum_pseudo - mean_p);
            ss_r += (tr.steps[i].cum_realized - mean_r) * (tr.steps[i].cum_realized - mean_r);
        }
        auto& row = rows[i];
        row.t = traces.front().steps[i].t;
        row.mean_cum_pseudo = mean_p;
        row.mean_cum_realized = mean_r;
        row.std_cum_pseudo = traces.size() > 1 ? std::sqrt(ss_p / (n - 1.0)) : 0.0;
        row.std_cum_realized = traces.size() > 1 ? std::sqrt(ss_r / (n - 1.0)) : 0.0;
    }
    return rows;
}

std::string aggregate_path_for(const std::string& trace_path)
{
    const auto slash = trace_path.find_last_of('/');
    const auto dot = trace_path.find_last_of('.');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
        return trace_path.substr(0, dot) + ".agg" + trace_path.substr(dot);
    return trace_path + ".agg.csv";
}

std::vector<std::string> run_metadata(const ExperimentConfig& cfg)
{
    return {
        "code_version: " + std::string(code_version()),
        "config: " + config_to_json(cfg),
        "base_seed: " + std::to_string(cfg.base_seed),
        "replication_streams: make_stream(base_seed, rep) for rep in [0, "
            + std::to_string(cfg.replications) + ")",
    };
}

void write_traces_csv(std::ostream& out, std::span<const RegretTrace> traces, const std::vector<std::string>& meta)
{
    for (const auto& m : meta)
        out << "# " << m << '\n';
    out << kTraceHeader << '\n';
    for (const auto& tr : traces) {
        tr.check_integrity();
        for (const auto& s : tr.steps)
            out << tr.replication << ',' << s.t << ',' << s.arm << ',' << fmt_double(s.reward) << ','
                << fmt_double(s.realized_regret) << ',' << fmt_double(s.pseudo_regret) << ','
                << fmt_double(s.cum_realized) << ',' << fmt_double(s.cum_pseudo) << ',' << s.sweeps_run << '\n';
    }
}

void write_aggregate_csv(std::ostream& out, std::span<const AggregateRow> rows, const std::vector<std::string>& meta)
{
    for (const auto& m : meta)
        out << "# " << m << '\n';
    out << kAggregateHeader << '\n';
    for (const auto& r : rows)
        out << r.t << ',' << fmt_double(r.mean_cum_pseudo) << ',' << fmt_double(r.std_cum_pseudo) << ','
            << fmt_double(r.mean_cum_realized) << ',' << fmt_double(r.std_cum_realized) << '\n';
}

std::vector<RegretTrace> read_traces_csv(std::istream& in)
{
    std::string line;
    if (!next_data_line(in, line) || line != kTraceHeader)
        throw std::runtime_error(std::string("trace CSV header must be ") + kTraceHeader);
    std::map<int, RegretTrace> by_rep;
    std::size_t row = 0;
    while (next_data_line(in, line)) {
        ++row;
        const auto c = split(line);
        if (c.size() != 9)
            throw std::runtime_error("trace CSV row " + std::to_string(row) + " does not have 9 columns");
        try {
            const int rep = std::stoi(c[0]);
            StepRecord s;
            s.t = std::stoi(c[1]);
            s.arm = static_cast<std::size_t>(std::stoul(c[2]));
            s.reward = std::stod(c[3]);
            s.realized_regret = std::stod(c[4]);
            s.pseudo_regret = std::stod(c[5]);
            s.cum_realized = std::stod(c[6]);
            s.cum_pseudo = std::stod(c[7]);
            s.sweeps_run = std::stoi(c[8]);
            auto& tr = by_rep[rep];
            tr.replication = rep;
            tr.steps.push_back(s);
        } catch (const std::logic_error&) {
            throw std::runtime_error("trace CSV row " + std::to_string(row) + " is malformed");
        }
    }
    std::vector<RegretTrace> out;
    for (auto& [rep, tr] : by_rep) {
        tr.check_integrity();
        out.push_back(std::move(tr));
    }
    return out;
}

std::vector<AggregateRow> read_aggregate_csv(std::istream& in)
{
    std::string line;
    if (!next_data_line(in, line) || line != kAggregateHeader)
        throw std::runtime_error(std::string("aggregate CSV header must be ") + kAggregateHeader);
    std::vector<AggregateRow> rows;
    while (next_data_line(in, line)) {
        const auto c = split(line);
        if (c.size() != 5)
            throw std::runtime_error("aggregate CSV row does not have 5 columns");
        AggregateRow r;
        r.t = std::stoi(c[0]);
        r.mean_cum_pseudo = std::stod(c[1]);
        r.std_cum_pseudo = std::stod(c[2]);
        r.mean_cum_realized = std::stod(c[3]);
        r.std_cum_realized = std::stod(c[4]);
        rows.push_back(r);
    }
    return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg)
{
    cfg.validate();
    ExperimentResult result;
    std::ofstream trace_out;
    std::ofstream agg_out;
    if (!cfg.output_path.empty()) {
        // open before the run so an unwritable path fails fast
        result.trace_path = cfg.output_path;
        result.aggregate_path = aggregate_path_for(cfg.output_path);
        trace_out.open(result.trace_path);
        if (!trace_out)
            throw std::runtime_error("cannot write " + result.trace_path);
        agg_out.open(result.aggregate_path);
        if (!agg_out)
            throw std::runtime_error("cannot write " + result.aggregate_path);
    }

    result.traces = cfg.parallelism > 1 ? run_replications_parallel(cfg) : run_replications_serial(cfg);
    result.table = aggregate(result.traces);

    if (!cfg.output_path.empty()) {
        const auto meta = run_metadata(cfg);
        write_traces_csv(trace_out, result.traces, meta);
        write_aggregate_csv(agg_out, result.table, meta);
        if (!trace_out.flush() || !agg_out.flush())
            throw std::runtime_error("failed writing experiment output");
    }
    return result;
}

} // namespace npts
