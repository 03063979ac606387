#include "npts/environments.hpp"

#include "npts/sampling.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace npts {

using nlohmann::json;

namespace {

Vector vec2(double a, double b)
{
    Vector v(2);
    v << a, b;
    return v;
}

MixtureArmSpec unit_mixture(std::vector<double> weights, std::vector<double> diagonal_coeffs)
{
    MixtureArmSpec arm;
    arm.weights = std::move(weights);
    for (double c : diagonal_coeffs)
        arm.coefficients.push_back(vec2(c, c));
    arm.variances.assign(arm.weights.size(), 1.0);
    return arm;
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ','))
        cells.push_back(cell);
    if (!line.empty() && line.back() == ',')
        cells.emplace_back();
    return cells;
}

std::string strip(std::string s)
{
    const auto first = s.find_first_not_of(" \t\r");
    const auto last = s.find_last_not_of(" \t\r");
    return first == std::string::npos ? std::string{} : s.substr(first, last - first + 1);
}

double parse_double(const std::string& cell, std::size_t line_no)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != cell.size() || !std::isfinite(v))
        throw std::runtime_error("line " + std::to_string(line_no) + ": not a finite number: '" + cell + "'");
    return v;
}

// Reads a header line (skipping blank and '#' lines) and returns its cells.
bool next_data_line(std::istream& in, std::string& line, std::size_t& line_no)
{
    while (std::getline(in, line)) {
        ++line_no;
        line = strip(line);
        if (line.empty() || line.front() == '#')
            continue;
        return true;
    }
    return false;
}

std::size_t count_context_columns(const std::vector<std::string>& header)
{
    std::size_t d = 0;
    while (d < header.size() && strip(header[d]) == "context_" + std::to_string(d))
        ++d;
    return d;
}

} // namespace

void MixtureArmSpec::validate(int dim) const
{
    if (weights.empty())
        throw std::invalid_argument("arm needs at least one mixture component");
    if (coefficients.size() != weights.size() || variances.size() != weights.size())
        throw std::invalid_argument("arm weights, coefficients and variances must have equal lengths");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0))
            throw std::invalid_argument("mixture weights must be nonnegative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("mixture weights must sum to 1");
    for (const auto& c : coefficients)
        if (c.size() != dim)
            throw std::invalid_argument("coefficient vector length differs from context_dim");
    for (double v : variances)
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument("mixture variances must be positive");
}

std::string_view to_string(ContextSource source)
{
    switch (source) {
    case ContextSource::uniform01:
        return "uniform01";
    case ContextSource::standard_normal:
        return "standard_normal";
    case ContextSource::file:
        return "file";
    }
    return "uniform01";
}

ContextSource context_source_from_string(std::string_view name)
{
    if (name == "uniform01")
        return ContextSource::uniform01;
    if (name == "standard_normal")
        return ContextSource::standard_normal;
    if (name == "file")
        return ContextSource::file;
    throw std::invalid_argument("unknown context_source '" + std::string(name)
                                + "' (valid: uniform01, standard_normal, file)");
}

void ScenarioSpec::validate() const
{
    if (context_dim < 1)
        throw std::invalid_argument("context_dim must be at least 1");
    if (arms.empty())
        throw std::invalid_argument("scenario needs at least one arm");
    for (const auto& a : arms)
        a.validate(context_dim);
    if (context_source == ContextSource::file) {
        if (context_pool.empty())
            throw std::invalid_argument("file context source has no contexts loaded");
        for (const auto& x : context_pool)
            if (x.size() != context_dim)
                throw std::invalid_argument("context file dimension differs from context_dim");
    }
}

const std::vector<std::string>& builtin_scenario_names()
{
    static const std::vector<std::string> names{"A", "B", "C", "linear_gaussian", "C_misspec_pair"};
    return names;
}

ScenarioSpec builtin_scenario(std::string_view name)
{
    ScenarioSpec s;
    s.context_dim = 2;
    s.context_source = ContextSource::uniform01;
    if (name == "A") {
        s.arms.push_back(unit_mixture({0.5, 0.5}, {1.0, 2.0}));
        s.arms.push_back(unit_mixture({0.3, 0.7}, {0.0, 3.0}));
    } else if (name == "B") {
        s.arms.push_back(unit_mixture({1.0}, {1.0}));
        s.arms.push_back(unit_mixture({0.5, 0.5}, {1.0, 2.0}));
        s.arms.push_back(unit_mixture({0.3, 0.6, 0.1}, {0.0, 3.0, 4.0}));
    } else if (name == "C" || name == "C_misspec_pair") {
        // heavy tails: a unit-variance bulk plus a variance-10 outlier component
        for (double c : {0.0, 2.0}) {
            MixtureArmSpec arm;
            arm.weights = {0.75, 0.25};
            arm.coefficients = {vec2(c, c), vec2(c, c)};
            arm.variances = {1.0, 10.0};
            s.arms.push_back(std::move(arm));
        }
    } else if (name == "linear_gaussian") {
        s.arms.push_back(unit_mixture({1.0}, {1.0}));
        s.arms.push_back(unit_mixture({1.0}, {2.0}));
    } else {
        std::string valid;
        for (const auto& n : builtin_scenario_names())
            valid += (valid.empty() ? "" : ", ") + n;
        throw std::invalid_argument("unknown scenario '" + std::string(name) + "' (valid: " + valid + ")");
    }
    return s;
}

std::string scenario_to_json(const ScenarioSpec& spec)
{
    json j;
    j["context_dim"] = spec.context_dim;
    j["context_source"] = std::string(to_string(spec.context_source));
    if (spec.context_source == ContextSource::file)
        j["context_file"] = spec.context_file;
    json arms = json::array();
    for (const auto& a : spec.arms) {
        json coeffs = json::array();
        for (const auto& c : a.coefficients)
            coeffs.push_back(std::vector<double>(c.begin(), c.end()));
        arms.push_back({{"weights", a.weights}, {"coefficients", coeffs}, {"variances", a.variances}});
    }
    j["arms"] = arms;
    return j.dump(2);
}

ScenarioSpec scenario_from_json(std::string_view text, const std::string& base_dir)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("scenario JSON: ") + e.what());
    }
    ScenarioSpec s;
    try {
        s.context_dim = j.at("context_dim").get<int>();
        s.context_source = context_source_from_string(j.value("context_source", std::string("uniform01")));
        for (const auto& ja : j.at("arms")) {
            MixtureArmSpec a;
            a.weights = ja.at("weights").get<std::vector<double>>();
            a.variances = ja.at("variances").get<std::vector<double>>();
            for (const auto& jc : ja.at("coefficients")) {
                const auto c = jc.get<std::vector<double>>();
                a.coefficients.push_back(Eigen::Map<const Vector>(c.data(), static_cast<Eigen::Index>(c.size())));
            }
            s.arms.push_back(std::move(a));
        }
        if (s.context_source == ContextSource::file) {
            s.context_file = j.at("context_file").get<std::string>();
            std::filesystem::path p(s.context_file);
            if (p.is_relative() && !base_dir.empty())
                p = std::filesystem::path(base_dir) / p;
            std::ifstream in(p);
            if (!in)
                throw std::runtime_error("cannot open context file " + p.string());
            s.context_pool = read_context_csv(in);
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("scenario JSON: ") + e.what());
    }
    s.validate();
    return s;
}

ScenarioSpec load_scenario_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open scenario file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return scenario_from_json(buf.str(), std::filesystem::path(path).parent_path().string());
}

std::vector<Vector> read_context_csv(std::istream& in)
{
    std::string line;
    std::size_t line_no = 0;
    if (!next_data_line(in, line, line_no))
        throw std::runtime_error("context file is empty");
    const auto header = split_csv_line(line);
    const std::size_t d = count_context_columns(header);
    if (d == 0 || d != header.size())
        throw std::runtime_error("context file header must be context_0,...,context_{d-1}");
    std::vector<Vector> out;
    while (next_data_line(in, line, line_no)) {
        const auto cells = split_csv_line(line);
        if (cells.size() != d)
            throw std::runtime_error("line " + std::to_string(line_no) + ": expected " + std::to_string(d)
                                     + " columns");
        Vector x(static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i)
            x(static_cast<Eigen::Index>(i)) = parse_double(strip(cells[i]), line_no);
        out.push_back(std::move(x));
    }
    return out;
}

double true_expected_reward(const ScenarioSpec& spec, std::size_t arm, const Vector& x)
{
    const auto& a = spec.arms.at(arm);
    double mu = 0.0;
    for (std::size_t k = 0; k < a.num_components(); ++k)
        mu += a.weights[k] * x.dot(a.coefficients[k]);
    return mu;
}

StepSample sample_step(const ScenarioSpec& spec, Rng& rng)
{
    StepSample s;
    s.x.resize(spec.context_dim);
    switch (spec.context_source) {
    case ContextSource::uniform01: {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (auto& v : s.x)
            v = unif(rng);
        break;
    }
    case ContextSource::standard_normal: {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (auto& v : s.x)
            v = normal(rng);
        break;
    }
    case ContextSource::file: {
        std::uniform_int_distribution<std::size_t> pick(0, spec.context_pool.size() - 1);
        s.x = spec.context_pool[pick(rng)];
        break;
    }
    }

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    s.rewards.resize(spec.num_arms());
    s.expected.resize(spec.num_arms());
    for (std::size_t a = 0; a < spec.num_arms(); ++a) {
        const auto& arm = spec.arms[a];
        double u = unif(rng);
        std::size_t k = 0;
        while (k + 1 < arm.num_components() && u >= arm.weights[k]) {
            u -= arm.weights[k];
            ++k;
        }
        s.rewards[a] = s.x.dot(arm.coefficients[k]) + std::sqrt(arm.variances[k]) * normal(rng);
        s.expected[a] = true_expected_reward(spec, a, s.x);
        if (s.expected[a] > s.expected[s.optimal_arm])
            s.optimal_arm = a;
    }
    return s;
}

void LoggedDataset::validate() const
{
    if (context_dim < 1)
        throw std::invalid_argument("logged data needs at least one context column");
    for (const auto& e : events) {
        if (e.context.size() != context_dim)
            throw std::invalid_argument("logged context dimension mismatch");
        if (e.logged_arm >= num_arms)
            throw std::invalid_argument("logged arm index exceeds the declared arm count");
    }
}

LoggedDataset read_logged_csv(std::istream& in, std::optional<std::size_t> declared_arms)
{
    std::string line;
    std::size_t line_no = 0;
    if (!next_data_line(in, line, line_no))
        throw std::runtime_error("logged data file is empty");
    const auto header = split_csv_line(line);
    const std::size_t d = count_context_columns(header);
    if (d == 0 || header.size() != d + 2 || strip(header[d]) != "arm" || strip(header[d + 1]) != "reward")
        throw std::runtime_error("logged data header must be context_0,...,context_{d-1},arm,reward");

    LoggedDataset data;
    data.context_dim = static_cast<int>(d);
    std::size_t max_arm = 0;
    while (next_data_line(in, line, line_no)) {
        const auto cells = split_csv_line(line);
        if (cells.size() != d + 2)
            throw std::runtime_error("line " + std::to_string(line_no) + ": expected " + std::to_string(d + 2)
                                     + " columns");
        LoggedEvent e;
        e.context.resize(static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i)
            e.context(static_cast<Eigen::Index>(i)) = parse_double(strip(cells[i]), line_no);
        const double arm = parse_double(strip(cells[d]), line_no);
        if (arm < 0.0 || arm != std::floor(arm))
            throw std::runtime_error("line " + std::to_string(line_no) + ": arm must be a nonnegative integer");
        e.logged_arm = static_cast<std::size_t>(arm);
        e.reward = parse_double(strip(cells[d + 1]), line_no);
        max_arm = std::max(max_arm, e.logged_arm);
        data.events.push_back(std::move(e));
    }
    data.num_arms = declared_arms ? *declared_arms : (data.events.empty() ? 0 : max_arm + 1);
    data.validate();
    return data;
}

LoggedDataset load_logged_csv(const std::string& path, std::optional<std::size_t> declared_arms)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open logged data file " + path);
    return read_logged_csv(in, declared_arms);
}

void write_logged_csv(std::ostream& out, const LoggedDataset& data)
{
    for (int i = 0; i < data.context_dim; ++i)
        out << "context_" << i << ',';
    out << "arm,reward\n";
    out.precision(17);
    for (const auto& e : data.events) {
        for (auto v : e.context)
            out << v << ',';
        out << e.logged_arm << ',' << e.reward << '\n';
    }
}

ReplayResult replay(const LoggedDataset& data, Policy& policy, Rng& rng)
{
    if (policy.dim() != data.context_dim)
        throw std::invalid_argument("policy context dimension differs from logged data");
    if (policy.num_arms() != data.num_arms)
        throw std::invalid_argument("policy arm count differs from logged data");
    ReplayResult r;
    for (const auto& e : data.events) {
        ++r.total_events;
        const Decision d = policy.select_arm(e.context, rng);
        if (d.arm != e.logged_arm)
            continue;
        ++r.accepted_count;
        r.click_sum += e.reward;
        policy.update(d.arm, e.context, e.reward, rng);
    }
    if (r.accepted_count > 0)
        r.ctr = r.click_sum / static_cast<double>(r.accepted_count);
    return r;
}

} // namespace npts
