#include "npts/environments.hpp"
#include "npts/sampling.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <sstream>

using namespace npts;
using namespace npts::testing;

namespace {

/// Uniform logger over `arms` arms, Bernoulli rewards with the given means.
LoggedDataset uniform_log(const std::vector<double>& means, int n, Rng& rng)
{
    LoggedDataset d;
    d.context_dim = 2;
    d.num_arms = means.size();
    std::uniform_int_distribution<std::size_t> pick(0, means.size() - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        const std::size_t a = pick(rng);
        d.events.push_back({vec({u(rng), u(rng)}), a, u(rng) < means[a] ? 1.0 : 0.0});
    }
    return d;
}

} // namespace

TEST_CASE("built-in scenarios match their definitions")
{
    const auto a = builtin_scenario("A");
    CHECK(a.num_arms() == 2);
    CHECK(a.arms[1].weights == std::vector<double>{0.3, 0.7});
    CHECK(a.arms[0].weights == std::vector<double>{0.5, 0.5});
    CHECK(a.arms[1].coefficients[1] == vec({3.0, 3.0}));

    const auto b = builtin_scenario("B");
    CHECK(b.num_arms() == 3);
    CHECK(b.arms[0].num_components() == 1);
    CHECK(b.arms[1].num_components() == 2);
    REQUIRE(b.arms[2].num_components() == 3);
    CHECK(b.arms[2].weights == std::vector<double>{0.3, 0.6, 0.1});

    const auto c = builtin_scenario("C");
    CHECK(c.num_arms() == 2);
    CHECK(c.arms[0].variances == std::vector<double>{1.0, 10.0});
    CHECK(c.arms[1].coefficients[0] == vec({2.0, 2.0}));

    for (const auto& name : builtin_scenario_names()) {
        const auto s = builtin_scenario(name);
        CHECK_NOTHROW(s.validate());
        CHECK(s.context_source == ContextSource::uniform01);
        CHECK(s.context_dim == 2);
    }
}

TEST_CASE("unknown scenario names list the valid options")
{
    try {
        builtin_scenario("Z");
        FAIL("expected an exception");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        for (const auto& name : builtin_scenario_names())
            CHECK(msg.find(name) != std::string::npos);
    }
}

TEST_CASE("true expected reward by substitution")
{
    const auto a = builtin_scenario("A");
    CHECK(true_expected_reward(a, 1, vec({1.0, 1.0})) == doctest::Approx(4.2).epsilon(1e-14));
    CHECK(true_expected_reward(a, 0, vec({1.0, 1.0})) == doctest::Approx(3.0).epsilon(1e-14));
    for (const auto& name : {"A", "B", "C"}) {
        const auto s = builtin_scenario(name);
        for (std::size_t arm = 0; arm < s.num_arms(); ++arm)
            CHECK(true_expected_reward(s, arm, vec({0.0, 0.0})) == 0.0);
    }
}

TEST_CASE("expected reward is linear in the context")
{
    Rng rng(1);
    for (const auto& name : builtin_scenario_names()) {
        const auto s = builtin_scenario(name);
        for (int trial = 0; trial < 20; ++trial) {
            const Vector x1 = random_vector(2, rng);
            const Vector x2 = random_vector(2, rng);
            const double a = 1.7;
            const double b = -0.4;
            for (std::size_t arm = 0; arm < s.num_arms(); ++arm) {
                const double lhs = true_expected_reward(s, arm, a * x1 + b * x2);
                const double rhs = a * true_expected_reward(s, arm, x1) + b * true_expected_reward(s, arm, x2);
                CHECK(std::abs(lhs - rhs) < 1e-12);
            }
        }
    }
}

TEST_CASE("scenario A: arm 1 is optimal for every uniform context")
{
    const auto a = builtin_scenario("A");
    Rng rng(2);
    for (int i = 0; i < 2000; ++i) {
        const auto step = sample_step(a, rng);
        CHECK(step.optimal_arm == 1);
        CHECK(step.x(0) >= 0.0);
        CHECK(step.x(0) < 1.0);
        CHECK(step.rewards.size() == 2);
    }
}

TEST_CASE("sampled rewards have the true mean; scenario C is heavy tailed")
{
    const Vector x = vec({0.6, 0.8});
    for (const auto& name : {"A", "B", "C"}) {
        const auto s = builtin_scenario(name);
        for (std::size_t arm = 0; arm < s.num_arms(); ++arm) {
            Rng rng(3 + arm);
            std::vector<double> ys;
            ys.reserve(100000);
            for (int i = 0; i < 100000; ++i) {
                // sample_step draws its own context; draw the reward at a fixed x directly
                const auto& spec = s.arms[arm];
                std::discrete_distribution<std::size_t> comp(spec.weights.begin(), spec.weights.end());
                const std::size_t k = comp(rng);
                std::normal_distribution<double> n(x.dot(spec.coefficients[k]), std::sqrt(spec.variances[k]));
                ys.push_back(n(rng));
            }
            const auto ms = mean_se(ys);
            CHECK(std::abs(ms.mean - true_expected_reward(s, arm, x)) < 4 * ms.se);
        }
    }

    // through sample_step itself: a file pool with a single context fixes x
    ScenarioSpec c = builtin_scenario("C");
    c.context_source = ContextSource::file;
    c.context_file = "pool.csv";
    c.context_pool = {x};
    Rng rng(9);
    std::vector<double> ys;
    for (int i = 0; i < 100000; ++i)
        ys.push_back(sample_step(c, rng).rewards[1]);
    const auto ms = mean_se(ys);
    CHECK(std::abs(ms.mean - true_expected_reward(c, 1, x)) < 4 * ms.se);
    double m2 = 0.0;
    double m4 = 0.0;
    for (double y : ys) {
        const double d = y - ms.mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(ys.size());
    m4 /= static_cast<double>(ys.size());
    // 0.75 N(., 1) + 0.25 N(., 10): excess kurtosis 3 * 25.75 / 3.25^2 - 3 ~ 4.31
    CHECK(m4 / (m2 * m2) - 3.0 > 0.0);
}

TEST_CASE("sample_step is deterministic for a fixed seed")
{
    const auto b = builtin_scenario("B");
    Rng r1 = make_stream(5, 2);
    Rng r2 = make_stream(5, 2);
    for (int i = 0; i < 100; ++i) {
        const auto s1 = sample_step(b, r1);
        const auto s2 = sample_step(b, r2);
        CHECK(s1.x == s2.x);
        CHECK(s1.rewards == s2.rewards);
        CHECK(s1.optimal_arm == s2.optimal_arm);
    }
}

TEST_CASE("standard-normal contexts")
{
    ScenarioSpec s = builtin_scenario("A");
    s.context_source = ContextSource::standard_normal;
    Rng rng(6);
    std::vector<double> xs;
    for (int i = 0; i < 20000; ++i)
        xs.push_back(sample_step(s, rng).x(1));
    const auto ms = mean_se(xs);
    CHECK(std::abs(ms.mean) < 4 * ms.se);
    CHECK(ms.se * std::sqrt(20000.0) == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("scenario JSON round-trips bit-exactly")
{
    for (const auto& name : builtin_scenario_names()) {
        const auto s = builtin_scenario(name);
        const std::string text = scenario_to_json(s);
        const auto back = scenario_from_json(text);
        CHECK(scenario_to_json(back) == text);
        REQUIRE(back.num_arms() == s.num_arms());
        for (std::size_t a = 0; a < s.num_arms(); ++a) {
            CHECK(back.arms[a].weights == s.arms[a].weights);
            CHECK(back.arms[a].variances == s.arms[a].variances);
            for (std::size_t k = 0; k < s.arms[a].num_components(); ++k)
                CHECK(back.arms[a].coefficients[k] == s.arms[a].coefficients[k]);
        }
    }
    // awkward doubles survive as well
    ScenarioSpec s = builtin_scenario("A");
    s.arms[0].coefficients[0] = vec({0.1 + 0.2, 1.0 / 3.0});
    s.arms[0].weights = {1.0 / 3.0, 2.0 / 3.0};
    const auto back = scenario_from_json(scenario_to_json(s));
    CHECK(back.arms[0].coefficients[0] == s.arms[0].coefficients[0]);
    CHECK(back.arms[0].weights == s.arms[0].weights);
}

TEST_CASE("scenario validation")
{
    CHECK_THROWS_AS(scenario_from_json("{not json"), std::invalid_argument);
    CHECK_THROWS_AS(scenario_from_json(R"({"context_dim":2,"arms":[{"weights":[0.5,0.4],)"
                                       R"("coefficients":[[1,1],[2,2]],"variances":[1,1]}]})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(scenario_from_json(R"({"context_dim":2,"arms":[{"weights":[1],)"
                                       R"("coefficients":[[1,1,1]],"variances":[1]}]})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(scenario_from_json(R"({"context_dim":2,"arms":[{"weights":[1],)"
                                       R"("coefficients":[[1,1]],"variances":[0]}]})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(scenario_from_json(R"({"context_dim":2,"arms":[]})"), std::invalid_argument);
    const auto ok = scenario_from_json(R"({"context_dim":1,"context_source":"standard_normal","arms":)"
                                       R"([{"weights":[1],"coefficients":[[2]],"variances":[0.5]}]})");
    CHECK(ok.context_dim == 1);
    CHECK(ok.context_source == ContextSource::standard_normal);
}

TEST_CASE("context CSV")
{
    std::istringstream in("context_0,context_1\n0.5,1.5\n# comment\n-1,2\n");
    const auto pool = read_context_csv(in);
    REQUIRE(pool.size() == 2);
    CHECK(pool[1] == vec({-1.0, 2.0}));
    std::istringstream bad("context_0,context_1\n0.5\n");
    CHECK_THROWS(read_context_csv(bad));
}

TEST_CASE("replay: single-arm log accepts everything")
{
    Rng rng(7);
    const auto data = uniform_log({0.3}, 500, rng);
    auto p = make_policy(NonparametricTS{}, 1, 2);
    const auto r = replay(data, *p, rng);
    CHECK(r.total_events == 500);
    CHECK(r.accepted_count == 500);
    double sum = 0.0;
    for (const auto& e : data.events)
        sum += e.reward;
    REQUIRE(r.ctr.has_value());
    CHECK(*r.ctr == doctest::Approx(sum / 500).epsilon(1e-14));
}

TEST_CASE("replay: uniform policy accepts about 1/A of a uniform log")
{
    Rng rng(8);
    const auto data = uniform_log({0.1, 0.2, 0.3, 0.4}, 10000, rng);
    auto p = make_policy(UniformRandom{}, 4, 2);
    const auto r = replay(data, *p, rng);
    const double f = static_cast<double>(r.accepted_count) / 10000.0;
    CHECK(std::abs(f - 0.25) < 4 * std::sqrt(0.25 * 0.75 / 10000.0));
}

TEST_CASE("replay: fixed-arm CTR is unbiased for the arm's mean")
{
    const std::vector<double> means{0.1, 0.35, 0.6};
    for (std::size_t arm = 0; arm < 3; ++arm) {
        Rng rng(10 + arm);
        const auto data = uniform_log(means, 30000, rng);
        auto p = make_policy(FixedArm{arm}, 3, 2);
        const auto r = replay(data, *p, rng);
        REQUIRE(r.ctr.has_value());
        const double se = std::sqrt(means[arm] * (1 - means[arm]) / static_cast<double>(r.accepted_count));
        CHECK(std::abs(*r.ctr - means[arm]) < 4 * se);
    }
}

TEST_CASE("replay: no accepted events leaves ctr absent")
{
    LoggedDataset d;
    d.context_dim = 2;
    d.num_arms = 2;
    for (int i = 0; i < 10; ++i)
        d.events.push_back({vec({0.1, 0.2}), 1, 1.0});
    auto p = make_policy(FixedArm{0}, 2, 2);
    Rng rng(13);
    const auto r = replay(d, *p, rng);
    CHECK(r.accepted_count == 0);
    CHECK_FALSE(r.ctr.has_value());

    LoggedDataset empty;
    empty.context_dim = 2;
    empty.num_arms = 2;
    CHECK_FALSE(replay(empty, *p, rng).ctr.has_value());
}

TEST_CASE("replay only updates the policy on accepted events")
{
    LoggedDataset d;
    d.context_dim = 2;
    d.num_arms = 2;
    for (int i = 0; i < 40; ++i)
        d.events.push_back({vec({0.5, 0.5}), static_cast<std::size_t>(i % 2), 1.0});
    LinearGaussianPolicy p(LinearGaussianTS{}, 2, 2);
    Rng rng(14);
    const auto r = replay(d, p, rng);
    CHECK(static_cast<std::size_t>(p.stats(0).count + p.stats(1).count) == r.accepted_count);
}

TEST_CASE("logged CSV round trip and parse errors")
{
    Rng rng(15);
    const auto data = uniform_log({0.2, 0.7}, 50, rng);
    std::stringstream buf;
    write_logged_csv(buf, data);
    const auto back = read_logged_csv(buf);
    CHECK(back.context_dim == 2);
    CHECK(back.num_arms == 2);
    REQUIRE(back.events.size() == 50);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(back.events[i].context == data.events[i].context);
        CHECK(back.events[i].logged_arm == data.events[i].logged_arm);
        CHECK(back.events[i].reward == data.events[i].reward);
    }

    auto parse = [](const std::string& text, std::optional<std::size_t> arms = std::nullopt) {
        std::istringstream in(text);
        return read_logged_csv(in, arms);
    };
    CHECK(parse("context_0,arm,reward\n1.0,0,1\n1.0,3,0\n").num_arms == 4);
    CHECK(parse("context_0,arm,reward\n1.0,0,1\n", 5).num_arms == 5);
    CHECK_THROWS(parse(""));
    CHECK_THROWS(parse("x,arm,reward\n1,0,1\n"));
    CHECK_THROWS(parse("context_0,reward,arm\n1,0,1\n"));
    CHECK_THROWS(parse("context_0,arm,reward\n1,0\n"));
    CHECK_THROWS(parse("context_0,arm,reward\nabc,0,1\n"));
    CHECK_THROWS(parse("context_0,arm,reward\n1,-1,1\n"));
    CHECK_THROWS(parse("context_0,arm,reward\n1,0.5,1\n"));
    CHECK_THROWS(parse("context_0,arm,reward\n1,nan,1\n"));
    CHECK_THROWS_AS(parse("context_0,arm,reward\n1,3,1\n", 2), std::invalid_argument);
}
