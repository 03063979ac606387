#include "npts/conjugate.hpp"

#include "test_support.hpp"

#include <doctest.h>

using namespace npts;
using namespace npts::testing;

namespace {

NIGHyper standard_prior(int d)
{
    return NIGHyper::isotropic(d, 0.0, 1.0, 1.0, 1.0);
}

/// sum_i log p(y_i | x_i, posterior after observations 0..i-1)
double chained_log_predictive(const NIGHyper& prior, const Block& b)
{
    const int d = prior.dim();
    ComponentStats stats = ComponentStats::empty(d);
    double total = 0.0;
    for (Eigen::Index i = 0; i < b.ys.size(); ++i) {
        const Vector x = b.xs.col(i);
        total += log_predictive(posterior_update(prior, stats), x, b.ys(i));
        stats.add(x, b.ys(i));
    }
    return total;
}

bool rel_close(double a, double b, double tol)
{
    return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

void check_stats_close(const ComponentStats& a, const ComponentStats& b, double tol)
{
    CHECK(a.count == b.count);
    CHECK(rel_close(a.energy, b.energy, tol));
    for (int r = 0; r < a.dim(); ++r) {
        CHECK(rel_close(a.cross(r), b.cross(r), tol));
        for (int c = 0; c < a.dim(); ++c)
            CHECK(rel_close(a.gram(r, c), b.gram(r, c), tol));
    }
}

} // namespace

TEST_CASE("posterior_update with no data returns the prior")
{
    Rng rng(1);
    const NIGHyper prior = random_prior(3, rng);
    const NIGHyper post = posterior_update(prior, ComponentStats::empty(3));
    CHECK(post.alpha() == prior.alpha());
    CHECK(post.beta() == prior.beta());
    CHECK(post.u() == prior.u());
    CHECK(post.precision() == prior.precision());
}

TEST_CASE("posterior_update single observation by hand")
{
    // V^{-1} = I + diag(1, 0) = diag(2, 1); u = V (2, 0) = (1, 0);
    // beta = 1 + (4 + 0 - u^T V^{-1} u) / 2 = 1 + (4 - 2) / 2 = 2
    ComponentStats s = ComponentStats::empty(2);
    s.add(vec({1.0, 0.0}), 2.0);
    const NIGHyper post = posterior_update(standard_prior(2), s);
    const Matrix v = post.cov();
    CHECK(v(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(v(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(v(0, 1)) < 1e-15);
    CHECK(post.u()(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(post.u()(1)) < 1e-15);
    CHECK(post.alpha() == 1.5);
    CHECK(post.beta() == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("batch update equals the same data accumulated one at a time")
{
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 1 + trial % 3;
        const NIGHyper prior = random_prior(d, rng);
        const Block b = random_block(d, 1 + trial, rng);
        ComponentStats seq = ComponentStats::empty(d);
        for (Eigen::Index i = 0; i < b.ys.size(); ++i)
            seq.add(b.xs.col(i), b.ys(i));
        const NIGHyper a = posterior_update(prior, ComponentStats::from_batch(b.xs, b.ys));
        const NIGHyper c = posterior_update(prior, seq);
        CHECK(rel_close(a.alpha(), c.alpha(), 1e-12));
        CHECK(rel_close(a.beta(), c.beta(), 1e-10));
        for (int r = 0; r < d; ++r)
            CHECK(rel_close(a.u()(r), c.u()(r), 1e-10));
    }
}

TEST_CASE("posterior_update output is a valid NIG")
{
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const int d = 1 + trial % 3;
        const NIGHyper prior = random_prior(d, rng);
        const Block b = random_block(d, trial % 21, rng);
        const NIGHyper post = posterior_update(prior, ComponentStats::from_batch(b.xs, b.ys));
        CHECK(post.alpha() >= prior.alpha());
        CHECK(post.beta() > 0.0);
        Eigen::LLT<Matrix> llt(post.cov());
        CHECK(llt.info() == Eigen::Success);
        CHECK(post.precision().isApprox(post.precision().transpose()));
    }
}

TEST_CASE("posterior_update rejects corrupted statistics")
{
    ComponentStats s = ComponentStats::empty(2);
    s.add(vec({1.0, 1.0}), 1.0);
    s.gram(0, 0) = -5.0;
    CHECK_THROWS_AS(posterior_update(standard_prior(2), s), NumericalError);

    ComponentStats e = ComponentStats::empty(1);
    e.add(vec({1.0}), 3.0);
    e.energy = -100.0;
    CHECK_THROWS_AS(posterior_update(standard_prior(1), e), NumericalError);
}

TEST_CASE("NIGHyper construction validates its inputs")
{
    CHECK_THROWS_AS(NIGHyper::isotropic(2, 0.0, 1.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(NIGHyper::isotropic(2, 0.0, 1.0, 1.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(NIGHyper::isotropic(0, 0.0, 1.0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(NIGHyper::isotropic(kMaxContextDim + 1, 0.0, 1.0, 1.0, 1.0), std::invalid_argument);
    Matrix bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(NIGHyper::from_covariance(vec({0.0, 0.0}), bad, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("accumulate definition of sums")
{
    const ComponentStats s = accumulate(ComponentStats::empty(2), vec({1.0, 1.0}), 3.0, Direction::add);
    CHECK(s.count == 1);
    CHECK(s.gram(0, 0) == 1.0);
    CHECK(s.gram(0, 1) == 1.0);
    CHECK(s.gram(1, 0) == 1.0);
    CHECK(s.gram(1, 1) == 1.0);
    CHECK(s.cross(0) == 3.0);
    CHECK(s.cross(1) == 3.0);
    CHECK(s.energy == 9.0);
}

TEST_CASE("accumulate add then remove restores the statistics")
{
    Rng rng(4);
    const Block b = random_block(3, 6, rng);
    const ComponentStats base = ComponentStats::from_batch(b.xs, b.ys);
    const Vector x = random_vector(3, rng);
    const ComponentStats back = accumulate(accumulate(base, x, 0.7, Direction::add), x, 0.7, Direction::remove);
    CHECK(back.count == base.count);
    check_stats_close(back, base, 1e-12);
}

TEST_CASE("accumulate remove on empty statistics is an error")
{
    CHECK_THROWS_AS(accumulate(ComponentStats::empty(2), vec({1.0, 0.0}), 1.0, Direction::remove),
                    std::logic_error);
}

TEST_CASE("random adds match batch construction")
{
    Rng rng(5);
    const Block b = random_block(2, 10, rng);
    ComponentStats s = ComponentStats::empty(2);
    for (Eigen::Index i = 0; i < 10; ++i)
        s = accumulate(s, b.xs.col(i), b.ys(i), Direction::add);
    check_stats_close(s, ComponentStats::from_batch(b.xs, b.ys), 1e-12);
}

TEST_CASE("property: any add/remove interleaving ending at a multiset matches batch")
{
    Rng rng(6);
    for (int trial = 0; trial < 40; ++trial) {
        const int d = 1 + trial % 3;
        const int n = 3 + trial % 8;
        const Block b = random_block(d, n, rng);
        const Block junk = random_block(d, 5, rng);
        ComponentStats s = ComponentStats::empty(d);
        std::vector<int> pending_junk;
        std::bernoulli_distribution coin(0.4);
        for (int i = 0; i < n; ++i) {
            if (coin(rng)) {
                const int j = static_cast<int>(pending_junk.size()) % 5;
                s.add(junk.xs.col(j), junk.ys(j));
                pending_junk.push_back(j);
            }
            s.add(b.xs.col(i), b.ys(i));
            if (!pending_junk.empty() && coin(rng)) {
                const int j = pending_junk.back();
                pending_junk.pop_back();
                s.remove(junk.xs.col(j), junk.ys(j));
            }
        }
        while (!pending_junk.empty()) {
            const int j = pending_junk.back();
            pending_junk.pop_back();
            s.remove(junk.xs.col(j), junk.ys(j));
        }
        check_stats_close(s, ComponentStats::from_batch(b.xs, b.ys), 1e-10);
    }
}

TEST_CASE("sample_params moments match the NIG")
{
    Matrix cov(2, 2);
    cov << 1.0, 0.3, 0.3, 0.5;
    const NIGHyper h = NIGHyper::from_covariance(vec({1.0, -2.0}), cov, 3.0, 2.0);
    Rng rng(7);
    constexpr int n = 100000;
    std::vector<double> w0, w1, s2;
    w0.reserve(n);
    w1.reserve(n);
    s2.reserve(n);
    for (int i = 0; i < n; ++i) {
        const auto p = sample_params(h, rng);
        w0.push_back(p.w(0));
        w1.push_back(p.w(1));
        s2.push_back(p.sigma2);
    }
    const auto m0 = mean_se(w0);
    const auto m1 = mean_se(w1);
    const auto ms = mean_se(s2);
    CHECK(std::abs(m0.mean - 1.0) < 4.0 * m0.se);
    CHECK(std::abs(m1.mean + 2.0) < 4.0 * m1.se);
    // E[sigma2] = beta / (alpha - 1)
    CHECK(std::abs(ms.mean - 1.0) < 4.0 * ms.se);
}

TEST_CASE("sample_params concentrates at u for vanishing variance")
{
    const NIGHyper h = NIGHyper::from_covariance(vec({10.0, -3.0}), 1e-12 * Matrix::Identity(2, 2), 50.0, 1e-10);
    Rng rng(8);
    for (int i = 0; i < 100; ++i) {
        const auto p = sample_params(h, rng);
        CHECK(std::abs(p.w(0) - 10.0) < 1e-6);
        CHECK(std::abs(p.w(1) + 3.0) < 1e-6);
    }
}

TEST_CASE("predictive parameters by substitution")
{
    const StudentT t = predictive(standard_prior(2), vec({1.0, 1.0}));
    CHECK(t.dof == 2.0);
    CHECK(t.loc == 0.0);
    CHECK(t.scale2 == doctest::Approx(3.0).epsilon(1e-14));

    // nu = 2: p(y) = 1 / (2 sqrt(2) r) * (1 + y^2 / (2 r^2))^{-3/2}
    const double r = std::sqrt(3.0);
    for (double y : {-4.0, 0.0, 1.0, 2.5}) {
        const double expect = std::log(1.0 / (2.0 * std::sqrt(2.0) * r) * std::pow(1.0 + y * y / (2.0 * r * r), -1.5));
        CHECK(log_predictive(standard_prior(2), vec({1.0, 1.0}), y) == doctest::Approx(expect).epsilon(1e-12));
        CHECK(t.log_pdf(y) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("log_predictive integrates to one")
{
    Rng rng(9);
    for (int trial = 0; trial < 5; ++trial) {
        const NIGHyper h = random_prior(2, rng);
        const Vector x = random_vector(2, rng);
        const StudentT t = predictive(h, x);
        const double s = std::sqrt(t.scale2);
        // y = loc + s tan(theta) maps the real line onto (-pi/2, pi/2)
        auto integrand = [&](double theta) {
            const double c = std::cos(theta);
            if (c <= 0.0)
                return 0.0;
            return std::exp(log_predictive(h, x, t.loc + s * std::tan(theta))) * s / (c * c);
        };
        const double half = 0.5 * std::numbers::pi;
        CHECK(std::abs(simpson(integrand, -half, half, 200000) - 1.0) < 1e-6);
    }
}

TEST_CASE("log_predictive matches Monte Carlo marginalization")
{
    Rng rng(10);
    for (int trial = 0; trial < 3; ++trial) {
        const NIGHyper h = random_prior(2, rng);
        const Vector x = random_vector(2, rng);
        const double y = predictive(h, x).loc + 0.8;
        const NigDrawer draw(h);
        std::vector<double> dens;
        dens.reserve(100000);
        for (int i = 0; i < 100000; ++i) {
            const auto [w, s2] = draw(rng);
            dens.push_back(normal_pdf(y, x.dot(w), s2));
        }
        const auto mc = mean_se(dens);
        CHECK(std::abs(std::exp(log_predictive(h, x, y)) - mc.mean) < 3.0 * mc.se);
    }
}

TEST_CASE("log_marginal_block reductions")
{
    Rng rng(11);
    const NIGHyper h = random_prior(2, rng);
    CHECK(log_marginal_block(h, DataMatrix(2, 0), DataVector(0)) == 0.0);

    const Block one = random_block(2, 1, rng);
    CHECK(log_marginal_block(h, one.xs, one.ys)
          == doctest::Approx(log_predictive(h, one.xs.col(0), one.ys(0))).epsilon(1e-12));
}

TEST_CASE("log_marginal_block equals the chained predictive and the stats route")
{
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 1 + trial % 3;
        const int n = trial % 21;
        const NIGHyper prior = random_prior(d, rng);
        const Block b = random_block(d, n, rng);
        const double block = log_marginal_block(prior, b.xs, b.ys);
        CHECK(std::abs(block - chained_log_predictive(prior, b)) < 1e-8);
        CHECK(std::abs(block - log_evidence(prior, ComponentStats::from_batch(b.xs, b.ys))) < 1e-8);
    }
}
