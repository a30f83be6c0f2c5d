#include "affectrep/error.hpp"
#include "affectrep/metrics.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace affectrep;

namespace {

std::vector<double> draw(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = nd(rng);
    return v;
}

}  // namespace

TEST_CASE("ccc hand cases") {
    const std::vector<double> x{1, 2, 3};
    CHECK(ccc(x, x) == 1.0);
    CHECK(ccc(x, std::vector<double>{3, 2, 1}) == -1.0);
    CHECK(ccc(x, std::vector<double>{2, 3, 4}) == 4.0 / 7.0);
    CHECK(ccc(std::vector<double>{2, 2, 2}, std::vector<double>{2, 2, 2}) == 0.0);
    CHECK_THROWS_AS(ccc(x, std::vector<double>{1, 2}), Error);
    CHECK_THROWS_AS(ccc(std::vector<double>{1}, std::vector<double>{1}), Error);
}

TEST_CASE("ccc_loss") {
    const std::vector<double> x{1, 2, 3};
    CHECK(ccc_loss(x, x) == 0.0);
    CHECK(ccc_loss(x, std::vector<double>{3, 2, 1}) == 2.0);
    CHECK(ccc_loss(std::vector<double>{0.5, 0.5, 0.5}, x) == 1.0);
}

TEST_CASE("ccc of a constant prediction against a varying target is zero") {
    // Covariance vanishes, the denominator does not.
    CHECK(ccc(std::vector<double>{0.5, 0.5, 0.5}, std::vector<double>{1, 2, 3}) == 0.0);
    CHECK(ccc_loss(std::vector<double>{0.5, 0.5, 0.5}, std::vector<double>{1, 2, 3}) == 1.0);
}

TEST_CASE("sda hand cases") {
    const std::vector<double> x{1, 2, 3};
    CHECK(sda(x, x) == 1.0);
    CHECK(sda(x, std::vector<double>{3, 2, 1}) == -1.0);
    CHECK(sda(std::vector<double>{0, 1, 1}, std::vector<double>{0, 2, 3}) == 0.0);
    CHECK(sda(std::vector<double>{4, 4, 4}, std::vector<double>{1, 1, 1}) == 1.0);
    CHECK_THROWS_AS(sda(x, std::vector<double>{1}), Error);
}

TEST_CASE("metric properties on random instances") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 30);
        const auto x = draw(rng, n);
        auto y = draw(rng, n);
        for (std::size_t i = 0; i < n; ++i) y[i] += 0.5 * x[i];

        CHECK(std::abs(ccc(x, y) - ccc(y, x)) < 1e-15);
        const double a = u(rng), b = 2.0 * u(rng) - 3.0;
        std::vector<double> ax(n), ay(n);
        for (std::size_t i = 0; i < n; ++i) {
            ax[i] = a * x[i] + b;
            ay[i] = a * y[i] + b;
        }
        CHECK(std::abs(ccc(ax, ay) - ccc(x, y)) < 1e-10);
        CHECK(std::abs(ccc(x, y)) <= std::abs(pearson(x, y)) + 1e-15);
        CHECK(std::abs(pearson(x, y)) <= 1.0 + 1e-15);

        // Strictly increasing transforms keep every difference sign.
        std::vector<double> ex(n), cy(n), neg(n);
        for (std::size_t i = 0; i < n; ++i) {
            ex[i] = std::exp(x[i]);
            cy[i] = y[i] * y[i] * y[i] + y[i];
            neg[i] = -x[i];
        }
        CHECK(sda(ex, cy) == sda(x, y));
        CHECK(sda(ex, y) == sda(x, y));
        CHECK(sda(x, neg) == -1.0);
    }
}

TEST_CASE("ccc and sda match the direct-summation oracles") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> len(2, 12);
    std::uniform_int_distribution<int> level(-2, 2);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = static_cast<std::size_t>(len(rng));
        auto x = draw(rng, n);
        auto y = draw(rng, n);
        if (trial % 4 == 0) {
            // Integer-valued signals exercise zero differences.
            for (auto& v : x) v = level(rng);
            for (auto& v : y) v = level(rng);
        }
        CHECK(std::abs(ccc(x, y) - oracle::ccc(x, y)) < 1e-12);
        CHECK(std::abs(sda(x, y) - oracle::sda(x, y)) < 1e-12);
    }
}

TEST_CASE("report and fold aggregation") {
    const std::vector<double> mu{0.1, 0.4, 0.2, 0.5}, sigma{0.3, 0.2, 0.25, 0.1};
    const auto r = report(mu, sigma, mu, sigma);
    CHECK(r.ccc_mu == 1.0);
    CHECK(r.ccc_sigma == 1.0);
    CHECK(r.sda_mu == 1.0);
    CHECK(r.sda_sigma == 1.0);
    CHECK_THROWS_AS(report(mu, sigma, mu, std::vector<double>{1, 2}), Error);

    const std::vector<MetricReport> same(5, MetricReport{0.7, 0.2, 0.4, 0.1});
    const auto agg = aggregate(same);
    CHECK(agg.folds == 5);
    CHECK(agg.ccc_mu.mean == doctest::Approx(0.7));
    CHECK(agg.ccc_mu.std == doctest::Approx(0.0));
    CHECK(agg.sda_sigma.std == doctest::Approx(0.0));

    const std::vector<MetricReport> two{{0.0, 0, 0, 0}, {1.0, 0, 0, 0}};
    CHECK(aggregate(two).ccc_mu.std == doctest::Approx(0.5));

    const auto parsed = metric_report_from_key_value(to_key_value(r));
    CHECK(parsed.ccc_mu == r.ccc_mu);
    CHECK(parsed.sda_sigma == r.sda_sigma);
    CHECK_THROWS_AS(metric_report_from_key_value("ccc_mu=1\n"), Error);
}

TEST_CASE("score_sequences: concatenated CCC, per-sequence SDA") {
    const std::vector<std::vector<double>> pred{{1, 2, 3}, {3, 2, 1}};
    const std::vector<std::vector<double>> truth{{1, 2, 3}, {1, 2, 3}};
    const auto s = score_sequences(pred, truth);
    CHECK(s.sda == doctest::Approx(0.0));
    std::vector<double> cp{1, 2, 3, 3, 2, 1}, ct{1, 2, 3, 1, 2, 3};
    CHECK(s.ccc == doctest::Approx(ccc(cp, ct)));
    CHECK_THROWS_AS(score_sequences({}, {}), Error);
}
