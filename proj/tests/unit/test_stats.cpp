#include "psygauge/error.hpp"
#include "psygauge/stats.hpp"

#include "oracle.hpp"
#include "support.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace psygauge;
using psygauge::stats::CorrelationMethod;

namespace oracle {

double t_two_sided(double t, double df) {
    boost::math::students_t dist(df);
    return 2 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

} // namespace oracle

namespace {

std::vector<double> draw(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> g(0, 1);
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

std::vector<double> draw_ties(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<int> u(0, 4);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

} // namespace

TEST_CASE("incomplete beta and t distribution against boost") {
    CHECK(stats::regularized_incomplete_beta(2.5, 0.5, 0.3) == doctest::Approx(0.018927124071945658).epsilon(1e-12));
    CHECK(stats::regularized_incomplete_beta(10, 3, 0.9) == doctest::Approx(0.889130022255).epsilon(1e-11));
    CHECK(stats::regularized_incomplete_beta(2, 3, 0.0) == 0.0);
    CHECK(stats::regularized_incomplete_beta(2, 3, 1.0) == 1.0);

    for (double df : {1.0, 2.0, 3.5, 6.0, 10.0, 29.0, 87.0}) {
        for (double t : {-8.0, -2.5, -1.0, -0.1, 0.0, 0.3, 1.7, 4.0, 12.0}) {
            boost::math::students_t dist(df);
            CHECK(stats::student_t_cdf(t, df) == doctest::Approx(boost::math::cdf(dist, t)).epsilon(1e-12));
            CHECK(std::abs(stats::student_t_two_sided_p(t, df) - oracle::t_two_sided(t, df)) < 1e-12);
        }
    }
    CHECK(stats::student_t_cdf(-1.5, 3.5) == doctest::Approx(0.10890909350767256).epsilon(1e-12));
}

TEST_CASE("p-values reproduce printed t-table critical values") {
    CHECK(std::abs(stats::student_t_two_sided_p(4.303, 2) - 0.05) < 1e-3);
    CHECK(std::abs(stats::student_t_two_sided_p(2.920, 2) - 0.10) < 1e-3);
    CHECK(std::abs(stats::student_t_two_sided_p(2.228, 10) - 0.05) < 1e-3);
    CHECK(std::abs(stats::student_t_two_sided_p(12.706, 1) - 0.05) < 1e-3);
    CHECK(std::abs(stats::student_t_two_sided_p(2.045, 29) - 0.05) < 1e-3);
}

TEST_CASE("average ranks share ties") {
    const std::vector<double> x{10, 20, 20, 5, 20};
    const auto r = stats::average_ranks(x);
    CHECK(r == std::vector<double>{2, 4, 4, 1, 4});
}

TEST_CASE("correlations match brute-force oracles on random instances") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 3 + rep % 8;
        const auto x = rep % 3 == 0 ? draw_ties(rng, n) : draw(rng, n);
        const auto y = rep % 5 == 0 ? draw_ties(rng, n) : draw(rng, n);
        if (oracle::var(x) == 0 || oracle::var(y) == 0) continue;
        const auto p = stats::correlate(x, y, CorrelationMethod::pearson);
        const auto s = stats::correlate(x, y, CorrelationMethod::spearman);
        CHECK(std::abs(p.r - oracle::pearson(x, y)) < 1e-12);
        const auto rx = oracle::ranks(x), ry = oracle::ranks(y);
        if (oracle::var(rx) > 0 && oracle::var(ry) > 0) CHECK(std::abs(s.r - oracle::spearman(x, y)) < 1e-12);
        const double r = p.r;
        if (std::abs(r) < 1) {
            const double t = r * std::sqrt((n - 2) / (1 - r * r));
            CHECK(std::abs(p.p - oracle::t_two_sided(t, n - 2)) < 1e-12);
        }
    }
}

TEST_CASE("correlations match frozen scipy values") {
    const std::vector<double> v1{17, 86, 60, 77, 47, 3, 70, 87, 88, 92};
    const std::vector<double> v2{70, 29, 85, 61, 80, 34, 60, 31, 73, 66};
    const std::vector<double> v1t{17, 86, 60, 77, 47, 3, 70, 47, 88, 92};
    auto s = stats::correlate(v1, v2, CorrelationMethod::spearman);
    CHECK(s.r == doctest::Approx(-0.16363636363636364).epsilon(1e-12));
    CHECK(s.p == doctest::Approx(0.6514773427962428).epsilon(1e-10));
    s = stats::correlate(v1t, v2, CorrelationMethod::spearman);
    CHECK(s.r == doctest::Approx(0.024316221747202587).epsilon(1e-12));
    CHECK(s.p == doctest::Approx(0.9468397049085097).epsilon(1e-10));
    const auto p = stats::correlate(v1, v2, CorrelationMethod::pearson);
    CHECK(p.r == doctest::Approx(-0.033621194725622014).epsilon(1e-12));
    CHECK(p.p == doctest::Approx(0.926536715854247).epsilon(1e-10));
    CHECK(p.n == 10);
}

TEST_CASE("spearman is invariant under monotone transforms") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        auto x = draw(rng, 9), y = draw(rng, 9);
        auto fx = x;
        for (auto& v : fx) v = std::exp(3 * v) + 7;
        CHECK(stats::correlate(x, y, CorrelationMethod::spearman).r ==
              doctest::Approx(stats::correlate(fx, y, CorrelationMethod::spearman).r).epsilon(1e-14));
    }
}

TEST_CASE("degenerate correlation input") {
    const std::vector<double> a{1, 2, 3}, c{4, 4, 4}, shortv{1, 2};
    CHECK_THROWS_AS(stats::correlate(a, c, CorrelationMethod::pearson), DegenerateInput);
    CHECK_THROWS_AS(stats::correlate(shortv, shortv, CorrelationMethod::spearman), DegenerateInput);
    CHECK_THROWS_AS(stats::correlate(a, shortv, CorrelationMethod::pearson), DegenerateInput);
    const auto perfect = stats::correlate(a, a, CorrelationMethod::pearson);
    CHECK(perfect.r == doctest::Approx(1.0));
    CHECK(perfect.p == 0.0);
}

TEST_CASE("exact permutation p for spearman") {
    const std::vector<double> x{1, 2, 3, 4}, y{10, 20, 30, 40};
    CHECK(stats::spearman_permutation_p(x, y) == doctest::Approx(2.0 / 24.0).epsilon(1e-15));
    const std::vector<double> a{1, 2, 3, 4, 5, 6}, b{2, 1, 4, 3, 6, 5};
    const double p = stats::spearman_permutation_p(a, b);
    CHECK(p > 0.0);
    CHECK(p <= 1.0);
    // brute-force count: rho of b against a is 0.8286
    std::vector<double> perm = b;
    std::sort(perm.begin(), perm.end());
    const double obs = std::abs(oracle::spearman(a, b));
    int hits = 0, total = 0;
    do {
        ++total;
        if (std::abs(oracle::spearman(a, perm)) >= obs - 1e-12) ++hits;
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(p == doctest::Approx(double(hits) / total).epsilon(1e-15));
    const std::vector<double> big(11, 1.0);
    CHECK_THROWS(stats::spearman_permutation_p(big, big));
}

TEST_CASE("cronbach alpha matches the literal formula") {
    const std::vector<std::vector<double>> rows{{3, 4, 3, 5}, {2, 2, 3, 2}, {4, 5, 4, 4},
                                                {1, 2, 1, 2}, {3, 3, 4, 3}, {5, 4, 5, 5}};
    Matrix m(rows.size(), 4);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < 4; ++c) m(r, c) = rows[r][c];
    CHECK(std::abs(stats::cronbach_alpha(m) - 0.9342528735632183) < 1e-12);
    CHECK(std::abs(stats::cronbach_alpha(m) - oracle::alpha(rows)) < 1e-12);

    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 2 + rep % 9, k = 2 + rep % 5;
        auto data = testing::random_rows(rng, n, k);
        Matrix x(n, k);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < k; ++c) x(r, c) = data[r][c];
        CHECK(std::abs(stats::cronbach_alpha(x) - oracle::alpha(data)) < 1e-12);
    }
}

TEST_CASE("cronbach alpha properties") {
    SUBCASE("duplicated columns give exactly 1") {
        for (std::size_t k : {2u, 4u}) {
            Matrix m(5, k);
            const double v[] = {0.31, 0.72, 0.55, 0.18, 0.94};
            for (std::size_t r = 0; r < 5; ++r)
                for (std::size_t c = 0; c < k; ++c) m(r, c) = v[r];
            CHECK(stats::cronbach_alpha(m) == 1.0);
        }
    }
    SUBCASE("shifting an item leaves alpha unchanged") {
        std::mt19937_64 rng(8);
        auto data = testing::random_rows(rng, 7, 4);
        Matrix a(7, 4), b(7, 4);
        for (std::size_t r = 0; r < 7; ++r)
            for (std::size_t c = 0; c < 4; ++c) {
                a(r, c) = data[r][c];
                b(r, c) = data[r][c] + (c == 2 ? 0.25 : 0.0);
            }
        CHECK(stats::cronbach_alpha(a) == doctest::Approx(stats::cronbach_alpha(b)).epsilon(1e-12));
    }
    SUBCASE("degenerate inputs") {
        Matrix one(1, 3, 0.5), flat(4, 3, 0.5), single_item(4, 1, 0.5);
        CHECK_THROWS_AS(stats::cronbach_alpha(one), DegenerateVariance);
        CHECK_THROWS_AS(stats::cronbach_alpha(flat), DegenerateVariance);
        CHECK_THROWS_AS(stats::cronbach_alpha(single_item), DegenerateVariance);
    }
}

TEST_CASE("silhouette matches brute force") {
    const std::vector<std::vector<double>> pts{
        {0.1, 0.2, 0.7}, {0.15, 0.25, 0.6}, {0.12, 0.18, 0.7}, {0.6, 0.3, 0.1}, {0.5, 0.3, 0.2}};
    const std::vector<int> labels{0, 0, 0, 1, 1};
    Matrix m(5, 3);
    for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t c = 0; c < 3; ++c) m(r, c) = pts[r][c];
    CHECK(std::abs(stats::silhouette(m, labels) - 0.8317116888248692) < 1e-12);
    CHECK(std::abs(stats::silhouette(m, labels, stats::DistanceMetric::manhattan) - 0.8337679314149904) < 1e-12);

    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 4 + rep % 7;
        auto data = testing::random_rows(rng, n, 8);
        std::vector<int> lab(n);
        for (std::size_t i = 0; i < n; ++i) lab[i] = i < n / 2 ? 0 : 1;
        Matrix x(n, 8);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < 8; ++c) x(r, c) = data[r][c];
        CHECK(std::abs(stats::silhouette(x, lab) - oracle::silhouette(data, lab, false)) < 1e-12);
        CHECK(std::abs(stats::silhouette(x, lab, stats::DistanceMetric::manhattan) - oracle::silhouette(data, lab, true)) <
              1e-12);

        auto swapped = lab;
        for (auto& l : swapped) l = 1 - l;
        CHECK(stats::silhouette(x, swapped) == doctest::Approx(stats::silhouette(x, lab)).epsilon(1e-14));
    }
}

TEST_CASE("silhouette needs two members per cluster") {
    Matrix m(3, 2, 0.1);
    const std::vector<int> labels{0, 0, 1};
    CHECK_THROWS_AS(stats::silhouette(m, labels), TooFewTerms);
}

TEST_CASE("paired t-test") {
    SUBCASE("t of d = [1,2,3] is 2 sqrt(3)") {
        const std::vector<double> t0{0, 0, 0}, t1{1, 2, 3};
        const auto r = stats::paired_t_test(t0, t1);
        CHECK(std::abs(r.t - 2 * std::sqrt(3.0)) < 1e-9);
        CHECK(r.df == 2);
        CHECK(std::abs(r.p - 0.07417990022744854) < 1e-12);
        // df = 2 closed form: p = 1 - t / sqrt(t^2 + 2)
        CHECK(std::abs(r.p - (1 - r.t / std::sqrt(r.t * r.t + 2))) < 1e-12);
    }
    SUBCASE("frozen scipy value") {
        const std::vector<double> a{0.61, 0.55, 0.72, 0.48, 0.66, 0.59, 0.70};
        const std::vector<double> b{0.68, 0.60, 0.75, 0.57, 0.69, 0.66, 0.74};
        const auto r = stats::paired_t_test(a, b);
        CHECK(r.t == doctest::Approx(6.247161517603573).epsilon(1e-12));
        CHECK(r.p == doctest::Approx(0.0007796138470123413).epsilon(1e-9));
        CHECK(r.mean_diff > 0);
    }
    SUBCASE("random instances against the oracle, and antisymmetry") {
        std::mt19937_64 rng(17);
        for (int rep = 0; rep < 100; ++rep) {
            const std::size_t n = 2 + rep % 9;
            const auto t0 = draw(rng, n), t1 = draw(rng, n);
            const auto r = stats::paired_t_test(t0, t1);
            CHECK(std::abs(r.t - oracle::paired_t(t0, t1)) < 1e-12 * std::max(1.0, std::abs(r.t)));
            CHECK(std::abs(r.p - oracle::t_two_sided(r.t, n - 1)) < 1e-12);
            CHECK(std::abs(r.t0_mean - oracle::mean(t0)) < 1e-12);
            CHECK(std::abs(r.t1_sd - std::sqrt(oracle::var(t1))) < 1e-12);
            const auto back = stats::paired_t_test(t1, t0);
            CHECK(back.t == doctest::Approx(-r.t).epsilon(1e-14));
            CHECK(back.p == doctest::Approx(r.p).epsilon(1e-14));
        }
    }
    SUBCASE("errors") {
        const std::vector<double> a{1, 2, 3}, b{2, 3, 4}, c{1, 2};
        CHECK_THROWS_AS(stats::paired_t_test(a, b), ZeroVariance);
        CHECK_THROWS_AS(stats::paired_t_test(a, c), std::invalid_argument);
        const std::vector<double> one{1};
        CHECK_THROWS_AS(stats::paired_t_test(one, one), std::invalid_argument);
    }
}
