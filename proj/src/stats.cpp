#include "psygauge/stats.hpp"

#include "psygauge/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace psygauge::stats {

double mean(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("mean of an empty sample");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
    if (x.size() < 2) throw std::invalid_argument("sample variance needs at least 2 values");
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return ss / static_cast<double>(x.size() - 1);
}

double sample_sd(std::span<const double> x) {
    return std::sqrt(sample_variance(x));
}

namespace {

double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

} // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("incomplete beta needs a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
    if (!(df > 0.0)) throw std::invalid_argument("Student's t needs df > 0");
    if (std::isinf(t)) return 0.0;
    return regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

double student_t_cdf(double t, double df) {
    const double tail = 0.5 * student_t_two_sided_p(t, df);
    return t > 0.0 ? 1.0 - tail : tail;
}

std::vector<double> average_ranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

std::string_view to_string(CorrelationMethod m) noexcept {
    return m == CorrelationMethod::pearson ? "pearson" : "spearman";
}

namespace {

double pearson_r(std::span<const double> x, std::span<const double> y) {
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateInput("correlation of a constant vector");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

} // namespace

Correlation correlate(std::span<const double> x, std::span<const double> y, CorrelationMethod method) {
    if (x.size() != y.size()) throw DegenerateInput("correlation inputs differ in length");
    if (x.size() < 3) throw DegenerateInput("correlation needs at least 3 pairs");
    Correlation c;
    c.n = x.size();
    if (method == CorrelationMethod::spearman) {
        const auto rx = average_ranks(x);
        const auto ry = average_ranks(y);
        c.r = pearson_r(rx, ry);
    } else {
        c.r = pearson_r(x, y);
    }
    const double df = static_cast<double>(c.n - 2);
    if (std::abs(c.r) >= 1.0) {
        c.p = 0.0;
    } else {
        const double t = c.r * std::sqrt(df / (1.0 - c.r * c.r));
        c.p = student_t_two_sided_p(t, df);
    }
    return c;
}

double spearman_permutation_p(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DegenerateInput("correlation inputs differ in length");
    if (x.size() < 3 || x.size() > 10) throw DegenerateInput("exact permutation test supports 3 <= n <= 10");
    const auto rx = average_ranks(x);
    auto ry = average_ranks(y);
    const double observed = std::abs(pearson_r(rx, ry));
    std::sort(ry.begin(), ry.end());
    std::size_t extreme = 0, total = 0;
    do {
        ++total;
        // Ties with the observed statistic count as extreme.
        if (std::abs(pearson_r(rx, ry)) >= observed - 1e-12) ++extreme;
    } while (std::next_permutation(ry.begin(), ry.end()));
    // With tied ranks, next_permutation visits each distinct arrangement once.
    return static_cast<double>(extreme) / static_cast<double>(total);
}

double cronbach_alpha(const Matrix& m) {
    const std::size_t n = m.rows();
    const std::size_t k = m.cols();
    if (n < 2) throw DegenerateVariance("Cronbach's alpha needs at least 2 respondents");
    if (k < 2) throw DegenerateVariance("Cronbach's alpha needs at least 2 items");
    double item_var_sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) item_var_sum += sample_variance(m.column(j));
    std::vector<double> totals(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (double v : m.row(i)) totals[i] += v;
    const double total_var = sample_variance(totals);
    if (!(total_var > 0.0)) throw DegenerateVariance("total score variance is zero");
    const double kd = static_cast<double>(k);
    return kd / (kd - 1.0) * (1.0 - item_var_sum / total_var);
}

namespace {

double distance(std::span<const double> a, std::span<const double> b, DistanceMetric metric) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += metric == DistanceMetric::euclidean ? d * d : std::abs(d);
    }
    return metric == DistanceMetric::euclidean ? std::sqrt(acc) : acc;
}

} // namespace

double silhouette(const Matrix& points, std::span<const int> labels, DistanceMetric metric) {
    if (labels.size() != points.rows()) throw std::invalid_argument("silhouette: one label per point required");
    std::size_t counts[2] = {0, 0};
    for (int l : labels) {
        if (l != 0 && l != 1) throw std::invalid_argument("silhouette: labels must be 0 or 1");
        ++counts[l];
    }
    if (counts[0] < 2 || counts[1] < 2) throw TooFewTerms("silhouette needs at least 2 points in each cluster");

    const std::size_t n = points.rows();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double sums[2] = {0.0, 0.0};
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            sums[labels[j]] += distance(points.row(i), points.row(j), metric);
        }
        const int own = labels[i];
        const double a = sums[own] / static_cast<double>(counts[own] - 1);
        const double b = sums[1 - own] / static_cast<double>(counts[1 - own]);
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

PairedTTest paired_t_test(std::span<const double> t0, std::span<const double> t1) {
    if (t0.size() != t1.size()) throw std::invalid_argument("paired t-test: arms differ in length");
    if (t0.size() < 2) throw std::invalid_argument("paired t-test needs at least 2 pairs");
    const std::size_t n = t0.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = t1[i] - t0[i];
    if (std::all_of(d.begin(), d.end(), [&](double v) { return v == d.front(); }))
        throw ZeroVariance("paired t-test: all differences are equal");

    PairedTTest r;
    r.n = n;
    r.df = static_cast<double>(n - 1);
    r.mean_diff = mean(d);
    const double sd = sample_sd(d);
    r.t = r.mean_diff / (sd / std::sqrt(static_cast<double>(n)));
    r.p = student_t_two_sided_p(r.t, r.df);
    r.t0_mean = mean(t0);
    r.t0_sd = sample_sd(t0);
    r.t1_mean = mean(t1);
    r.t1_sd = sample_sd(t1);
    return r;
}

} // namespace psygauge::stats
