#pragma once

#include "psygauge/matrix.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace psygauge::stats {

double mean(std::span<const double> x);

// Unbiased (n-1) variance; requires n >= 2.
double sample_variance(std::span<const double> x);
double sample_sd(std::span<const double> x);

// I_x(a, b) by Lentz's continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double df);

// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

// 1-based ranks; ties share the average of the ranks they span.
std::vector<double> average_ranks(std::span<const double> x);

enum class CorrelationMethod { pearson, spearman };

std::string_view to_string(CorrelationMethod m) noexcept;

struct Correlation {
    double r = 0.0;
    double p = 1.0;  // two-sided, t approximation with n-2 df
    std::size_t n = 0;
};

// Throws DegenerateInput for length mismatch, n < 3 or a constant input.
Correlation correlate(std::span<const double> x, std::span<const double> y, CorrelationMethod method);

// Exact two-sided permutation p-value of Spearman's rho, enumerating all n!
// orderings of y. Limited to n <= 10.
double spearman_permutation_p(std::span<const double> x, std::span<const double> y);

// alpha = k/(k-1) * (1 - sum var(item) / var(total)), respondents in rows.
// Throws DegenerateVariance for < 2 respondents, < 2 items or zero total variance.
double cronbach_alpha(const Matrix& respondents_by_items);

enum class DistanceMetric { euclidean, manhattan };

// Mean silhouette of a two-cluster labelling (labels 0/1) over the rows of
// `points`. s(i) = (b - a) / max(a, b), and 0 when max(a, b) = 0.
// Throws TooFewTerms when either cluster has fewer than 2 members.
double silhouette(const Matrix& points, std::span<const int> labels,
                  DistanceMetric metric = DistanceMetric::euclidean);

struct PairedTTest {
    std::size_t n = 0;
    double df = 0.0;
    double mean_diff = 0.0;  // mean(t1 - t0)
    double t = 0.0;
    double p = 1.0;  // two-sided
    double t0_mean = 0.0, t0_sd = 0.0;
    double t1_mean = 0.0, t1_sd = 0.0;
};

// t = mean(d) / (sd(d) / sqrt(n)) with d = t1 - t0 and df = n - 1.
// Throws ZeroVariance when every difference is equal; std::invalid_argument
// for unequal lengths or n < 2.
PairedTTest paired_t_test(std::span<const double> t0, std::span<const double> t1);

} // namespace psygauge::stats
