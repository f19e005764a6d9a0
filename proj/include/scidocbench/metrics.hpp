#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

// Scoring functions shared by the probe, clustering and retrieval
// evaluations. All functions are pure.
namespace sdb::metrics {

using Label = std::size_t;

// Fraction of exact matches. Requires equal, non-zero lengths.
double accuracy(std::span<const Label> predictions, std::span<const Label> truth);

// Unweighted mean of per-class F1 over [0, n_classes). Classes with no true
// and no predicted instances are skipped; a zero precision or recall
// denominator gives that class F1 = 0.
double macro_f1(std::span<const Label> predictions, std::span<const Label> truth, std::size_t n_classes);

// Pearson correlation treating vector positions as samples. Throws
// DegenerateInput ("zero variance") when either vector is constant.
double pearson(std::span<const double> u, std::span<const double> v);

// (1/n) * sum over clusters of the size of its majority class.
double purity(std::span<const std::size_t> clusters, std::span<const Label> truth);

// Mean over positive positions k of precision@k. `ranked_labels` is already
// in rank order (best first). Throws DegenerateInput without positives.
double average_precision(std::span<const std::uint8_t> ranked_labels);

// Sorts by descending score (stable: ties keep input order) and applies
// average_precision.
double average_precision_scored(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Mann-Whitney AUC: fraction of (positive, negative) pairs with the positive
// scored higher, ties counting 1/2. Throws DegenerateInput unless both
// classes are present.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    double df = 0.0;
};

enum class TTestVariant { pooled, welch };

// Two-sided unpaired t-test. Pooled variance (df = na + nb - 2) by default;
// Welch-Satterthwaite on request. Both samples need >= 2 finite values.
// Zero variance: equal means give t = 0, p = 1; unequal means throw.
TTestResult unpaired_t_test(std::span<const double> a, std::span<const double> b,
                            TTestVariant variant = TTestVariant::pooled);

double mean(std::span<const double> values);
// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_std(std::span<const double> values);

}  // namespace sdb::metrics
