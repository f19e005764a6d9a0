#include "scidocbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "scidocbench/errors.hpp"

namespace sdb::metrics {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw InvalidArgument(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                              std::to_string(b) + ")");
    }
    if (a == 0) throw InvalidArgument(std::string(what) + ": empty input");
}

}  // namespace

double accuracy(std::span<const Label> predictions, std::span<const Label> truth) {
    require_same_length(predictions.size(), truth.size(), "accuracy");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += predictions[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double macro_f1(std::span<const Label> predictions, std::span<const Label> truth, std::size_t n_classes) {
    require_same_length(predictions.size(), truth.size(), "macro_f1");
    std::vector<std::size_t> tp(n_classes, 0), predicted(n_classes, 0), actual(n_classes, 0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (predictions[i] >= n_classes || truth[i] >= n_classes) {
            throw InvalidArgument("macro_f1: label out of range [0, " + std::to_string(n_classes) + ")");
        }
        ++predicted[predictions[i]];
        ++actual[truth[i]];
        tp[truth[i]] += predictions[i] == truth[i];
    }
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        if (predicted[c] == 0 && actual[c] == 0) continue;
        ++counted;
        if (predicted[c] == 0 || actual[c] == 0 || tp[c] == 0) continue;
        const double precision = static_cast<double>(tp[c]) / static_cast<double>(predicted[c]);
        const double recall = static_cast<double>(tp[c]) / static_cast<double>(actual[c]);
        sum += 2.0 * precision * recall / (precision + recall);
    }
    return sum / static_cast<double>(counted);
}

double pearson(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw InvalidArgument("pearson: length mismatch");
    if (u.size() < 2) throw InvalidArgument("pearson: need at least two values");
    const double n = static_cast<double>(u.size());
    const double mu = std::accumulate(u.begin(), u.end(), 0.0) / n;
    const double mv = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double suv = 0.0, suu = 0.0, svv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double du = u[i] - mu;
        const double dv = v[i] - mv;
        suv += du * dv;
        suu += du * du;
        svv += dv * dv;
    }
    if (suu == 0.0 || svv == 0.0) throw DegenerateInput("pearson: zero variance");
    return std::clamp(suv / (std::sqrt(suu) * std::sqrt(svv)), -1.0, 1.0);
}

double purity(std::span<const std::size_t> clusters, std::span<const Label> truth) {
    require_same_length(clusters.size(), truth.size(), "purity");
    std::vector<std::pair<std::size_t, Label>> pairs(clusters.size());
    for (std::size_t i = 0; i < clusters.size(); ++i) pairs[i] = {clusters[i], truth[i]};
    std::sort(pairs.begin(), pairs.end());

    std::size_t total = 0;
    std::size_t i = 0;
    while (i < pairs.size()) {
        const std::size_t cluster = pairs[i].first;
        std::size_t best = 0;
        while (i < pairs.size() && pairs[i].first == cluster) {
            std::size_t j = i;
            while (j < pairs.size() && pairs[j] == pairs[i]) ++j;
            best = std::max(best, j - i);
            i = j;
        }
        total += best;
    }
    return static_cast<double>(total) / static_cast<double>(truth.size());
}

double average_precision(std::span<const std::uint8_t> ranked_labels) {
    double sum = 0.0;
    std::size_t positives = 0;
    for (std::size_t k = 0; k < ranked_labels.size(); ++k) {
        if (ranked_labels[k] > 1) throw InvalidArgument("average_precision: labels must be 0 or 1");
        if (ranked_labels[k]) {
            ++positives;
            sum += static_cast<double>(positives) / static_cast<double>(k + 1);
        }
    }
    if (positives == 0) throw DegenerateInput("average_precision: no positive labels");
    return sum / static_cast<double>(positives);
}

double average_precision_scored(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    require_same_length(scores.size(), labels.size(), "average_precision");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<std::uint8_t> ranked(labels.size());
    for (std::size_t i = 0; i < order.size(); ++i) ranked[i] = labels[order[i]];
    return average_precision(ranked);
}

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    require_same_length(scores.size(), labels.size(), "auc");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Mann-Whitney U from mid-ranks; every quantity is an exact half-integer.
    double rank_sum_pos = 0.0;
    std::size_t n_pos = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] > 1) throw InvalidArgument("auc: labels must be 0 or 1");
            if (labels[order[k]]) {
                rank_sum_pos += mid_rank;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw DegenerateInput("auc: both classes must be present");
    const double np = static_cast<double>(n_pos);
    const double u = rank_sum_pos - np * (np + 1.0) / 2.0;
    return u / (np * static_cast<double>(n_neg));
}

double mean(std::span<const double> values) {
    if (values.empty()) throw InvalidArgument("mean of empty sample");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    const double m = mean(values);
    double ss = 0.0;
    for (double x : values) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

TTestResult unpaired_t_test(std::span<const double> a, std::span<const double> b, TTestVariant variant) {
    if (a.size() < 2 || b.size() < 2) throw InvalidArgument("t-test: each sample needs at least two values");
    for (auto s : {a, b}) {
        for (double x : s) {
            if (!std::isfinite(x)) throw InvalidArgument("t-test: non-finite sample value");
        }
    }
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double ma = mean(a);
    const double mb = mean(b);
    const double va = std::pow(sample_std(a), 2);
    const double vb = std::pow(sample_std(b), 2);

    TTestResult r;
    double se2;
    if (variant == TTestVariant::pooled) {
        r.df = na + nb - 2.0;
        const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / r.df;
        se2 = pooled * (1.0 / na + 1.0 / nb);
    } else {
        se2 = va / na + vb / nb;
        const double qa = va / na;
        const double qb = vb / nb;
        r.df = se2 > 0.0 ? se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0)) : na + nb - 2.0;
    }

    if (se2 == 0.0) {
        if (ma == mb) return {0.0, 1.0, r.df};
        throw DegenerateInput("t-test: zero variance with unequal means");
    }
    r.t = (ma - mb) / std::sqrt(se2);
    boost::math::students_t dist(r.df);
    r.p = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t))), 0.0, 1.0);
    return r;
}

}  // namespace sdb::metrics
