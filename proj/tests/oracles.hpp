#pragma once

// Brute-force reference implementations used to check the library. Each one
// follows the textbook definition directly and shares no code with src/.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <vector>

namespace oracle {

inline double accuracy(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] == truth[i]) ++hit;
    }
    return double(hit) / double(pred.size());
}

inline double macro_f1(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth) {
    std::set<std::size_t> classes(pred.begin(), pred.end());
    classes.insert(truth.begin(), truth.end());
    long double total = 0;
    for (auto c : classes) {
        long double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (pred[i] == c && truth[i] == c) tp += 1;
            if (pred[i] == c && truth[i] != c) fp += 1;
            if (pred[i] != c && truth[i] == c) fn += 1;
        }
        // F1 = 2TP / (2TP + FP + FN), 0 when TP = 0
        if (tp > 0) total += 2 * tp / (2 * tp + fp + fn);
    }
    return double(total / classes.size());
}

inline double pearson(const std::vector<double>& u, const std::vector<double>& v) {
    const std::size_t n = u.size();
    long double su = 0, sv = 0;
    for (std::size_t i = 0; i < n; ++i) {
        su += u[i];
        sv += v[i];
    }
    const long double mu = su / n, mv = sv / n;
    long double num = 0, du2 = 0, dv2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (u[i] - mu) * (v[i] - mv);
        du2 += (u[i] - mu) * (u[i] - mu);
        dv2 += (v[i] - mv) * (v[i] - mv);
    }
    return double(num / std::sqrt(du2 * dv2));
}

inline double purity(const std::vector<std::size_t>& clusters, const std::vector<std::size_t>& truth) {
    std::map<std::size_t, std::map<std::size_t, std::size_t>> table;
    for (std::size_t i = 0; i < clusters.size(); ++i) ++table[clusters[i]][truth[i]];
    std::size_t sum = 0;
    for (const auto& [c, counts] : table) {
        std::size_t best = 0;
        for (const auto& [cls, n] : counts) best = std::max(best, n);
        sum += best;
    }
    return double(sum) / double(clusters.size());
}

// Precision@k recounted from scratch at every relevant rank.
inline double average_precision(const std::vector<std::uint8_t>& ranked) {
    double sum = 0;
    std::size_t relevant = 0;
    for (std::size_t k = 0; k < ranked.size(); ++k) {
        if (!ranked[k]) continue;
        std::size_t hits = 0;
        for (std::size_t j = 0; j <= k; ++j) hits += ranked[j];
        sum += double(hits) / double(k + 1);
        ++relevant;
    }
    return sum / double(relevant);
}

// Exact value as numerator / denominator (denominator = lcm of ranks * positives).
inline std::pair<std::int64_t, std::int64_t> average_precision_rational(const std::vector<std::uint8_t>& ranked) {
    std::int64_t lcm = 1;
    for (std::size_t k = 1; k <= ranked.size(); ++k) lcm = std::lcm(lcm, std::int64_t(k));
    std::int64_t num = 0, relevant = 0;
    for (std::size_t k = 0; k < ranked.size(); ++k) {
        if (!ranked[k]) continue;
        ++relevant;
        num += relevant * (lcm / std::int64_t(k + 1));
    }
    return {num, lcm * relevant};
}

// Insertion sort by score descending; equal scores keep input order.
inline std::vector<std::uint8_t> rank_by_score(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        auto pos = order.begin();
        while (pos != order.end() && scores[*pos] >= scores[i]) ++pos;
        order.insert(pos, i);
    }
    std::vector<std::uint8_t> out;
    for (auto i : order) out.push_back(labels[i]);
    return out;
}

// Fraction of (positive, negative) pairs ordered correctly, ties count half.
inline double auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
    std::int64_t twice = 0, pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            ++pairs;
            if (scores[i] > scores[j]) twice += 2;
            if (scores[i] == scores[j]) twice += 1;
        }
    }
    return double(twice) / double(2 * pairs);
}

// P(|T| < |t|) for integer degrees of freedom, closed form in theta = atan(t / sqrt(nu)).
inline double student_t_two_sided_p(double t, int nu) {
    const long double theta = std::atan(std::fabs(t) / std::sqrt(static_cast<long double>(nu)));
    const long double s = std::sin(theta), c = std::cos(theta);
    long double a;
    if (nu % 2 == 1) {
        long double sum = 0;
        if (nu > 1) {
            long double term = c;
            sum = term;
            for (int k = 3; k <= nu - 2; k += 2) {
                term *= c * c * (k - 1) / k;
                sum += term;
            }
        }
        a = 2.0L / std::numbers::pi_v<long double> * (theta + s * sum);
    } else {
        long double term = 1, sum = 1;
        for (int k = 2; k <= nu - 2; k += 2) {
            term *= c * c * (k - 1) / k;
            sum += term;
        }
        a = s * sum;
    }
    return double(1.0L - a);
}

struct TTest {
    double t, df, p;
};

inline TTest pooled_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    auto mean = [](const std::vector<double>& x) {
        long double s = 0;
        for (double v : x) s += v;
        return s / x.size();
    };
    const long double ma = mean(a), mb = mean(b);
    long double ssa = 0, ssb = 0;
    for (double v : a) ssa += (v - ma) * (v - ma);
    for (double v : b) ssb += (v - mb) * (v - mb);
    const int df = int(a.size() + b.size() - 2);
    const long double sp2 = (ssa + ssb) / df;
    const long double t = (ma - mb) / std::sqrt(sp2 * (1.0L / a.size() + 1.0L / b.size()));
    return {double(t), double(df), student_t_two_sided_p(double(t), df)};
}

}  // namespace oracle
