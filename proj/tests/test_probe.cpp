#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "oracles.hpp"
#include "scidocbench/errors.hpp"
#include "scidocbench/probe.hpp"
#include "scidocbench/rng.hpp"

using namespace sdb;
using namespace sdb::probe;
using embedstore::EmbeddingMatrix;

namespace {

struct Data {
    EmbeddingMatrix m;
    std::vector<metrics::Label> y;
};

// Gaussian blobs in `dim` dimensions, class c centered at centers[c].
Data blobs(const std::vector<std::vector<double>>& centers, std::size_t per_class, double sigma, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n01;
    Data d;
    std::vector<std::string> ids;
    std::vector<double> values;
    const std::size_t dim = centers[0].size();
    for (std::size_t i = 0; i < per_class; ++i) {
        for (std::size_t c = 0; c < centers.size(); ++c) {
            ids.push_back("d" + std::to_string(ids.size()));
            for (std::size_t j = 0; j < dim; ++j) values.push_back(centers[c][j] + sigma * n01(gen));
            d.y.push_back(c);
        }
    }
    d.m = EmbeddingMatrix(ids, dim, values);
    return d;
}

// Accuracy of assigning each validation row to the nearest training centroid.
double nearest_centroid_accuracy(const Data& d, const Split& s, std::size_t classes) {
    const std::size_t dim = d.m.dim();
    std::vector<std::vector<double>> sum(classes, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> count(classes, 0);
    for (auto i : s.train) {
        for (std::size_t j = 0; j < dim; ++j) sum[d.y[i]][j] += d.m.row(i)[j];
        ++count[d.y[i]];
    }
    std::vector<std::size_t> pred, truth;
    for (auto i : s.validation) {
        std::size_t best = 0;
        double best_d = 1e300;
        for (std::size_t c = 0; c < classes; ++c) {
            double dist = 0;
            for (std::size_t j = 0; j < dim; ++j) {
                const double diff = d.m.row(i)[j] - sum[c][j] / count[c];
                dist += diff * diff;
            }
            if (dist < best_d) best_d = dist, best = c;
        }
        pred.push_back(best);
        truth.push_back(d.y[i]);
    }
    return oracle::accuracy(pred, truth);
}

}  // namespace

TEST(Probe, SeparableBlobsMatchNearestCentroid) {
    const auto d = blobs({{-3, 0}, {3, 0}}, 200, 1.0, 1);
    ProbeConfig cfg;
    const auto r = train_probe(d.m, d.y, cfg);
    EXPECT_GE(r.mean_acc, 0.98);
    const auto folds = stratified_folds(d.y, cfg.folds, derive_seed(cfg.seed, 0));
    double oracle_acc = 0;
    for (const auto& s : folds) oracle_acc += nearest_centroid_accuracy(d, s, 2) / folds.size();
    EXPECT_NEAR(r.mean_acc, oracle_acc, 0.02);
    EXPECT_EQ(r.per_fold.size(), cfg.folds * cfg.runs);
    EXPECT_EQ(r.n_classes, 2u);
}

TEST(Probe, FoldScoresMatchMetricOracles) {
    const auto d = blobs({{-1, 0, 0}, {1, 0, 0}, {0, 1.5, 0}}, 60, 1.0, 2);
    ProbeConfig cfg;
    cfg.runs = 1;
    cfg.epochs = 3;
    const auto r = train_probe(d.m, d.y, cfg);
    // replay fold 0 with the same seeds and recompute its scores from predictions
    const auto folds = stratified_folds(d.y, cfg.folds, derive_seed(cfg.seed, 0));
    const auto f = train_fold(d.m, d.y, 3, folds[0], cfg, derive_seed(derive_seed(cfg.seed, 0), 100));
    EXPECT_EQ(f.accuracy, r.per_fold[0].accuracy);
    EXPECT_EQ(f.macro_f1, r.per_fold[0].macro_f1);
    EXPECT_GE(f.best_epoch, 1u);
    EXPECT_LE(f.best_epoch, cfg.epochs);
    // the kept snapshot is the best epoch, earliest on ties
    const auto& acc = f.epoch_val_accuracy;
    ASSERT_EQ(acc.size(), cfg.epochs);
    const auto best = std::max_element(acc.begin(), acc.end());
    EXPECT_EQ(f.best_epoch, std::size_t(best - acc.begin()) + 1);
    EXPECT_EQ(f.accuracy, *best);
    double mean_acc = 0, mean_f1 = 0;
    for (const auto& s : r.per_fold) {
        mean_acc += s.accuracy / r.per_fold.size();
        mean_f1 += s.macro_f1 / r.per_fold.size();
    }
    EXPECT_NEAR(r.mean_acc, mean_acc, 1e-12);
    EXPECT_NEAR(r.mean_f1, mean_f1, 1e-12);
    EXPECT_EQ(r.std_acc, 0.0);
}

TEST(Probe, EarlyStoppingNeverWorseThanLastEpoch) {
    const auto d = blobs({{-0.5, 0}, {0.5, 0}, {0, 0.5}}, 50, 1.0, 3);
    ProbeConfig cfg;
    cfg.lr = 0.5;
    cfg.epochs = 8;
    cfg.batch = 7;
    for (const auto& f : train_probe(d.m, d.y, cfg).per_fold) {
        EXPECT_GE(f.accuracy, f.epoch_val_accuracy.back());
        EXPECT_EQ(f.accuracy, *std::max_element(f.epoch_val_accuracy.begin(), f.epoch_val_accuracy.end()));
    }
}

TEST(Probe, StratifiedFoldProperties) {
    std::mt19937_64 gen(4);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 8 + gen() % 200, classes = 2 + gen() % 9, k = 2 + gen() % 5;
        std::vector<metrics::Label> y(n);
        for (auto& v : y) v = gen() % classes;
        const auto folds = stratified_folds(y, k, gen());
        ASSERT_EQ(folds.size(), k);
        std::vector<int> seen(n, 0);
        for (const auto& s : folds) {
            EXPECT_TRUE(std::is_sorted(s.train.begin(), s.train.end()));
            EXPECT_TRUE(std::is_sorted(s.validation.begin(), s.validation.end()));
            EXPECT_EQ(s.train.size() + s.validation.size(), n);
            std::set<std::size_t> tr(s.train.begin(), s.train.end());
            for (auto v : s.validation) {
                EXPECT_FALSE(tr.count(v));
                ++seen[v];
            }
            // round-robin dealing keeps fold sizes within one of each other
            EXPECT_LE(s.validation.size(), n / k + 1);
            EXPECT_GE(s.validation.size(), n / k);
        }
        EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
        // each large class is spread evenly
        std::vector<std::size_t> sizes(classes, 0);
        for (auto v : y) ++sizes[v];
        for (std::size_t c = 0; c < classes; ++c) {
            if (sizes[c] < k) continue;
            for (const auto& s : folds) {
                const auto in = std::count_if(s.validation.begin(), s.validation.end(), [&](auto i) { return y[i] == c; });
                EXPECT_GE(std::size_t(in), sizes[c] / k);
                EXPECT_LE(std::size_t(in), sizes[c] / k + 1);
            }
        }
    }
}

TEST(Probe, ScaleInvariance) {
    const auto d = blobs({{-1, 0.5, 0, 0}, {1, 0, 0.5, 0}, {0, 1, 0, -1}, {0, -1, 1, 0}}, 80, 0.8, 5);
    ProbeConfig cfg;
    cfg.runs = 2;
    const auto base = train_probe(d.m, d.y, cfg);
    for (double factor : {0.5, 2.0}) {
        const auto scaled = train_probe(d.m.scaled(factor), d.y, cfg);
        EXPECT_LT(std::fabs(scaled.mean_acc - base.mean_acc), 0.02) << factor;
    }
}

TEST(Probe, NoSignalStaysNearChance) {
    auto d = blobs({{0, 0, 0, 0, 0}}, 600, 1.0, 6);
    std::mt19937_64 gen(7);
    for (auto& v : d.y) v = gen() % 4;
    const auto r = train_probe(d.m, d.y, ProbeConfig{});
    EXPECT_LT(r.mean_acc, 0.25 + 0.06);
    EXPECT_GT(r.mean_acc, 0.25 - 0.06);
}

TEST(Probe, Deterministic) {
    const auto d = blobs({{-1, 0}, {1, 0}, {0, 1}}, 40, 1.0, 8);
    ProbeConfig cfg;
    cfg.seed = 11;
    const auto a = train_probe(d.m, d.y, cfg), b = train_probe(d.m, d.y, cfg);
    EXPECT_EQ(to_json(a, "m", "d"), to_json(b, "m", "d"));
    ASSERT_EQ(a.per_fold.size(), b.per_fold.size());
    cfg.seed = 12;
    const auto c = train_probe(d.m, d.y, cfg);
    bool differs = false;
    for (std::size_t i = 0; i < a.per_fold.size(); ++i) differs |= a.per_fold[i].epoch_val_accuracy != c.per_fold[i].epoch_val_accuracy;
    EXPECT_TRUE(differs);
}

TEST(Probe, ProtocolDefaultsAndSnapshot) {
    const ProbeConfig cfg;
    EXPECT_EQ(cfg.lr, 5e-4);
    EXPECT_EQ(cfg.batch, 100u);
    EXPECT_EQ(cfg.epochs, 5u);
    EXPECT_EQ(cfg.folds, 4u);
    EXPECT_EQ(cfg.regularization, 0.0);
    EXPECT_EQ(cfg.runs, 3u);
    const auto d = blobs({{-1, 0}, {1, 0}}, 20, 1.0, 9);
    const auto r = train_probe(d.m, d.y, cfg);
    const auto back = probe_result_from_json(to_json(r, "trained", "journals"));
    EXPECT_EQ(back.method, "trained");
    EXPECT_EQ(back.dataset, "journals");
    EXPECT_EQ(back.result.config.lr, 5e-4);
    EXPECT_EQ(back.result.config.batch, 100u);
    EXPECT_EQ(back.result.config.epochs, 5u);
    EXPECT_EQ(back.result.config.folds, 4u);
    EXPECT_EQ(back.result.config.regularization, 0.0);
    EXPECT_EQ(back.result.mean_acc, r.mean_acc);
    EXPECT_EQ(back.result.run_means(Metric::accuracy), r.run_means(Metric::accuracy));
}

TEST(Probe, RunMeansAndStd) {
    const auto d = blobs({{-0.7, 0}, {0.7, 0}}, 60, 1.0, 10);
    ProbeConfig cfg;
    cfg.runs = 4;
    const auto r = train_probe(d.m, d.y, cfg);
    const auto means = r.run_means(Metric::accuracy);
    ASSERT_EQ(means.size(), 4u);
    for (std::size_t run = 0; run < 4; ++run) {
        double s = 0;
        for (const auto& f : r.per_fold) {
            if (f.run == run) s += f.accuracy / cfg.folds;
        }
        EXPECT_NEAR(means[run], s, 1e-12);
    }
    EXPECT_NEAR(r.std_acc, metrics::sample_std(means), 1e-15);
}

TEST(Probe, Preconditions) {
    auto d = blobs({{0, 0}}, 20, 1.0, 11);
    EXPECT_THROW(train_probe(d.m, d.y, ProbeConfig{}), InvalidArgument);  // one class
    const auto small = blobs({{-1, 0}, {1, 0}}, 1, 1.0, 12);
    EXPECT_THROW(train_probe(small.m, small.y, ProbeConfig{}), InvalidArgument);  // fewer rows than folds
    ProbeConfig bad;
    bad.folds = 1;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = ProbeConfig{};
    bad.batch = 0;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    const auto two = blobs({{-1, 0}, {1, 0}}, 10, 1.0, 13);
    EXPECT_THROW(train_probe(two.m, std::vector<metrics::Label>(3, 0), ProbeConfig{}), InvalidArgument);
}

TEST(Probe, FixedSplit) {
    const auto d = blobs({{-3, 0}, {3, 0}}, 50, 1.0, 14);
    Split s;
    for (std::size_t i = 0; i < d.y.size(); ++i) (i % 5 ? s.train : s.validation).push_back(i);
    ProbeConfig cfg;
    cfg.runs = 2;
    const auto r = train_probe_fixed_split(d.m, d.y, s, cfg);
    EXPECT_EQ(r.per_fold.size(), 2u);
    EXPECT_GE(r.mean_acc, 0.95);
}
