#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scidocbench/embedstore.hpp"
#include "scidocbench/metrics.hpp"

// Linear evaluation: softmax regression on frozen embeddings, k-fold
// cross-validation, early stopping on per-epoch validation accuracy.
namespace sdb::probe {

struct ProbeConfig {
    double lr = 5e-4;
    std::size_t batch = 100;
    std::size_t epochs = 5;
    std::size_t folds = 4;
    double regularization = 0.0;  // L2 coefficient; the protocol uses none
    std::size_t runs = 3;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

// Classes with at least `folds` members are dealt round-robin over the folds
// after a seeded shuffle (stratified); members of smaller classes are pooled,
// shuffled and dealt round-robin continuing from where the last deal ended.
// Validation sets partition [0, n); index lists are sorted.
std::vector<Split> stratified_folds(std::span<const metrics::Label> labels, std::size_t folds, std::uint64_t seed);

struct FoldScore {
    std::size_t run = 0;
    std::size_t fold = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::size_t best_epoch = 0;                 // 1-based epoch of the kept snapshot
    std::vector<double> epoch_val_accuracy;     // validation accuracy after each epoch
};

enum class Metric { accuracy, macro_f1 };

struct ProbeResult {
    std::vector<FoldScore> per_fold;
    double mean_acc = 0.0;
    double std_acc = 0.0;
    double mean_f1 = 0.0;
    double std_f1 = 0.0;
    std::size_t runs = 0;
    std::size_t n_classes = 0;
    ProbeConfig config;

    // Means over all folds of all runs; stds are the sample std of per-run
    // means across runs (0 with a single run).
    void aggregate();
    // Mean of `metric` over each run's folds, in run order.
    std::vector<double> run_means(Metric metric) const;
};

// Softmax regression trained with plain mini-batch gradient descent from a
// zero initialization.
class SoftmaxRegression {
public:
    SoftmaxRegression(std::size_t dim, std::size_t n_classes);

    std::size_t predict(std::span<const double> x) const;
    // One gradient step on mean cross-entropy (+ 0.5 * reg * ||W||^2).
    void step(const embedstore::EmbeddingMatrix& data, std::span<const std::size_t> rows,
              std::span<const metrics::Label> labels, double lr, double regularization);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t n_classes() const noexcept { return classes_; }
    const std::vector<double>& weights() const noexcept { return w_; }
    const std::vector<double>& bias() const noexcept { return b_; }

private:
    void logits(std::span<const double> x, std::span<double> out) const;

    std::size_t dim_;
    std::size_t classes_;
    std::vector<double> w_;  // n_classes x dim
    std::vector<double> b_;
};

// Trains on `train` rows for cfg.epochs, keeps the snapshot with the highest
// validation accuracy (earliest on ties) and scores it on `validation`.
FoldScore train_fold(const embedstore::EmbeddingMatrix& embeddings, std::span<const metrics::Label> labels,
                     std::size_t n_classes, const Split& split, const ProbeConfig& cfg, std::uint64_t shuffle_seed);

// Full protocol: cfg.runs repetitions of cfg.folds-fold cross-validation.
// Run r uses seed derive_seed(cfg.seed, r) for its split and shuffles.
// Throws InvalidArgument with fewer than 2 classes or fewer rows than folds.
ProbeResult train_probe(const embedstore::EmbeddingMatrix& embeddings, std::span<const metrics::Label> labels,
                        const ProbeConfig& cfg);

// Fixed external split instead of cross-validation (repeated cfg.runs times
// with different shuffles).
ProbeResult train_probe_fixed_split(const embedstore::EmbeddingMatrix& embeddings,
                                    std::span<const metrics::Label> labels, const Split& split,
                                    const ProbeConfig& cfg);

std::string to_json(const ProbeResult& result, const std::string& method, const std::string& dataset);
struct NamedProbeResult {
    std::string method;
    std::string dataset;
    ProbeResult result;
};
NamedProbeResult probe_result_from_json(const std::string& text);

}  // namespace sdb::probe
