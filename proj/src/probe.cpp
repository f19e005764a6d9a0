#include "scidocbench/probe.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "scidocbench/errors.hpp"
#include "scidocbench/rng.hpp"

namespace sdb::probe {

void ProbeConfig::validate() const {
    if (folds < 2) throw InvalidArgument("folds must be >= 2");
    if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
    if (batch < 1) throw InvalidArgument("batch must be >= 1");
    if (runs < 1) throw InvalidArgument("runs must be >= 1");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw InvalidArgument("lr must be finite and > 0");
    if (!(regularization >= 0.0)) throw InvalidArgument("regularization must be >= 0");
}

std::vector<Split> stratified_folds(std::span<const metrics::Label> labels, std::size_t folds, std::uint64_t seed) {
    if (folds < 2) throw InvalidArgument("folds must be >= 2");
    Rng rng(derive_seed(seed, 20));

    std::map<metrics::Label, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    std::vector<std::vector<std::size_t>> validation(folds);
    std::size_t next = 0;
    std::vector<std::size_t> small;
    for (auto& [label, members] : by_class) {
        if (members.size() < folds) {
            small.insert(small.end(), members.begin(), members.end());
            continue;
        }
        rng.shuffle(std::span<std::size_t>(members));
        for (auto i : members) {
            validation[next].push_back(i);
            next = (next + 1) % folds;
        }
    }
    rng.shuffle(std::span<std::size_t>(small));
    for (auto i : small) {
        validation[next].push_back(i);
        next = (next + 1) % folds;
    }

    std::vector<Split> splits(folds);
    std::vector<std::size_t> fold_of(labels.size());
    for (std::size_t f = 0; f < folds; ++f) {
        for (auto i : validation[f]) fold_of[i] = f;
    }
    for (std::size_t f = 0; f < folds; ++f) {
        splits[f].validation = std::move(validation[f]);
        std::sort(splits[f].validation.begin(), splits[f].validation.end());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (fold_of[i] != f) splits[f].train.push_back(i);
        }
    }
    return splits;
}

// ---------------------------------------------------------------------------

SoftmaxRegression::SoftmaxRegression(std::size_t dim, std::size_t n_classes)
    : dim_(dim), classes_(n_classes), w_(dim * n_classes, 0.0), b_(n_classes, 0.0) {}

void SoftmaxRegression::logits(std::span<const double> x, std::span<double> out) const {
    for (std::size_t c = 0; c < classes_; ++c) {
        const double* w = w_.data() + c * dim_;
        double z = b_[c];
        for (std::size_t d = 0; d < dim_; ++d) z += w[d] * x[d];
        out[c] = z;
    }
}

std::size_t SoftmaxRegression::predict(std::span<const double> x) const {
    std::vector<double> z(classes_);
    logits(x, z);
    return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

void SoftmaxRegression::step(const embedstore::EmbeddingMatrix& data, std::span<const std::size_t> rows,
                             std::span<const metrics::Label> labels, double lr, double regularization) {
    std::vector<double> gw(w_.size(), 0.0), gb(classes_, 0.0), z(classes_);
    const double inv_b = 1.0 / static_cast<double>(rows.size());
    for (auto row : rows) {
        const auto x = data.row(row);
        logits(x, z);
        const double mx = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (auto& v : z) sum += v = std::exp(v - mx);
        for (std::size_t c = 0; c < classes_; ++c) {
            const double d = (z[c] / sum - (labels[row] == c ? 1.0 : 0.0)) * inv_b;
            gb[c] += d;
            double* g = gw.data() + c * dim_;
            for (std::size_t k = 0; k < dim_; ++k) g[k] += d * x[k];
        }
    }
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] -= lr * (gw[i] + regularization * w_[i]);
    for (std::size_t c = 0; c < classes_; ++c) b_[c] -= lr * gb[c];
}

namespace {

double validation_accuracy(const SoftmaxRegression& model, const embedstore::EmbeddingMatrix& data,
                           std::span<const metrics::Label> labels, std::span<const std::size_t> rows) {
    std::size_t hits = 0;
    for (auto r : rows) hits += model.predict(data.row(r)) == labels[r];
    return static_cast<double>(hits) / static_cast<double>(rows.size());
}

std::size_t count_classes(std::span<const metrics::Label> labels) {
    return std::set<metrics::Label>(labels.begin(), labels.end()).size();
}

}  // namespace

FoldScore train_fold(const embedstore::EmbeddingMatrix& embeddings, std::span<const metrics::Label> labels,
                     std::size_t n_classes, const Split& split, const ProbeConfig& cfg, std::uint64_t shuffle_seed) {
    if (split.train.empty() || split.validation.empty()) throw InvalidArgument("probe split has an empty side");
    SoftmaxRegression model(embeddings.dim(), n_classes);
    std::optional<SoftmaxRegression> best;
    FoldScore score;
    double best_acc = -1.0;

    Rng rng(shuffle_seed);
    std::vector<std::size_t> order = split.train;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            const std::size_t end = std::min(order.size(), start + cfg.batch);
            model.step(embeddings, std::span<const std::size_t>(order).subspan(start, end - start), labels, cfg.lr,
                       cfg.regularization);
        }
        const double acc = validation_accuracy(model, embeddings, labels, split.validation);
        score.epoch_val_accuracy.push_back(acc);
        if (acc > best_acc) {
            best_acc = acc;
            best = model;
            score.best_epoch = epoch;
        }
    }

    std::vector<metrics::Label> predicted, truth;
    for (auto r : split.validation) {
        predicted.push_back(best->predict(embeddings.row(r)));
        truth.push_back(labels[r]);
    }
    score.accuracy = metrics::accuracy(predicted, truth);
    score.macro_f1 = metrics::macro_f1(predicted, truth, n_classes);
    return score;
}

std::vector<double> ProbeResult::run_means(Metric metric) const {
    std::map<std::size_t, std::vector<double>> by_run;
    for (const auto& f : per_fold) by_run[f.run].push_back(metric == Metric::accuracy ? f.accuracy : f.macro_f1);
    std::vector<double> out;
    for (const auto& [run, v] : by_run) out.push_back(metrics::mean(v));
    return out;
}

void ProbeResult::aggregate() {
    if (per_fold.empty()) throw InvalidArgument("probe result has no folds");
    std::vector<double> acc, f1;
    for (const auto& f : per_fold) {
        acc.push_back(f.accuracy);
        f1.push_back(f.macro_f1);
    }
    mean_acc = metrics::mean(acc);
    mean_f1 = metrics::mean(f1);
    const auto run_acc = run_means(Metric::accuracy);
    runs = run_acc.size();
    std_acc = metrics::sample_std(run_acc);
    std_f1 = metrics::sample_std(run_means(Metric::macro_f1));
}

namespace {

void check_inputs(const embedstore::EmbeddingMatrix& embeddings, std::span<const metrics::Label> labels,
                  const ProbeConfig& cfg) {
    cfg.validate();
    if (labels.size() != embeddings.rows()) {
        throw InvalidArgument("probe: " + std::to_string(labels.size()) + " labels for " +
                              std::to_string(embeddings.rows()) + " rows");
    }
    if (count_classes(labels) < 2) throw InvalidArgument("fewer than 2 classes");
}

}  // namespace

ProbeResult train_probe(const embedstore::EmbeddingMatrix& embeddings, std::span<const metrics::Label> labels,
                        const ProbeConfig& cfg) {
    check_inputs(embeddings, labels, cfg);
    if (embeddings.rows() < cfg.folds) throw InvalidArgument("fewer rows than folds");
    const std::size_t n_classes = *std::max_element(labels.begin(), labels.end()) + 1;

    ProbeResult result;
    result.config = cfg;
    result.n_classes = n_classes;
    for (std::size_t run = 0; run < cfg.runs; ++run) {
        const std::uint64_t run_seed = derive_seed(cfg.seed, run);
        const auto splits = stratified_folds(labels, cfg.folds, run_seed);
        for (std::size_t f = 0; f < splits.size(); ++f) {
            auto score = train_fold(embeddings, labels, n_classes, splits[f], cfg, derive_seed(run_seed, 100 + f));
            score.run = run;
            score.fold = f;
            result.per_fold.push_back(std::move(score));
        }
    }
    result.aggregate();
    return result;
}

ProbeResult train_probe_fixed_split(const embedstore::EmbeddingMatrix& embeddings,
                                    std::span<const metrics::Label> labels, const Split& split,
                                    const ProbeConfig& cfg) {
    check_inputs(embeddings, labels, cfg);
    for (auto v : {&split.train, &split.validation}) {
        for (auto i : *v) {
            if (i >= labels.size()) throw InvalidArgument("split index out of range");
        }
    }
    const std::size_t n_classes = *std::max_element(labels.begin(), labels.end()) + 1;
    ProbeResult result;
    result.config = cfg;
    result.n_classes = n_classes;
    for (std::size_t run = 0; run < cfg.runs; ++run) {
        auto score = train_fold(embeddings, labels, n_classes, split, cfg, derive_seed(derive_seed(cfg.seed, run), 100));
        score.run = run;
        result.per_fold.push_back(std::move(score));
    }
    result.aggregate();
    return result;
}

// ---------------------------------------------------------------------------

std::string to_json(const ProbeResult& r, const std::string& method, const std::string& dataset) {
    nlohmann::ordered_json j;
    j["kind"] = "probe";
    j["method"] = method;
    j["dataset"] = dataset;
    j["config"] = {{"lr", r.config.lr},         {"batch", r.config.batch},
                   {"epochs", r.config.epochs}, {"folds", r.config.folds},
                   {"regularization", r.config.regularization},
                   {"runs", r.config.runs},     {"seed", r.config.seed}};
    j["n_classes"] = r.n_classes;
    j["runs"] = r.runs;
    j["mean_acc"] = r.mean_acc;
    j["std_acc"] = r.std_acc;
    j["mean_f1"] = r.mean_f1;
    j["std_f1"] = r.std_f1;
    j["per_fold"] = nlohmann::ordered_json::array();
    for (const auto& f : r.per_fold) {
        j["per_fold"].push_back({{"run", f.run},
                                 {"fold", f.fold},
                                 {"accuracy", f.accuracy},
                                 {"macro_f1", f.macro_f1},
                                 {"best_epoch", f.best_epoch},
                                 {"epoch_val_accuracy", f.epoch_val_accuracy}});
    }
    return j.dump(2) + "\n";
}

NamedProbeResult probe_result_from_json(const std::string& text) {
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object() || j.value("kind", std::string()) != "probe") {
        throw InvalidArgument("not a probe result document");
    }
    try {
        NamedProbeResult out;
        out.method = j.at("method").get<std::string>();
        out.dataset = j.at("dataset").get<std::string>();
        auto& r = out.result;
        const auto& c = j.at("config");
        r.config.lr = c.at("lr").get<double>();
        r.config.batch = c.at("batch").get<std::size_t>();
        r.config.epochs = c.at("epochs").get<std::size_t>();
        r.config.folds = c.at("folds").get<std::size_t>();
        r.config.regularization = c.at("regularization").get<double>();
        r.config.runs = c.at("runs").get<std::size_t>();
        r.config.seed = c.at("seed").get<std::uint64_t>();
        r.n_classes = j.at("n_classes").get<std::size_t>();
        for (const auto& f : j.at("per_fold")) {
            FoldScore s;
            s.run = f.at("run").get<std::size_t>();
            s.fold = f.at("fold").get<std::size_t>();
            s.accuracy = f.at("accuracy").get<double>();
            s.macro_f1 = f.at("macro_f1").get<double>();
            s.best_epoch = f.at("best_epoch").get<std::size_t>();
            s.epoch_val_accuracy = f.at("epoch_val_accuracy").get<std::vector<double>>();
            r.per_fold.push_back(std::move(s));
        }
        r.aggregate();
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed probe result: ") + e.what());
    }
}

}  // namespace sdb::probe
