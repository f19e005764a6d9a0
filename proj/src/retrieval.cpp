#include "scidocbench/retrieval.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "scidocbench/errors.hpp"
#include "scidocbench/metrics.hpp"
#include "scidocbench/rng.hpp"

namespace sdb::retrieval {

namespace {

bool intersects(const std::set<std::string>& a, const std::set<std::string>& b) {
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i == *j) return true;
        if (*i < *j) {
            ++i;
        } else {
            ++j;
        }
    }
    return false;
}

}  // namespace

std::vector<Pair> build_pairs(std::span<const corpus::AbstractRecord> records, std::size_t max_pairs,
                              std::uint64_t seed) {
    const std::uint64_t n = records.size();
    if (n < 2) throw InvalidArgument("build_pairs: need at least 2 records");
    for (const auto& r : records) {
        if (r.subcategories.empty()) throw InvalidArgument("build_pairs: record " + r.id + " has no subcategories");
    }
    const std::uint64_t total = n * (n - 1) / 2;

    std::vector<std::uint64_t> chosen;
    if (total <= max_pairs) {
        chosen.resize(total);
        std::iota(chosen.begin(), chosen.end(), 0);
    } else {
        // Floyd's sampling of max_pairs distinct indices from [0, total)
        Rng rng(derive_seed(seed, 40));
        std::unordered_set<std::uint64_t> picked;
        picked.reserve(max_pairs * 2);
        for (std::uint64_t j = total - max_pairs; j < total; ++j) {
            const std::uint64_t t = rng.index(j + 1);
            picked.insert(picked.count(t) ? j : t);
        }
        chosen.assign(picked.begin(), picked.end());
        std::sort(chosen.begin(), chosen.end());
    }

    std::vector<Pair> pairs;
    pairs.reserve(chosen.size());
    std::uint64_t row = 0;
    std::uint64_t row_start = 0;  // pair index of (row, row + 1)
    for (auto p : chosen) {
        while (p >= row_start + (n - row - 1)) {
            row_start += n - row - 1;
            ++row;
        }
        const std::uint64_t col = row + 1 + (p - row_start);
        const auto& a = records[row];
        const auto& b = records[col];
        pairs.push_back({a.id, b.id, static_cast<std::uint8_t>(intersects(a.subcategories, b.subcategories))});
    }
    return pairs;
}

RankedPairSet score_field(const embedstore::EmbeddingMatrix& embeddings, std::span<const Pair> pairs,
                          std::string field) {
    RankedPairSet set;
    set.field = std::move(field);
    set.pairs.reserve(pairs.size());
    for (const auto& p : pairs) {
        if (p.id_a == p.id_b) throw InvalidArgument("self-pair for id " + p.id_a);
        const double s = metrics::pearson(embeddings.row(embeddings.row_of(p.id_a)),
                                          embeddings.row(embeddings.row_of(p.id_b)));
        set.pairs.push_back({p.id_a, p.id_b, s, p.label});
        (p.label ? set.positives : set.negatives)++;
    }
    if (set.positives == 0 || set.negatives == 0) {
        throw DegenerateInput("score_field: pairs must include both relevant and irrelevant labels");
    }
    std::sort(set.pairs.begin(), set.pairs.end(), [](const ScoredPair& a, const ScoredPair& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.id_a != b.id_a) return a.id_a < b.id_a;
        return a.id_b < b.id_b;
    });
    std::vector<std::uint8_t> ranked(set.pairs.size());
    std::vector<double> scores(set.pairs.size());
    for (std::size_t i = 0; i < set.pairs.size(); ++i) {
        ranked[i] = set.pairs[i].label;
        scores[i] = set.pairs[i].score;
    }
    set.average_precision = metrics::average_precision(ranked);
    set.auc = metrics::auc(scores, ranked);
    return set;
}

std::vector<corpus::AbstractRecord> field_subset(std::span<const corpus::AbstractRecord> records,
                                                 const corpus::TaxonomyField& field) {
    std::vector<corpus::AbstractRecord> out;
    for (const auto& r : records) {
        std::set<std::string> kept;
        for (const auto& s : r.subcategories) {
            if (field.contains(s)) kept.insert(s);
        }
        if (kept.empty()) continue;
        auto copy = r;
        copy.subcategories = std::move(kept);
        out.push_back(std::move(copy));
    }
    return out;
}

std::vector<FieldRow> evaluate_all_fields(std::span<const corpus::AbstractRecord> records,
                                          const embedstore::EmbeddingMatrix& embeddings,
                                          const corpus::SubcategoryTaxonomy& taxonomy, std::size_t max_pairs,
                                          std::uint64_t seed) {
    std::vector<FieldRow> rows;
    for (std::size_t f = 0; f < taxonomy.fields().size(); ++f) {
        const auto& field = taxonomy.fields()[f];
        FieldRow row;
        row.field = field.name;
        const auto subset = field_subset(records, field);
        row.records = subset.size();
        if (subset.size() < 2) {
            row.note = "fewer than 2 eligible records";
            rows.push_back(std::move(row));
            continue;
        }
        const auto pairs = build_pairs(subset, max_pairs, derive_seed(seed, f));
        row.pairs = pairs.size();
        row.positives = static_cast<std::size_t>(
            std::count_if(pairs.begin(), pairs.end(), [](const Pair& p) { return p.label == 1; }));
        if (row.positives == 0 || row.positives == pairs.size()) {
            row.note = "all pairs share one label";
            rows.push_back(std::move(row));
            continue;
        }
        const auto scored = score_field(embeddings, pairs, field.name);
        row.average_precision = scored.average_precision;
        row.auc = scored.auc;
        rows.push_back(std::move(row));
    }
    return rows;
}

double mean_average_precision(std::span<const FieldRow> rows) {
    std::vector<double> aps;
    for (const auto& r : rows) {
        if (r.average_precision) aps.push_back(*r.average_precision);
    }
    if (aps.empty()) throw DegenerateInput("no field produced an average precision");
    return metrics::mean(aps);
}

}  // namespace sdb::retrieval
