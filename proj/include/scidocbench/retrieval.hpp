#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scidocbench/corpus.hpp"
#include "scidocbench/embedstore.hpp"

namespace sdb::retrieval {

struct Pair {
    std::string id_a;
    std::string id_b;
    std::uint8_t label = 0;  // 1 iff the subcategory sets intersect
};

struct ScoredPair {
    std::string id_a;
    std::string id_b;
    double score = 0.0;
    std::uint8_t label = 0;
};

struct RankedPairSet {
    std::string field;
    std::vector<ScoredPair> pairs;  // rank order: descending score, ties by (id_a, id_b)
    std::size_t positives = 0;
    std::size_t negatives = 0;
    double average_precision = 0.0;
    double auc = 0.0;
};

inline constexpr std::size_t kDefaultMaxPairs = 2'000'000;

// All unordered pairs (i < j in input order) when C(n, 2) <= max_pairs,
// otherwise max_pairs distinct pairs drawn uniformly without replacement
// (deterministic given seed), emitted in pair-index order. Throws with fewer
// than 2 records or a record lacking subcategories.
std::vector<Pair> build_pairs(std::span<const corpus::AbstractRecord> records, std::size_t max_pairs,
                              std::uint64_t seed);

// Pearson score per pair, ranked, then AP and AUC. Throws on a missing id or
// when only one label class is present.
RankedPairSet score_field(const embedstore::EmbeddingMatrix& embeddings, std::span<const Pair> pairs,
                          std::string field = {});

struct FieldRow {
    std::string field;
    std::optional<double> average_precision;  // empty: field absent
    std::optional<double> auc;
    std::size_t records = 0;
    std::size_t pairs = 0;
    std::size_t positives = 0;
    std::string note;  // why the row is absent
};

// Records eligible for a field carry at least one of its subcategory codes;
// their subcategory sets are restricted to that field before pairing.
std::vector<corpus::AbstractRecord> field_subset(std::span<const corpus::AbstractRecord> records,
                                                 const corpus::TaxonomyField& field);

// One row per taxonomy field, in taxonomy order. Fields with fewer than two
// eligible records, or whose pairs are all one class, are marked absent.
std::vector<FieldRow> evaluate_all_fields(std::span<const corpus::AbstractRecord> records,
                                          const embedstore::EmbeddingMatrix& embeddings,
                                          const corpus::SubcategoryTaxonomy& taxonomy, std::size_t max_pairs,
                                          std::uint64_t seed);

// Mean AP over the fields that are present.
double mean_average_precision(std::span<const FieldRow> rows);

}  // namespace sdb::retrieval
