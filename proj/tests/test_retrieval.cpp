#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "oracles.hpp"
#include "scidocbench/encoder.hpp"
#include "scidocbench/errors.hpp"
#include "scidocbench/retrieval.hpp"

using namespace sdb;
using namespace sdb::retrieval;
using corpus::AbstractRecord;
using embedstore::EmbeddingMatrix;

namespace {

AbstractRecord rec(std::string id, std::set<std::string> subcats) {
    AbstractRecord r;
    r.id = std::move(id);
    r.title = "t";
    r.abstract = "a";
    r.journal = "j";
    r.source = corpus::Source::arxiv;
    r.date = {2020, 1, 1};
    r.subcategories = std::move(subcats);
    for (const auto& s : r.subcategories) r.field_labels.insert(s.substr(0, s.find('.')) == "cs" ? "CS" : "Math");
    return r;
}

bool intersects(const std::set<std::string>& a, const std::set<std::string>& b) {
    for (const auto& x : a) {
        if (b.count(x)) return true;
    }
    return false;
}

// Each record gets a noisy one-hot of its first subcategory.
EmbeddingMatrix embed(const std::vector<AbstractRecord>& records, double noise, std::uint64_t seed) {
    std::vector<std::string> codes;
    for (const auto& r : records) {
        for (const auto& s : r.subcategories) {
            if (std::find(codes.begin(), codes.end(), s) == codes.end()) codes.push_back(s);
        }
    }
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n01;
    std::vector<std::string> ids;
    std::vector<double> values;
    const std::size_t dim = codes.size() + 2;
    for (const auto& r : records) {
        ids.push_back(r.id);
        const auto c = std::find(codes.begin(), codes.end(), *r.subcategories.begin()) - codes.begin();
        for (std::size_t j = 0; j < dim; ++j) values.push_back((std::size_t(c) == j ? 1.0 : 0.0) + noise * n01(gen));
    }
    return EmbeddingMatrix(ids, dim, values);
}

}  // namespace

TEST(Retrieval, PairLabelsFollowSetIntersection) {
    const std::vector<AbstractRecord> rs{rec("a", {"cs.LG", "cs.AI"}), rec("b", {"cs.AI"}), rec("c", {"cs.CV"}),
                                         rec("d", {"cs.CV", "cs.LG"}), rec("e", {"cs.DS"})};
    const auto pairs = build_pairs(rs, 1000, 0);
    ASSERT_EQ(pairs.size(), 10u);  // C(5, 2)
    std::size_t k = 0;
    for (std::size_t i = 0; i < rs.size(); ++i) {
        for (std::size_t j = i + 1; j < rs.size(); ++j, ++k) {
            EXPECT_EQ(pairs[k].id_a, rs[i].id);
            EXPECT_EQ(pairs[k].id_b, rs[j].id);
            EXPECT_EQ(pairs[k].label, intersects(rs[i].subcategories, rs[j].subcategories) ? 1 : 0);
        }
    }
    EXPECT_EQ(pairs[0].label, 1);  // a, b share cs.AI
    EXPECT_EQ(pairs[1].label, 0);  // a, c
    EXPECT_EQ(pairs[2].label, 1);  // a, d share cs.LG
}

TEST(Retrieval, SampledPairsAreDistinctAndDeterministic) {
    std::vector<AbstractRecord> rs;
    std::mt19937_64 gen(1);
    const std::vector<std::string> codes{"cs.LG", "cs.AI", "cs.CV", "cs.CL"};
    for (int i = 0; i < 120; ++i) rs.push_back(rec("r" + std::to_string(i), {codes[gen() % 4]}));
    const auto a = build_pairs(rs, 500, 7), b = build_pairs(rs, 500, 7), c = build_pairs(rs, 500, 8);
    ASSERT_EQ(a.size(), 500u);
    std::set<std::pair<std::string, std::string>> seen;
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < rs.size(); ++i) pos[rs[i].id] = i;
    std::pair<std::size_t, std::size_t> prev{0, 0};
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].id_a, b[k].id_a);
        EXPECT_EQ(a[k].id_b, b[k].id_b);
        EXPECT_TRUE(seen.insert({a[k].id_a, a[k].id_b}).second);
        const std::pair<std::size_t, std::size_t> cur{pos[a[k].id_a], pos[a[k].id_b]};
        EXPECT_LT(cur.first, cur.second);
        if (k) EXPECT_LT(prev, cur);  // pair-index order
        prev = cur;
    }
    bool differs = false;
    for (std::size_t k = 0; k < a.size(); ++k) differs |= a[k].id_a != c[k].id_a || a[k].id_b != c[k].id_b;
    EXPECT_TRUE(differs);
    EXPECT_EQ(build_pairs(rs, 120 * 119 / 2, 0).size(), 120u * 119u / 2u);
}

TEST(Retrieval, Preconditions) {
    EXPECT_THROW(build_pairs(std::vector<AbstractRecord>{rec("a", {"cs.LG"})}, 10, 0), InvalidArgument);
    EXPECT_THROW(build_pairs(std::vector<AbstractRecord>{rec("a", {"cs.LG"}), rec("b", {})}, 10, 0), InvalidArgument);
    const std::vector<AbstractRecord> same{rec("a", {"cs.LG"}), rec("b", {"cs.LG"}), rec("c", {"cs.LG"})};
    const auto m = embed(same, 0.1, 0);
    EXPECT_THROW(score_field(m, build_pairs(same, 10, 0)), DegenerateInput);
    std::vector<Pair> ghost{{"a", "zz", 1}, {"a", "b", 0}};
    EXPECT_THROW(score_field(m, ghost), InvalidArgument);
}

TEST(Retrieval, PerfectSeparation) {
    std::vector<AbstractRecord> rs;
    const std::vector<std::string> codes{"cs.LG", "cs.AI", "cs.CV"};
    for (int i = 0; i < 30; ++i) rs.push_back(rec("r" + std::to_string(i), {codes[i % 3]}));
    const auto m = embed(rs, 0.0, 0);
    const auto ranked = score_field(m, build_pairs(rs, 10000, 0), "CS");
    EXPECT_EQ(ranked.average_precision, 1.0);
    EXPECT_EQ(ranked.auc, 1.0);
    EXPECT_EQ(ranked.positives, 3u * 45u);
    EXPECT_EQ(ranked.negatives, 435u - 135u);
}

TEST(Retrieval, ScoresMatchOracles) {
    std::vector<AbstractRecord> rs;
    std::mt19937_64 gen(3);
    const std::vector<std::string> codes{"cs.LG", "cs.AI", "cs.CV", "cs.CL", "cs.DS"};
    for (int i = 0; i < 40; ++i) {
        std::set<std::string> s{codes[gen() % 5]};
        if (gen() % 3 == 0) s.insert(codes[gen() % 5]);
        rs.push_back(rec("r" + std::to_string(i), s));
    }
    const auto m = embed(rs, 0.7, 4);
    const auto pairs = build_pairs(rs, 100000, 0);
    const auto ranked = score_field(m, pairs);
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    for (const auto& p : pairs) {
        const auto& a = m.row(m.row_of(p.id_a));
        const auto& b = m.row(m.row_of(p.id_b));
        scores.push_back(oracle::pearson({a.begin(), a.end()}, {b.begin(), b.end()}));
        labels.push_back(p.label);
    }
    EXPECT_NEAR(ranked.auc, oracle::auc(scores, labels), 1e-12);
    EXPECT_NEAR(ranked.average_precision, oracle::average_precision(oracle::rank_by_score(scores, labels)), 1e-9);
    for (std::size_t k = 1; k < ranked.pairs.size(); ++k) {
        const auto& x = ranked.pairs[k - 1];
        const auto& y = ranked.pairs[k];
        EXPECT_TRUE(x.score > y.score || (x.score == y.score && std::tie(x.id_a, x.id_b) < std::tie(y.id_a, y.id_b)));
    }
}

TEST(Retrieval, SwappingPairOrderChangesNothing) {
    std::vector<AbstractRecord> rs;
    const std::vector<std::string> codes{"cs.LG", "cs.AI", "cs.CV"};
    for (int i = 0; i < 20; ++i) rs.push_back(rec("r" + std::to_string(i), {codes[(i * 7) % 3]}));
    const auto m = embed(rs, 0.8, 5);
    auto pairs = build_pairs(rs, 1000, 0);
    const auto a = score_field(m, pairs);
    for (auto& p : pairs) std::swap(p.id_a, p.id_b);
    std::reverse(pairs.begin(), pairs.end());
    const auto b = score_field(m, pairs);
    EXPECT_NEAR(a.auc, b.auc, 1e-15);
    EXPECT_EQ(a.positives, b.positives);
}

TEST(Retrieval, ShuffledEmbeddingsScoreNearPrevalence) {
    std::vector<AbstractRecord> rs;
    const std::vector<std::string> codes{"cs.LG", "cs.AI", "cs.CV", "cs.CL"};
    for (int i = 0; i < 200; ++i) rs.push_back(rec("r" + std::to_string(i), {codes[i % 4]}));
    const auto signal = embed(rs, 0.3, 6);
    // reassign rows to ids at random: any label information is destroyed
    std::vector<std::string> ids = signal.ids();
    std::mt19937_64 gen(7);
    std::shuffle(ids.begin(), ids.end(), gen);
    const EmbeddingMatrix shuffled(ids, signal.dim(), signal.values());
    const auto pairs = build_pairs(rs, 100000, 0);
    const auto good = score_field(signal, pairs), bad = score_field(shuffled, pairs);
    const double prevalence = double(good.positives) / double(pairs.size());
    EXPECT_GT(good.average_precision, 0.9);
    EXPECT_NEAR(bad.average_precision, prevalence, 0.05);
    EXPECT_NEAR(bad.auc, 0.5, 0.05);
}

TEST(Retrieval, FieldSubsetRestrictsSubcategories) {
    const auto& tax = corpus::SubcategoryTaxonomy::shipped();
    auto mixed = rec("m", {"cs.LG", "math.ST"});
    mixed.field_labels = {"CS", "Math"};
    const std::vector<AbstractRecord> rs{mixed, rec("c", {"cs.AI"}), rec("x", {"math.PR"})};
    const auto cs = field_subset(rs, *tax.find("CS"));
    ASSERT_EQ(cs.size(), 2u);
    EXPECT_EQ(cs[0].subcategories, (std::set<std::string>{"cs.LG"}));
    const auto math = field_subset(rs, *tax.find("Math"));
    ASSERT_EQ(math.size(), 2u);
    EXPECT_EQ(math[0].subcategories, (std::set<std::string>{"math.ST"}));
}

TEST(Retrieval, AbsentFieldsAreMarked) {
    const auto& tax = corpus::SubcategoryTaxonomy::shipped();
    std::vector<AbstractRecord> rs;
    const std::vector<std::string> codes{"cs.LG", "cs.AI", "cs.CV"};
    for (int i = 0; i < 12; ++i) rs.push_back(rec("r" + std::to_string(i), {codes[i % 3]}));
    rs.push_back(rec("m0", {"math.ST"}));
    rs.push_back(rec("m1", {"math.ST"}));
    const auto m = embed(rs, 0.5, 8);
    const auto rows = evaluate_all_fields(rs, m, tax, 1000, 0);
    ASSERT_EQ(rows.size(), tax.fields().size());
    for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].field, tax.fields()[i].name);
    EXPECT_TRUE(rows[0].average_precision.has_value());
    EXPECT_EQ(rows[0].records, 12u);
    EXPECT_EQ(rows[0].pairs, 66u);
    EXPECT_FALSE(rows[1].average_precision.has_value());  // Math: a single positive pair
    EXPECT_EQ(rows[1].note, "all pairs share one label");
    const auto econ = std::find_if(rows.begin(), rows.end(), [](const FieldRow& r) { return r.field == "Econ"; });
    ASSERT_NE(econ, rows.end());
    EXPECT_FALSE(econ->average_precision.has_value());
    EXPECT_FALSE(econ->auc.has_value());
    EXPECT_EQ(econ->records, 0u);
    EXPECT_EQ(econ->note, "fewer than 2 eligible records");
    EXPECT_EQ(mean_average_precision(rows), *rows[0].average_precision);
}

TEST(Retrieval, TrainedEncoderBeatsInitialization) {
    corpus::SyntheticSpec spec;
    spec.docs_per_journal = 30;
    const auto records = corpus::generate_synthetic_corpus(spec);
    std::vector<std::string> names;
    for (const auto& r : records) names.push_back(r.journal);
    const auto labels = corpus::JournalLabelMap::from_names(names);
    encoder::TrainConfig cfg;
    cfg.seed = 1;
    const auto trained = encoder::train(records, labels, cfg);
    const auto init = encoder::initialize(cfg.feature_dim, cfg.hidden_dim, labels.size(), cfg.seed);
    const auto& tax = corpus::SubcategoryTaxonomy::shipped();
    const auto good = evaluate_all_fields(records, encoder::extract(trained.params, records), tax, 200000, 0);
    const auto base = evaluate_all_fields(records, encoder::extract(init, records), tax, 200000, 0);
    int wins = 0;
    for (std::size_t i = 0; i < good.size(); ++i) {
        ASSERT_TRUE(good[i].average_precision && base[i].average_precision) << good[i].field;
        wins += *good[i].average_precision >= *base[i].average_precision;
    }
    EXPECT_GE(wins, 5);
}
