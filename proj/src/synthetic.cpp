#include <algorithm>
#include <cctype>
#include <cstdio>
#include <numeric>

#include "scidocbench/corpus.hpp"
#include "scidocbench/errors.hpp"
#include "scidocbench/rng.hpp"

namespace sdb::corpus {

namespace {

// Mixture weights of a journal's token distribution.
constexpr double kBackgroundMass = 0.03;
constexpr double kFieldCoreMass = 0.42;
constexpr double kSubcategoryMass = 0.35;
constexpr double kJournalMass = 0.20;

constexpr int kMinDocTokens = 50;
constexpr int kMaxDocTokens = 150;
constexpr int kMinTitleTokens = 6;
constexpr int kMaxTitleTokens = 12;
constexpr double kSecondSubcategoryRate = 0.25;

struct Block {
    std::size_t begin = 0;
    std::size_t size = 0;
};

void add_uniform(std::vector<double>& w, Block block, double mass) {
    if (block.size == 0) return;
    const double each = mass / static_cast<double>(block.size);
    for (std::size_t i = 0; i < block.size; ++i) w[block.begin + i] += each;
}

std::size_t sample(const std::vector<double>& cumulative, Rng& rng) {
    const double u = rng.uniform() * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

std::string render(const std::vector<double>& cumulative, int n_tokens, Rng& rng) {
    std::string text;
    for (int t = 0; t < n_tokens; ++t) {
        if (t) text.push_back(' ');
        text += SyntheticModel::token_text(sample(cumulative, rng));
    }
    return text;
}

}  // namespace

void SyntheticSpec::validate() const {
    if (n_fields < 1 || journals_per_field < 1 || docs_per_journal < 1 || vocab_size < 1) {
        throw InvalidArgument("synthetic corpus counts must all be >= 1");
    }
    if (vocab_size / 50 + n_fields > vocab_size) {
        throw InvalidArgument("vocab_size too small to give every field a disjoint vocabulary");
    }
}

std::string SyntheticModel::token_text(std::size_t index) {
    static constexpr char consonants[] = "bdfghjklmnprstvwxyzc";
    static constexpr char vowels[] = "aeiou";
    std::string digits;
    std::size_t n = index;
    do {
        const std::size_t syl = n % 100;
        digits.insert(digits.begin(), vowels[syl % 5]);
        digits.insert(digits.begin(), consonants[syl / 5]);
        n /= 100;
    } while (n > 0);
    if (digits.size() < 4) digits.insert(0, "ba");
    return digits;
}

SyntheticModel::SyntheticModel(const SyntheticSpec& spec) : spec_(spec) {
    spec_.validate();
    Rng rng(derive_seed(spec.seed, 1));

    const auto& taxonomy = SubcategoryTaxonomy::shipped();
    const bool use_taxonomy = spec.n_fields <= taxonomy.fields().size();

    const std::size_t background = spec.vocab_size / 50;
    const std::size_t block_size = (spec.vocab_size - background) / spec.n_fields;
    const std::size_t pool_size_target = std::max<std::size_t>(1, (spec.journals_per_field + 1) / 2);

    for (std::size_t f = 0; f < spec.n_fields; ++f) {
        std::vector<std::string> pool;
        if (use_taxonomy) {
            const auto& tf = taxonomy.fields()[f];
            field_names_.push_back(tf.name);
            field_archives_.push_back(tf.name == "Phys" ? "physics" : tf.archives.front());
            std::vector<std::string> codes;
            for (const auto& s : tf.subcategories) codes.push_back(s.code);
            rng.shuffle(std::span<std::string>(codes));
            codes.resize(std::min(codes.size(), pool_size_target));
            std::sort(codes.begin(), codes.end());
            pool = std::move(codes);
        } else {
            char name[16];
            std::snprintf(name, sizeof name, "F%02zu", f + 1);
            field_names_.push_back(name);
            std::string archive = name;
            archive[0] = 'f';
            field_archives_.push_back(archive);
            const std::size_t n = std::min<std::size_t>(4, pool_size_target);
            for (std::size_t s = 0; s < n; ++s) pool.push_back(archive + ".S" + std::to_string(s + 1));
        }

        const Block field_block{background + f * block_size, block_size};
        const std::size_t slice = std::max<std::size_t>(1, block_size / pool.size());
        const std::size_t journal_slice = std::max<std::size_t>(1, block_size / 10);

        for (std::size_t j = 0; j < spec.journals_per_field; ++j) {
            const std::size_t primary = j % pool.size();
            std::vector<std::string> subcats{pool[primary]};
            for (std::size_t s = 0; s < pool.size(); ++s) {
                if (s != primary) subcats.push_back(pool[s]);
            }
            journal_subcats_.push_back(std::move(subcats));

            std::vector<double> w(spec.vocab_size, 0.0);
            const double bg_mass = background > 0 ? kBackgroundMass : 0.0;
            add_uniform(w, {0, background}, bg_mass);
            add_uniform(w, field_block, kFieldCoreMass);
            Block sub_block{field_block.begin + std::min(primary * slice, block_size - 1), slice};
            sub_block.size = std::min(sub_block.size, field_block.begin + block_size - sub_block.begin);
            add_uniform(w, sub_block, kSubcategoryMass);

            // journal-specific bias: exponential weights on a random subset of the field block
            std::vector<double> bias(journal_slice);
            double total = 0.0;
            for (auto& b : bias) total += (b = rng.exponential());
            for (std::size_t k = 0; k < journal_slice; ++k) {
                w[field_block.begin + rng.index(block_size)] += kJournalMass * bias[k] / total;
            }

            const double sum = std::accumulate(w.begin(), w.end(), 0.0);
            for (auto& x : w) x /= sum;
            journal_weights_.push_back(std::move(w));
        }
    }
}

std::size_t SyntheticModel::field_of_journal(std::size_t journal) const {
    if (journal >= n_journals()) throw InvalidArgument("journal index out of range");
    return journal / spec_.journals_per_field;
}

std::string SyntheticModel::journal_name(std::size_t journal) const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s Journal %02zu", field_names_.at(field_of_journal(journal)).c_str(),
                  journal % spec_.journals_per_field + 1);
    return buf;
}

double distribution_overlap(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw InvalidArgument("distribution sizes differ");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::min(p[i], q[i]);
    return s;
}

std::vector<AbstractRecord> generate_synthetic_corpus(const SyntheticSpec& spec) {
    const SyntheticModel model(spec);
    Rng rng(derive_seed(spec.seed, 2));

    std::vector<AbstractRecord> records;
    records.reserve(model.n_journals() * spec.docs_per_journal);
    std::size_t serial = 0;
    for (std::size_t j = 0; j < model.n_journals(); ++j) {
        const auto& w = model.journal_distribution(j);
        std::vector<double> cumulative(w.size());
        std::partial_sum(w.begin(), w.end(), cumulative.begin());
        const auto& subcats = model.journal_subcategories(j);
        const std::string journal = model.journal_name(j);
        const std::size_t field = model.field_of_journal(j);

        for (std::size_t d = 0; d < spec.docs_per_journal; ++d) {
            AbstractRecord r;
            char id[32];
            std::snprintf(id, sizeof id, "syn-%06zu", serial++);
            r.id = id;
            r.journal = journal;
            r.source = Source::arxiv;
            r.field_labels = {model.field_archive(field)};
            r.subcategories = {subcats.front()};
            if (subcats.size() > 1 && rng.uniform() < kSecondSubcategoryRate) {
                r.subcategories.insert(subcats[1 + rng.index(subcats.size() - 1)]);
            }
            r.title = render(cumulative, static_cast<int>(rng.between(kMinTitleTokens, kMaxTitleTokens)), rng);
            r.title[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(r.title[0])));
            r.abstract = render(cumulative, static_cast<int>(rng.between(kMinDocTokens, kMaxDocTokens)), rng);
            // first document of every journal is dated in 2021 so the default filter keeps the journal
            const int year = d == 0 ? 2021 : static_cast<int>(rng.between(2016, 2021));
            r.date = Date{year, static_cast<int>(rng.between(1, 12)), static_cast<int>(rng.between(1, 28))};
            records.push_back(std::move(r));
        }
    }
    return records;
}

}  // namespace sdb::corpus
