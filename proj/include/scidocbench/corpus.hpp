#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sdb::corpus {

enum class Source { pubmed, arxiv };

std::string_view to_string(Source source);
Source source_from_string(std::string_view text);

struct Date {
    int year = 0;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;

    // YYYY-MM-DD
    std::string iso() const;
    // Throws InvalidArgument unless `text` is a valid YYYY-MM-DD calendar date.
    static Date parse_iso(std::string_view text);
    bool valid() const;
};

struct AbstractRecord {
    std::string id;
    std::string title;
    std::string abstract;
    std::string journal;
    Source source = Source::pubmed;
    Date date;
    std::set<std::string> field_labels;
    std::set<std::string> subcategories;

    bool operator==(const AbstractRecord&) const = default;
};

// Throws InvalidArgument on empty abstract/journal/id or an invalid date.
void validate(const AbstractRecord& record);

// Checks id uniqueness across the corpus in addition to per-record validity.
void validate_corpus(std::span<const AbstractRecord> records);

// Bijection journal name <-> class index in [0, size()).
class JournalLabelMap {
public:
    JournalLabelMap() = default;
    // Indices are assigned in lexicographic order of the (deduplicated) names.
    static JournalLabelMap from_names(std::vector<std::string> names);

    std::size_t size() const noexcept { return names_.size(); }
    bool contains(std::string_view journal) const;
    // Throws InvalidArgument naming the journal when absent.
    std::size_t index_of(std::string_view journal) const;
    const std::string& name_of(std::size_t index) const;
    const std::vector<std::string>& names() const noexcept { return names_; }

    bool operator==(const JournalLabelMap& other) const { return names_ == other.names_; }

private:
    std::vector<std::string> names_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

struct FilterConfig {
    std::size_t max_per_journal = 300;
    std::size_t min_per_journal = 100;
    int required_recent_year = 2021;

    void validate() const;
};

struct FilterResult {
    std::vector<AbstractRecord> records;
    JournalLabelMap labels;
};

// Drops journals with fewer than min_per_journal records or no record dated in
// required_recent_year, caps the rest at max_per_journal (most recent first,
// ascending id on equal dates). Survivors keep their input order.
FilterResult filter_journals(std::span<const AbstractRecord> records, const FilterConfig& cfg);

// Record-level rejection collected while parsing.
struct Reject {
    std::string locator;  // PMID, "article #n" or "line n"
    std::string reason;
};

struct ParseReport {
    std::vector<AbstractRecord> records;
    std::vector<Reject> rejects;
    std::size_t skipped_no_abstract = 0;
    std::size_t skipped_non_english = 0;
};

// PubMed e-utils efetch XML (PubmedArticleSet). Throws ParseError with the
// byte offset on malformed XML; record-level problems go to `rejects`.
ParseReport parse_pubmed_xml(std::string_view xml_document);

// arXiv metadata snapshot: one JSON object per line. Unparseable lines are
// rejected with their 1-based line number.
ParseReport parse_arxiv_metadata(std::istream& lines);

// "cs.LG" -> "cs", "hep-th" -> "hep-th".
std::string major_category(std::string_view subcategory);

// Canonical interchange: one JSON object per line with fields id, title,
// abstract, journal, source, date, field_labels, subcategories.
void write_jsonl(std::ostream& out, std::span<const AbstractRecord> records);
std::vector<AbstractRecord> read_jsonl(std::istream& in);
std::string to_json_line(const AbstractRecord& record);
AbstractRecord from_json_line(std::string_view line);

void write_jsonl_file(const std::string& path, std::span<const AbstractRecord> records);
std::vector<AbstractRecord> read_jsonl_file(const std::string& path);

// ---------------------------------------------------------------------------
// arXiv subcategory taxonomy (six fields).

struct Subcategory {
    std::string code;  // e.g. "cs.LG"
    std::string name;  // e.g. "Machine Learning"
};

struct TaxonomyField {
    std::string name;                   // e.g. "CS"
    std::string title;                  // e.g. "Computer Science"
    std::vector<std::string> archives;  // arXiv archive prefixes, e.g. {"cs"}
    std::vector<Subcategory> subcategories;

    bool contains(std::string_view code) const;
};

class SubcategoryTaxonomy {
public:
    SubcategoryTaxonomy() = default;
    explicit SubcategoryTaxonomy(std::vector<TaxonomyField> fields);

    // The six fields transcribed from the arXiv category list: CS 40, Math 32,
    // Phys 51, EESS 4, Econ 3, Stat 6.
    static const SubcategoryTaxonomy& shipped();
    static SubcategoryTaxonomy from_json(std::string_view text);
    static SubcategoryTaxonomy load(const std::string& path);
    std::string to_json() const;

    const std::vector<TaxonomyField>& fields() const noexcept { return fields_; }
    const TaxonomyField* find(std::string_view field_name) const;
    // Field whose archive list contains `archive`, if any.
    const TaxonomyField* field_for_archive(std::string_view archive) const;

    bool operator==(const SubcategoryTaxonomy& other) const;

private:
    std::vector<TaxonomyField> fields_;
};

// Throws InvalidArgument when a record carries a subcategory outside the
// taxonomy field(s) its field_labels map to.
void check_subcategories(const AbstractRecord& record, const SubcategoryTaxonomy& taxonomy);

// ---------------------------------------------------------------------------
// Synthetic corpora.

struct SyntheticSpec {
    std::size_t n_fields = 6;
    std::size_t journals_per_field = 10;
    std::size_t docs_per_journal = 50;
    std::size_t vocab_size = 5000;
    std::uint64_t seed = 7;

    void validate() const;
};

// Generative model behind generate_synthetic_corpus. Exposed so tests can
// check the overlap guarantees on the exact distributions.
class SyntheticModel {
public:
    explicit SyntheticModel(const SyntheticSpec& spec);

    const SyntheticSpec& spec() const noexcept { return spec_; }
    std::size_t n_journals() const noexcept { return journal_weights_.size(); }
    std::size_t field_of_journal(std::size_t journal) const;
    const std::string& field_name(std::size_t field) const { return field_names_.at(field); }
    const std::string& field_archive(std::size_t field) const { return field_archives_.at(field); }
    std::string journal_name(std::size_t journal) const;
    // Subcategory codes this journal publishes under (first one is primary).
    const std::vector<std::string>& journal_subcategories(std::size_t journal) const {
        return journal_subcats_.at(journal);
    }
    // Normalized token distribution of a journal over [0, vocab_size).
    const std::vector<double>& journal_distribution(std::size_t journal) const {
        return journal_weights_.at(journal);
    }
    // Rendered surface form of vocabulary token `index`.
    static std::string token_text(std::size_t index);

private:
    SyntheticSpec spec_;
    std::vector<std::string> field_names_;
    std::vector<std::string> field_archives_;
    std::vector<std::vector<std::string>> journal_subcats_;
    std::vector<std::vector<double>> journal_weights_;
};

// Histogram intersection sum_w min(p(w), q(w)).
double distribution_overlap(std::span<const double> p, std::span<const double> q);

// Deterministic given the seed. With n_fields <= 6 the fields are the six
// taxonomy fields (CS, Math, Phys, EESS, Econ, Stat) and subcategories are
// real arXiv codes; beyond six, synthetic field names are used.
std::vector<AbstractRecord> generate_synthetic_corpus(const SyntheticSpec& spec);

}  // namespace sdb::corpus
