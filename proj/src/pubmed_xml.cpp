#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>
#include <memory>
#include <optional>

#include <expat.h>

#include "scidocbench/corpus.hpp"
#include "scidocbench/errors.hpp"

namespace sdb::corpus {

namespace {

std::string trim(std::string_view s) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

int month_from_text(std::string_view text) {
    static constexpr std::array<std::string_view, 12> names = {"jan", "feb", "mar", "apr", "may", "jun",
                                                               "jul", "aug", "sep", "oct", "nov", "dec"};
    if (text.empty()) return 1;
    if (std::isdigit(static_cast<unsigned char>(text[0]))) {
        int m = 0;
        for (char c : text) {
            if (!std::isdigit(static_cast<unsigned char>(c))) return -1;
            m = m * 10 + (c - '0');
            if (m > 12) return -1;
        }
        return m;
    }
    if (text.size() < 3) return -1;
    std::string lower;
    for (char c : text.substr(0, 3)) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    auto it = std::find(names.begin(), names.end(), lower);
    return it == names.end() ? -1 : static_cast<int>(it - names.begin()) + 1;
}

int int_or(std::string_view text, int fallback) {
    if (text.empty()) return fallback;
    int v = 0;
    for (char c : text) {
        if (!std::isdigit(static_cast<unsigned char>(c)) || v > 100000) return -1;
        v = v * 10 + (c - '0');
    }
    return v;
}

struct DateParts {
    std::string year, month, day, medline;
    bool empty() const { return year.empty() && medline.empty(); }
};

std::optional<Date> resolve_date(const DateParts& parts) {
    Date d;
    if (!parts.year.empty()) {
        d.year = int_or(parts.year, -1);
        d.month = month_from_text(parts.month);
        d.day = int_or(parts.day, 1);
    } else if (!parts.medline.empty()) {
        // e.g. "1998 Dec-1999 Jan": first year, first month token when present
        const auto& m = parts.medline;
        if (m.size() < 4) return std::nullopt;
        d.year = int_or(std::string_view(m).substr(0, 4), -1);
        d.month = 1;
        if (m.size() >= 8 && m[4] == ' ') {
            int month = month_from_text(std::string_view(m).substr(5, 3));
            if (month > 0) d.month = month;
        }
    } else {
        return std::nullopt;
    }
    if (!d.valid()) return std::nullopt;
    return d;
}

enum class Field {
    none,
    pmid,
    article_title,
    abstract_text,
    journal_title,
    pub_year,
    pub_month,
    pub_day,
    pub_medline,
    article_year,
    article_month,
    article_day,
    language,
};

struct ArticleState {
    std::string pmid;
    std::string title;
    std::vector<std::string> abstract_parts;
    std::vector<std::string> journal_titles;
    DateParts pub_date;
    DateParts article_date;
    std::vector<std::string> languages;
    bool saw_pmid = false;
};

class PubmedHandler {
public:
    explicit PubmedHandler(ParseReport& report) : report_(report) {}

    void start(const char* name) {
        stack_.emplace_back(name);
        if (stack_.back() == "PubmedArticle") {
            article_ = ArticleState{};
            ++article_count_;
            return;
        }
        if (stack_.back() == "PubmedBookArticle") {
            ++article_count_;
            report_.rejects.push_back({"article #" + std::to_string(article_count_), "book articles are not supported"});
            return;
        }
        if (!article_ || capture_ != Field::none) return;
        Field f = classify();
        if (f != Field::none) {
            capture_ = f;
            capture_depth_ = stack_.size();
            text_.clear();
        }
    }

    void end() {
        if (capture_ != Field::none && stack_.size() == capture_depth_) {
            commit(capture_, trim(text_));
            capture_ = Field::none;
        }
        if (stack_.back() == "PubmedArticle" && article_) {
            finish_article();
            article_.reset();
        }
        stack_.pop_back();
    }

    void chars(const char* s, int len) {
        if (capture_ != Field::none) text_.append(s, static_cast<std::size_t>(len));
    }

private:
    bool parent_is(std::size_t up, std::string_view name) const {
        return stack_.size() > up && stack_[stack_.size() - 1 - up] == name;
    }

    Field classify() const {
        const auto& n = stack_.back();
        if (n == "PMID" && parent_is(1, "MedlineCitation")) return article_->saw_pmid ? Field::none : Field::pmid;
        if (n == "ArticleTitle" && parent_is(1, "Article")) return Field::article_title;
        if (n == "AbstractText" && parent_is(1, "Abstract") && parent_is(2, "Article")) return Field::abstract_text;
        if (n == "Title" && parent_is(1, "Journal") && parent_is(2, "Article")) return Field::journal_title;
        if (n == "Language" && parent_is(1, "Article")) return Field::language;
        if (parent_is(1, "PubDate") && parent_is(2, "JournalIssue")) {
            if (n == "Year") return Field::pub_year;
            if (n == "Month") return Field::pub_month;
            if (n == "Day") return Field::pub_day;
            if (n == "MedlineDate") return Field::pub_medline;
        }
        if (parent_is(1, "ArticleDate") && parent_is(2, "Article")) {
            if (n == "Year") return Field::article_year;
            if (n == "Month") return Field::article_month;
            if (n == "Day") return Field::article_day;
        }
        return Field::none;
    }

    void commit(Field f, std::string value) {
        auto& a = *article_;
        switch (f) {
            case Field::pmid:
                a.pmid = std::move(value);
                a.saw_pmid = true;
                break;
            case Field::article_title: a.title = std::move(value); break;
            case Field::abstract_text:
                if (!value.empty()) a.abstract_parts.push_back(std::move(value));
                break;
            case Field::journal_title: a.journal_titles.push_back(std::move(value)); break;
            case Field::pub_year: a.pub_date.year = std::move(value); break;
            case Field::pub_month: a.pub_date.month = std::move(value); break;
            case Field::pub_day: a.pub_date.day = std::move(value); break;
            case Field::pub_medline: a.pub_date.medline = std::move(value); break;
            case Field::article_year: a.article_date.year = std::move(value); break;
            case Field::article_month: a.article_date.month = std::move(value); break;
            case Field::article_day: a.article_date.day = std::move(value); break;
            case Field::language: a.languages.push_back(std::move(value)); break;
            case Field::none: break;
        }
    }

    void finish_article() {
        auto& a = *article_;
        std::string locator = a.pmid.empty() ? "article #" + std::to_string(article_count_) : "PMID " + a.pmid;
        if (a.pmid.empty()) {
            report_.rejects.push_back({locator, "missing PMID"});
            return;
        }
        std::size_t journals = std::count_if(a.journal_titles.begin(), a.journal_titles.end(),
                                             [](const std::string& t) { return !t.empty(); });
        if (journals != 1) {
            report_.rejects.push_back({locator, journals == 0 ? "missing journal name" : "more than one journal name"});
            return;
        }
        if (a.abstract_parts.empty()) {
            ++report_.skipped_no_abstract;
            return;
        }
        if (!a.languages.empty()) {
            bool english = std::any_of(a.languages.begin(), a.languages.end(), [](const std::string& l) {
                return l.size() == 3 && std::tolower(static_cast<unsigned char>(l[0])) == 'e' &&
                       std::tolower(static_cast<unsigned char>(l[1])) == 'n' &&
                       std::tolower(static_cast<unsigned char>(l[2])) == 'g';
            });
            if (!english) {
                ++report_.skipped_non_english;
                return;
            }
        }
        std::optional<Date> date = resolve_date(a.pub_date);
        if (!date && !a.article_date.empty()) date = resolve_date(a.article_date);
        if (!date) {
            report_.rejects.push_back({locator, "missing or unparseable publication date"});
            return;
        }

        AbstractRecord r;
        r.id = a.pmid;
        r.title = a.title;
        for (std::size_t i = 0; i < a.abstract_parts.size(); ++i) {
            if (i) r.abstract.push_back(' ');
            r.abstract += a.abstract_parts[i];
        }
        r.journal = a.journal_titles.front();
        r.source = Source::pubmed;
        r.date = *date;
        report_.records.push_back(std::move(r));
    }

    ParseReport& report_;
    std::vector<std::string> stack_;
    std::optional<ArticleState> article_;
    std::size_t article_count_ = 0;
    Field capture_ = Field::none;
    std::size_t capture_depth_ = 0;
    std::string text_;
};

void XMLCALL on_start(void* data, const XML_Char* name, const XML_Char**) {
    static_cast<PubmedHandler*>(data)->start(name);
}
void XMLCALL on_end(void* data, const XML_Char*) { static_cast<PubmedHandler*>(data)->end(); }
void XMLCALL on_chars(void* data, const XML_Char* s, int len) { static_cast<PubmedHandler*>(data)->chars(s, len); }

}  // namespace

ParseReport parse_pubmed_xml(std::string_view xml_document) {
    ParseReport report;
    PubmedHandler handler(report);

    std::unique_ptr<XML_ParserStruct, decltype(&XML_ParserFree)> parser(XML_ParserCreate("UTF-8"), &XML_ParserFree);
    if (!parser) throw Error("cannot allocate XML parser");
    XML_SetUserData(parser.get(), &handler);
    XML_SetElementHandler(parser.get(), on_start, on_end);
    XML_SetCharacterDataHandler(parser.get(), on_chars);

    constexpr std::size_t chunk = 1 << 20;
    std::size_t pos = 0;
    do {
        std::size_t len = std::min(chunk, xml_document.size() - pos);
        bool last = pos + len == xml_document.size();
        if (XML_Parse(parser.get(), xml_document.data() + pos, static_cast<int>(len), last) == XML_STATUS_ERROR) {
            auto offset = XML_GetCurrentByteIndex(parser.get());
            throw ParseError(std::string("malformed XML: ") + XML_ErrorString(XML_GetErrorCode(parser.get())),
                             static_cast<std::uint64_t>(std::max<XML_Index>(offset, 0)), ParseError::Unit::byte);
        }
        pos += len;
    } while (pos < xml_document.size());
    return report;
}

}  // namespace sdb::corpus
