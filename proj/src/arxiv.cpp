#include <cctype>
#include <istream>
#include <sstream>

#include <json.hpp>

#include "scidocbench/corpus.hpp"
#include "scidocbench/errors.hpp"

namespace sdb::corpus {

namespace {

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

// "Phys. Rev. D 76, 044016 (2007)" -> "Phys. Rev. D"
std::string venue_from_journal_ref(std::string_view ref) {
    std::string s = collapse_whitespace(ref);
    auto digit = s.find_first_of("0123456789(");
    if (digit != std::string::npos) s.erase(digit);
    while (!s.empty() && (std::isspace(static_cast<unsigned char>(s.back())) || s.back() == ',' || s.back() == ':' ||
                          s.back() == ';' || s.back() == '-')) {
        s.pop_back();
    }
    return s;
}

// "Mon, 2 Apr 2007 19:18:42 GMT"
std::optional<Date> parse_rfc2822_date(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string weekday, month;
    int day = 0, year = 0;
    if (!(in >> weekday >> day >> month >> year)) return std::nullopt;
    static constexpr std::string_view months[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                  "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    for (int m = 0; m < 12; ++m) {
        if (month == months[m]) {
            Date d{year, m + 1, day};
            if (d.valid()) return d;
        }
    }
    return std::nullopt;
}

AbstractRecord parse_arxiv_object(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidArgument("line is not a JSON object");
    auto str = [&](const char* key) -> std::string {
        if (!j.contains(key) || j[key].is_null()) return {};
        if (!j[key].is_string()) throw InvalidArgument(std::string("field '") + key + "' is not a string");
        return j[key].get<std::string>();
    };

    AbstractRecord r;
    r.source = Source::arxiv;
    r.id = collapse_whitespace(str("id"));
    if (r.id.empty()) throw InvalidArgument("missing id");
    r.title = collapse_whitespace(str("title"));
    r.abstract = collapse_whitespace(str("abstract"));
    if (r.abstract.empty()) throw InvalidArgument("missing abstract");

    std::istringstream cats(str("categories"));
    std::string cat;
    while (cats >> cat) {
        r.subcategories.insert(cat);
        r.field_labels.insert(major_category(cat));
    }
    if (r.subcategories.empty()) throw InvalidArgument("missing categories");

    r.journal = collapse_whitespace(str("journal"));
    if (r.journal.empty()) r.journal = venue_from_journal_ref(str("journal-ref"));
    if (r.journal.empty()) throw InvalidArgument("no journal reference");

    if (auto updated = str("update_date"); !updated.empty()) {
        r.date = Date::parse_iso(updated);
    } else if (j.contains("versions") && j["versions"].is_array() && !j["versions"].empty() &&
               j["versions"][0].is_object() && j["versions"][0].contains("created") &&
               j["versions"][0]["created"].is_string()) {
        auto d = parse_rfc2822_date(j["versions"][0]["created"].get<std::string>());
        if (!d) throw InvalidArgument("unparseable version date");
        r.date = *d;
    } else {
        throw InvalidArgument("missing date");
    }
    return r;
}

}  // namespace

ParseReport parse_arxiv_metadata(std::istream& lines) {
    ParseReport report;
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::string locator = "line " + std::to_string(line_no);
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            report.rejects.push_back({locator, "unparseable JSON"});
            continue;
        }
        try {
            report.records.push_back(parse_arxiv_object(j));
        } catch (const InvalidArgument& e) {
            report.rejects.push_back({locator, e.what()});
        }
    }
    return report;
}

}  // namespace sdb::corpus
