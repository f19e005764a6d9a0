#include "scidocbench/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "scidocbench/errors.hpp"

namespace sdb::corpus {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Source source) {
    return source == Source::pubmed ? "pubmed" : "arxiv";
}

Source source_from_string(std::string_view text) {
    if (text == "pubmed") return Source::pubmed;
    if (text == "arxiv") return Source::arxiv;
    throw InvalidArgument("unknown source '" + std::string(text) + "'");
}

namespace {

bool is_leap(int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; }

int days_in_month(int year, int month) {
    static constexpr int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2 && is_leap(year)) return 29;
    return days[month - 1];
}

int parse_fixed(std::string_view text, std::size_t pos, std::size_t len) {
    int value = 0;
    auto first = text.data() + pos;
    auto [ptr, ec] = std::from_chars(first, first + len, value);
    if (ec != std::errc() || ptr != first + len) return -1;
    return value;
}

}  // namespace

bool Date::valid() const {
    return year >= 1 && year <= 9999 && month >= 1 && month <= 12 && day >= 1 &&
           day <= days_in_month(year, month);
}

std::string Date::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

Date Date::parse_iso(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw InvalidArgument("date '" + std::string(text) + "' is not YYYY-MM-DD");
    }
    Date d{parse_fixed(text, 0, 4), parse_fixed(text, 5, 2), parse_fixed(text, 8, 2)};
    if (!d.valid()) throw InvalidArgument("date '" + std::string(text) + "' is not a calendar date");
    return d;
}

void validate(const AbstractRecord& record) {
    if (record.id.empty()) throw InvalidArgument("record has an empty id");
    if (record.abstract.empty()) throw InvalidArgument("record " + record.id + " has an empty abstract");
    if (record.journal.empty()) throw InvalidArgument("record " + record.id + " has an empty journal");
    if (!record.date.valid()) throw InvalidArgument("record " + record.id + " has an invalid date");
}

void validate_corpus(std::span<const AbstractRecord> records) {
    std::unordered_set<std::string_view> seen;
    for (const auto& r : records) {
        validate(r);
        if (!seen.insert(r.id).second) throw InvalidArgument("duplicate record id " + r.id);
    }
}

// ---------------------------------------------------------------------------

JournalLabelMap JournalLabelMap::from_names(std::vector<std::string> names) {
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    JournalLabelMap map;
    map.names_ = std::move(names);
    for (std::size_t i = 0; i < map.names_.size(); ++i) map.index_.emplace(map.names_[i], i);
    return map;
}

bool JournalLabelMap::contains(std::string_view journal) const {
    return index_.find(journal) != index_.end();
}

std::size_t JournalLabelMap::index_of(std::string_view journal) const {
    auto it = index_.find(journal);
    if (it == index_.end()) throw InvalidArgument("journal '" + std::string(journal) + "' not in label map");
    return it->second;
}

const std::string& JournalLabelMap::name_of(std::size_t index) const {
    if (index >= names_.size()) throw InvalidArgument("class index " + std::to_string(index) + " out of range");
    return names_[index];
}

void FilterConfig::validate() const {
    if (min_per_journal < 1) throw InvalidArgument("min_per_journal must be >= 1");
    if (max_per_journal < min_per_journal) {
        throw InvalidArgument("max_per_journal must be >= min_per_journal");
    }
}

FilterResult filter_journals(std::span<const AbstractRecord> records, const FilterConfig& cfg) {
    cfg.validate();

    std::map<std::string, std::vector<std::size_t>, std::less<>> by_journal;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!records[i].date.valid()) {
            throw InvalidArgument("record " + records[i].id + " has an invalid date");
        }
        by_journal[records[i].journal].push_back(i);
    }

    std::vector<char> keep(records.size(), 0);
    std::vector<std::string> survivors;
    for (auto& [journal, idx] : by_journal) {
        if (idx.size() < cfg.min_per_journal) continue;
        bool recent = std::any_of(idx.begin(), idx.end(), [&](std::size_t i) {
            return records[i].date.year == cfg.required_recent_year;
        });
        if (!recent) continue;
        if (idx.size() > cfg.max_per_journal) {
            std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                if (records[a].date != records[b].date) return records[a].date > records[b].date;
                return records[a].id < records[b].id;
            });
            idx.resize(cfg.max_per_journal);
        }
        for (auto i : idx) keep[i] = 1;
        survivors.push_back(journal);
    }
    if (survivors.empty()) throw InvalidArgument("no journals survive filter");

    FilterResult out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (keep[i]) out.records.push_back(records[i]);
    }
    out.labels = JournalLabelMap::from_names(std::move(survivors));
    return out;
}

std::string major_category(std::string_view subcategory) {
    auto dot = subcategory.find('.');
    return std::string(dot == std::string_view::npos ? subcategory : subcategory.substr(0, dot));
}

// ---------------------------------------------------------------------------
// JSONL

std::string to_json_line(const AbstractRecord& r) {
    ordered_json j;
    j["id"] = r.id;
    j["title"] = r.title;
    j["abstract"] = r.abstract;
    j["journal"] = r.journal;
    j["source"] = to_string(r.source);
    j["date"] = r.date.iso();
    j["field_labels"] = r.field_labels;
    j["subcategories"] = r.subcategories;
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

AbstractRecord from_json_line(std::string_view line) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidArgument(std::string("invalid JSON: ") + e.what());
    }
    static constexpr std::string_view fields[] = {"id",     "title", "abstract",     "journal",
                                                  "source", "date",  "field_labels", "subcategories"};
    if (!j.is_object()) throw InvalidArgument("record line is not a JSON object");
    for (auto f : fields) {
        if (!j.contains(f)) throw InvalidArgument("record is missing field '" + std::string(f) + "'");
    }
    if (j.size() != std::size(fields)) throw InvalidArgument("record has unexpected fields");
    try {
        AbstractRecord r;
        r.id = j["id"].get<std::string>();
        r.title = j["title"].get<std::string>();
        r.abstract = j["abstract"].get<std::string>();
        r.journal = j["journal"].get<std::string>();
        r.source = source_from_string(j["source"].get<std::string>());
        r.date = Date::parse_iso(j["date"].get<std::string>());
        for (const auto& f : j["field_labels"]) r.field_labels.insert(f.get<std::string>());
        for (const auto& s : j["subcategories"]) r.subcategories.insert(s.get<std::string>());
        validate(r);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("record field has the wrong type: ") + e.what());
    }
}

void write_jsonl(std::ostream& out, std::span<const AbstractRecord> records) {
    for (const auto& r : records) out << to_json_line(r) << '\n';
}

std::vector<AbstractRecord> read_jsonl(std::istream& in) {
    std::vector<AbstractRecord> records;
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(from_json_line(line));
        } catch (const InvalidArgument& e) {
            throw ParseError(e.what(), line_no, ParseError::Unit::line);
        }
    }
    validate_corpus(records);
    return records;
}

void write_jsonl_file(const std::string& path, std::span<const AbstractRecord> records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_jsonl(out, records);
    if (!out) throw IoError("write failed for " + path);
}

std::vector<AbstractRecord> read_jsonl_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return read_jsonl(in);
}

}  // namespace sdb::corpus
