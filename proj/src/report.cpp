#include "scidocbench/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include <json.hpp>

#include "scidocbench/errors.hpp"

namespace sdb::report {

using ojson = nlohmann::ordered_json;

namespace {

nlohmann::json parse_object(const std::string& text) {
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw InvalidArgument("result file is not a JSON object");
    return j;
}

template <typename T>
std::size_t position(std::vector<T>& order, const T& value) {
    auto it = std::find(order.begin(), order.end(), value);
    if (it != order.end()) return static_cast<std::size_t>(it - order.begin());
    order.push_back(value);
    return order.size() - 1;
}

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string md_cell(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '|') out += '\\';
        out += c == '\n' ? ' ' : c;
    }
    return out;
}

}  // namespace

std::string to_json(const ClusterResult& r) {
    ojson j;
    j["kind"] = "cluster";
    j["method"] = r.method;
    j["dataset"] = r.dataset;
    j["seed"] = r.seed;
    j["n_restarts"] = r.n_restarts;
    j["rows"] = ojson::array();
    for (const auto& row : r.rows) {
        j["rows"].push_back({{"k", row.k}, {"purity", row.purity}, {"inertia", row.inertia}});
    }
    return j.dump(2) + "\n";
}

std::string to_json(const RetrievalResult& r) {
    ojson j;
    j["kind"] = "retrieval";
    j["method"] = r.method;
    j["max_pairs"] = r.max_pairs;
    j["seed"] = r.seed;
    j["fields"] = ojson::array();
    for (const auto& f : r.fields) {
        ojson row;
        row["field"] = f.field;
        row["average_precision"] = f.average_precision ? ojson(*f.average_precision) : ojson(nullptr);
        row["auc"] = f.auc ? ojson(*f.auc) : ojson(nullptr);
        row["records"] = f.records;
        row["pairs"] = f.pairs;
        row["positives"] = f.positives;
        row["note"] = f.note;
        j["fields"].push_back(std::move(row));
    }
    const bool any = std::any_of(r.fields.begin(), r.fields.end(),
                                 [](const retrieval::FieldRow& f) { return f.average_precision.has_value(); });
    j["mean_average_precision"] = any ? ojson(retrieval::mean_average_precision(r.fields)) : ojson(nullptr);
    return j.dump(2) + "\n";
}

ClusterResult cluster_result_from_json(const std::string& text) {
    const auto j = parse_object(text);
    if (j.value("kind", std::string()) != "cluster") throw InvalidArgument("not a cluster result document");
    try {
        ClusterResult r;
        r.method = j.at("method").get<std::string>();
        r.dataset = j.at("dataset").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.n_restarts = j.at("n_restarts").get<std::size_t>();
        for (const auto& row : j.at("rows")) {
            r.rows.push_back({row.at("k").get<std::size_t>(), row.at("purity").get<double>(),
                              row.at("inertia").get<double>()});
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed cluster result: ") + e.what());
    }
}

RetrievalResult retrieval_result_from_json(const std::string& text) {
    const auto j = parse_object(text);
    if (j.value("kind", std::string()) != "retrieval") throw InvalidArgument("not a retrieval result document");
    try {
        RetrievalResult r;
        r.method = j.at("method").get<std::string>();
        r.max_pairs = j.at("max_pairs").get<std::size_t>();
        r.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& f : j.at("fields")) {
            retrieval::FieldRow row;
            row.field = f.at("field").get<std::string>();
            if (!f.at("average_precision").is_null()) row.average_precision = f.at("average_precision").get<double>();
            if (!f.at("auc").is_null()) row.auc = f.at("auc").get<double>();
            row.records = f.at("records").get<std::size_t>();
            row.pairs = f.at("pairs").get<std::size_t>();
            row.positives = f.at("positives").get<std::size_t>();
            row.note = f.at("note").get<std::string>();
            r.fields.push_back(std::move(row));
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed retrieval result: ") + e.what());
    }
}

std::string result_kind(const std::string& text) {
    const auto j = parse_object(text);
    const auto kind = j.value("kind", std::string());
    if (kind != "probe" && kind != "cluster" && kind != "retrieval") {
        throw InvalidArgument("unknown result kind '" + kind + "'");
    }
    return kind;
}

std::string to_csv(const Table& t) {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += csv_cell(cells[i]);
        }
        out += '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
    return out;
}

std::string to_markdown(const Table& t) {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        out += '|';
        for (const auto& c : cells) out += ' ' + md_cell(c) + " |";
        out += '\n';
    };
    line(t.header);
    out += '|';
    for (std::size_t i = 0; i < t.header.size(); ++i) out += i == 0 ? " --- |" : " ---: |";
    out += '\n';
    for (const auto& r : t.rows) line(r);
    return out;
}

std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
    return buf;
}

Table probe_table(const std::vector<probe::NamedProbeResult>& results, Style style) {
    std::vector<std::string> methods, datasets;
    std::map<std::pair<std::size_t, std::size_t>, const probe::ProbeResult*> cells;
    for (const auto& r : results) {
        const auto m = position(methods, r.method);
        const auto d = position(datasets, r.dataset);
        cells[{m, d}] = &r.result;
    }
    Table t;
    t.header.push_back("Method");
    for (const auto& d : datasets) {
        if (style == Style::csv) {
            t.header.insert(t.header.end(), {d + " F1", d + " F1 std", d + " Acc", d + " Acc std"});
        } else {
            t.header.insert(t.header.end(), {d + " F1", d + " Acc"});
        }
    }
    for (std::size_t m = 0; m < methods.size(); ++m) {
        std::vector<std::string> row{methods[m]};
        for (std::size_t d = 0; d < datasets.size(); ++d) {
            auto it = cells.find({m, d});
            if (it == cells.end()) {
                row.insert(row.end(), style == Style::csv ? 4 : 2, "-");
                continue;
            }
            const auto& r = *it->second;
            if (style == Style::csv) {
                row.insert(row.end(), {percent(r.mean_f1), percent(r.std_f1), percent(r.mean_acc), percent(r.std_acc)});
            } else {
                row.push_back(percent(r.mean_f1) + " ± " + percent(r.std_f1));
                row.push_back(percent(r.mean_acc) + " ± " + percent(r.std_acc));
            }
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table cluster_table(const std::vector<ClusterResult>& results) {
    std::set<std::size_t> ks;
    std::set<std::string> distinct;
    for (const auto& r : results) {
        distinct.insert(r.dataset);
        for (const auto& row : r.rows) ks.insert(row.k);
    }
    const bool with_dataset = distinct.size() > 1;
    Table t;
    t.header.push_back("Method");
    if (with_dataset) t.header.push_back("Dataset");
    for (auto k : ks) t.header.push_back(std::to_string(k));
    for (const auto& r : results) {
        std::vector<std::string> row{r.method};
        if (with_dataset) row.push_back(r.dataset);
        for (auto k : ks) {
            auto it = std::find_if(r.rows.begin(), r.rows.end(), [k](const cluster::PurityRow& p) { return p.k == k; });
            row.push_back(it == r.rows.end() ? "-" : percent(it->purity));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table retrieval_table(const std::vector<RetrievalResult>& results, bool auc) {
    std::vector<std::string> fields;
    for (const auto& r : results) {
        for (const auto& f : r.fields) position(fields, f.field);
    }
    Table t;
    t.header.push_back("Method");
    t.header.insert(t.header.end(), fields.begin(), fields.end());
    for (const auto& r : results) {
        std::vector<std::string> row{r.method};
        for (const auto& name : fields) {
            auto it = std::find_if(r.fields.begin(), r.fields.end(),
                                   [&](const retrieval::FieldRow& f) { return f.field == name; });
            const std::optional<double> v =
                it == r.fields.end() ? std::nullopt : (auc ? it->auc : it->average_precision);
            row.push_back(v ? percent(*v) : "-");
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace sdb::report
