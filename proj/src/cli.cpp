#include "scidocbench/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "scidocbench/cluster.hpp"
#include "scidocbench/corpus.hpp"
#include "scidocbench/embedstore.hpp"
#include "scidocbench/encoder.hpp"
#include "scidocbench/errors.hpp"
#include "scidocbench/manifest.hpp"
#include "scidocbench/metrics.hpp"
#include "scidocbench/probe.hpp"
#include "scidocbench/pubmed_fetch.hpp"
#include "scidocbench/report.hpp"
#include "scidocbench/retrieval.hpp"

namespace sdb::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string sibling(const std::string& path, const std::string& extension) {
    return fs::path(path).replace_extension(extension).string();
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

std::string real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Per-invocation bookkeeping: tracks inputs and outputs for the manifest and
// refuses to write over an input.
class Run {
public:
    Run(std::string subcommand, std::ostream& out) : out_(out) { manifest_.subcommand = std::move(subcommand); }

    void input(const std::string& path) {
        if (!fs::is_regular_file(path)) throw IoError("input file not found: " + path);
        manifest_.inputs.push_back(path);
    }

    void write(const std::string& path, std::string_view contents) {
        guard(path);
        write_file(path, contents);
        manifest_.outputs.push_back(path);
    }

    void write_store(const std::string& path, const embedstore::EmbeddingMatrix& m) {
        guard(path);
        embedstore::write_store(m, path);
        manifest_.outputs.push_back(path);
    }

    void write_params(const std::string& path, const encoder::Params& p) {
        guard(path);
        encoder::write_params(p, path);
        manifest_.outputs.push_back(path);
    }

    void finish(const CLI::App& sub, const std::string& manifest_path, std::uint64_t seed, bool deterministic) {
        manifest_.seed = seed;
        manifest_.deterministic = deterministic;
        manifest_.version = SCIDOCBENCH_VERSION;
        for (const auto* opt : sub.get_options()) {
            const std::string& name = opt->get_single_name();
            if (name == "help" || name == "config" || name.empty()) continue;
            std::vector<std::string> values =
                opt->count() > 0 ? opt->results() : std::vector<std::string>{opt->get_default_str()};
            if (values.size() == 1 && values.front().empty()) continue;
            manifest_.config.emplace_back(name, std::move(values));
        }
        manifest_.hash_inputs();
        guard(manifest_path);
        write_file(manifest_path, manifest_.to_json());
        out_ << "wrote " << manifest_.outputs.size() << " artifact(s); manifest " << manifest_path << "\n";
    }

    // For files written outside write().
    void record_output(const std::string& path) { manifest_.outputs.push_back(path); }

private:
    void guard(const std::string& path) {
        std::error_code ec;
        for (const auto& in : manifest_.inputs) {
            if (fs::exists(path, ec) && fs::equivalent(in, path, ec)) {
                throw InvalidArgument("refusing to overwrite input " + in);
            }
        }
    }

    RunManifest manifest_;
    std::ostream& out_;
};

// Options every subcommand shares.
struct Common {
    std::uint64_t seed = 0;
    bool deterministic = true;
    std::string config;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--seed", c.seed, "Seed for every random choice in this run")->capture_default_str();
    sub->add_flag("--deterministic,!--no-deterministic", c.deterministic,
                  "Sequential reductions (the only mode implemented)")
        ->capture_default_str();
    sub->add_option("--config", c.config, "JSON object of option values; command-line flags win");
}

// Label source for probe/cluster: an id<TAB>class file, or a corpus field.
struct LabelSource {
    std::string labels_path;
    std::string corpus_path;
    std::string label_by = "field";
};

void add_label_options(CLI::App* sub, LabelSource& l) {
    sub->add_option("--labels", l.labels_path, "Tab-separated id<TAB>class file");
    sub->add_option("--corpus", l.corpus_path, "Canonical JSONL corpus supplying labels");
    sub->add_option("--label-by", l.label_by, "Corpus label: field or journal")
        ->check(CLI::IsMember({"field", "journal"}))
        ->capture_default_str();
}

struct Labels {
    std::vector<metrics::Label> index;  // aligned with store rows
    std::vector<std::string> names;
};

std::vector<std::pair<std::string, std::string>> read_tsv_pairs(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
            throw ParseError(path + ": expected id<TAB>value", n, ParseError::Unit::line);
        }
        out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return out;
}

Labels resolve_labels(Run& run, const LabelSource& src, const embedstore::EmbeddingMatrix& store) {
    std::map<std::string, std::string> by_id;
    if (!src.labels_path.empty() == !src.corpus_path.empty()) {
        throw InvalidArgument("give exactly one of --labels or --corpus");
    }
    if (!src.labels_path.empty()) {
        run.input(src.labels_path);
        for (auto& [id, cls] : read_tsv_pairs(src.labels_path)) {
            if (!by_id.emplace(id, cls).second) throw InvalidArgument("duplicate id in label file: " + id);
        }
    } else {
        run.input(src.corpus_path);
        for (const auto& r : corpus::read_jsonl_file(src.corpus_path)) {
            if (src.label_by == "journal") {
                by_id[r.id] = r.journal;
            } else if (r.field_labels.size() == 1) {
                by_id[r.id] = *r.field_labels.begin();
            } else {
                throw InvalidArgument("record " + r.id + " has " + std::to_string(r.field_labels.size()) +
                                      " field labels; --label-by field needs exactly one");
            }
        }
    }
    std::vector<std::string> names;
    for (const auto& id : store.ids()) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw InvalidArgument("no label for embedding id " + id);
        names.push_back(it->second);
    }
    const auto map = corpus::JournalLabelMap::from_names(names);
    Labels out;
    out.names = map.names();
    for (const auto& n : names) out.index.push_back(map.index_of(n));
    return out;
}

std::string label_tsv(const corpus::JournalLabelMap& map) {
    std::string s;
    for (std::size_t i = 0; i < map.size(); ++i) s += std::to_string(i) + "\t" + map.name_of(i) + "\n";
    return s;
}

std::string parse_report_json(const corpus::ParseReport& report, std::size_t duplicates) {
    ojson j;
    j["records"] = report.records.size();
    j["skipped_no_abstract"] = report.skipped_no_abstract;
    j["skipped_non_english"] = report.skipped_non_english;
    j["duplicate_ids"] = duplicates;
    j["rejects"] = ojson::array();
    for (const auto& r : report.rejects) j["rejects"].push_back({{"locator", r.locator}, {"reason", r.reason}});
    return j.dump(2) + "\n";
}

// Keeps the first record for each id.
std::size_t drop_duplicate_ids(std::vector<corpus::AbstractRecord>& records) {
    std::set<std::string> seen;
    const auto before = records.size();
    std::erase_if(records, [&](const corpus::AbstractRecord& r) { return !seen.insert(r.id).second; });
    return before - records.size();
}

void merge(corpus::ParseReport& into, corpus::ParseReport&& part) {
    std::move(part.records.begin(), part.records.end(), std::back_inserter(into.records));
    std::move(part.rejects.begin(), part.rejects.end(), std::back_inserter(into.rejects));
    into.skipped_no_abstract += part.skipped_no_abstract;
    into.skipped_non_english += part.skipped_non_english;
}

// Expands --config into explicit flags for keys not already on the command line.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        }
    }
    if (path.empty()) return args;
    const auto j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw InvalidArgument("config " + path + " is not a JSON object");
    auto given = [&](const std::string& flag) {
        return std::any_of(args.begin(), args.end(),
                           [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
    };
    auto scalar = [&](const nlohmann::json& v, const std::string& key) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
        if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
        if (v.is_number_float()) return real(v.get<double>());
        throw InvalidArgument("config key " + key + " has an unsupported value");
    };
    for (const auto& [key, value] : j.items()) {
        const std::string flag = "--" + key;
        if (given(flag) || (value.is_boolean() && given("--no-" + key))) continue;
        if (value.is_boolean()) {
            args.push_back(flag + "=" + (value.get<bool>() ? "true" : "false"));
        } else if (value.is_array()) {
            args.push_back(flag);
            for (const auto& v : value) args.push_back(scalar(v, key));
        } else {
            args.push_back(flag);
            args.push_back(scalar(value, key));
        }
    }
    return args;
}

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e)) return "parse_error";
    if (dynamic_cast<const FormatError*>(&e)) return "format_error";
    if (dynamic_cast<const DegenerateInput*>(&e)) return "degenerate_input";
    if (dynamic_cast<const IoError*>(&e)) return "io_error";
    if (dynamic_cast<const InvalidArgument*>(&e)) return "invalid_argument";
    if (dynamic_cast<const nlohmann::json::exception*>(&e)) return "schema_error";
    return "error";
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Scientific document embedding toolkit: corpus building, toy encoder, evaluation"};
    app.name("scidocbench");
    app.require_subcommand(1);
    app.set_version_flag("--version", SCIDOCBENCH_VERSION);

    std::map<std::string, std::function<void()>> actions;
    Common common;
    std::string output;
    std::vector<std::string> inputs;

    // ingest-pubmed
    auto* ingest_pubmed = app.add_subcommand("ingest-pubmed", "Parse PubMed efetch XML into canonical JSONL");
    add_common(ingest_pubmed, common);
    ingest_pubmed->add_option("--input", inputs, "efetch XML file(s)")->required();
    ingest_pubmed->add_option("--output", output, "Canonical JSONL corpus")->required();
    actions["ingest-pubmed"] = [&] {
        Run run("ingest-pubmed", out);
        corpus::ParseReport report;
        for (const auto& path : inputs) {
            run.input(path);
            merge(report, corpus::parse_pubmed_xml(read_file(path)));
        }
        const auto dups = drop_duplicate_ids(report.records);
        std::ostringstream jsonl;
        corpus::write_jsonl(jsonl, report.records);
        run.write(output, jsonl.str());
        run.write(sibling(output, ".report.json"), parse_report_json(report, dups));
        out << report.records.size() << " records, " << report.rejects.size() << " rejected, "
            << report.skipped_no_abstract << " without abstract, " << report.skipped_non_english
            << " non-English\n";
        run.finish(*ingest_pubmed, output + ".manifest.json", common.seed, common.deterministic);
    };

    // ingest-arxiv
    auto* ingest_arxiv = app.add_subcommand("ingest-arxiv", "Parse an arXiv metadata snapshot into canonical JSONL");
    add_common(ingest_arxiv, common);
    ingest_arxiv->add_option("--input", inputs, "Metadata file(s), one JSON object per line")->required();
    ingest_arxiv->add_option("--output", output, "Canonical JSONL corpus")->required();
    actions["ingest-arxiv"] = [&] {
        Run run("ingest-arxiv", out);
        corpus::ParseReport report;
        for (const auto& path : inputs) {
            run.input(path);
            std::istringstream in(read_file(path));
            merge(report, corpus::parse_arxiv_metadata(in));
        }
        const auto dups = drop_duplicate_ids(report.records);
        std::ostringstream jsonl;
        corpus::write_jsonl(jsonl, report.records);
        run.write(output, jsonl.str());
        run.write(sibling(output, ".report.json"), parse_report_json(report, dups));
        out << report.records.size() << " records, " << report.rejects.size() << " rejected\n";
        run.finish(*ingest_arxiv, output + ".manifest.json", common.seed, common.deterministic);
    };

    // fetch-pubmed
    std::string issn, replay, cursor, raw_dir;
    int year = 2021;
    std::size_t fetch_batch = 200;
    auto* fetch = app.add_subcommand("fetch-pubmed", "Download a journal-year from PubMed e-utils and parse it");
    add_common(fetch, common);
    fetch->add_option("--issn", issn, "Journal ISSN")->required();
    fetch->add_option("--year", year, "Publication year")->capture_default_str();
    fetch->add_option("--batch", fetch_batch, "PMIDs per efetch request (1..200)")->capture_default_str();
    fetch->add_option("--output", output, "Canonical JSONL corpus")->required();
    fetch->add_option("--replay", replay, "Serve requests from a recorded fixture instead of the network");
    fetch->add_option("--cursor", cursor, "Progress file for resuming an interrupted download");
    fetch->add_option("--raw-dir", raw_dir, "Also keep every XML page in this directory");
    actions["fetch-pubmed"] = [&] {
        Run run("fetch-pubmed", out);
        auto cfg = corpus::FetchConfig::from_environment();
        std::unique_ptr<corpus::Transport> transport;
        corpus::PubmedFetcher::Sleeper sleeper;
        if (!replay.empty()) {
            run.input(replay);
            transport = std::make_unique<corpus::ReplayTransport>(corpus::ReplayTransport::load(replay));
            sleeper = [](std::chrono::milliseconds) {};
        } else {
            transport = std::make_unique<corpus::HttpTransport>(cfg.base_url, cfg.api_key);
            sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
        }
        if (!cursor.empty() && raw_dir.empty()) {
            throw InvalidArgument("--cursor needs --raw-dir so pages from an interrupted run are kept");
        }
        corpus::PubmedFetcher fetcher(cfg, *transport, sleeper);
        corpus::ParseReport report;
        std::map<std::size_t, std::string> pages;  // page -> path
        auto page_path = [&](std::size_t page) {
            char name[32];
            std::snprintf(name, sizeof name, "page-%05zu.xml", page);
            return (fs::path(raw_dir) / name).string();
        };
        fetcher.fetch(
            issn, year, fetch_batch,
            [&](std::size_t page, const std::string& xml) {
                if (raw_dir.empty()) {
                    merge(report, corpus::parse_pubmed_xml(xml));
                } else {
                    // on disk before the cursor moves past this page
                    write_file(page_path(page), xml);
                    pages[page] = page_path(page);
                }
            },
            cursor.empty() ? std::nullopt : std::optional<std::string>(cursor));
        if (!raw_dir.empty()) {
            // pages saved by an earlier, interrupted run come first
            std::size_t n_pages = pages.size();
            if (!cursor.empty()) {
                const auto saved = corpus::FetchCursor::from_json(read_file(cursor));
                n_pages = (saved.ids.size() + fetch_batch - 1) / fetch_batch;
            }
            for (std::size_t page = 0; page < n_pages; ++page) {
                merge(report, corpus::parse_pubmed_xml(read_file(page_path(page))));
                if (pages.count(page)) run.record_output(page_path(page));
            }
        }
        const auto dups = drop_duplicate_ids(report.records);
        std::ostringstream jsonl;
        corpus::write_jsonl(jsonl, report.records);
        run.write(output, jsonl.str());
        run.write(sibling(output, ".report.json"), parse_report_json(report, dups));
        out << report.records.size() << " records from ISSN " << issn << " (" << year << ")\n";
        run.finish(*fetch, output + ".manifest.json", common.seed, common.deterministic);
    };

    // filter
    corpus::FilterConfig filter_cfg;
    std::string input, labels_out;
    auto* filter = app.add_subcommand("filter", "Apply the journal inclusion rules and build the label map");
    add_common(filter, common);
    filter->add_option("--input", input, "Canonical JSONL corpus")->required();
    filter->add_option("--output", output, "Filtered JSONL corpus")->required();
    filter->add_option("--labels-out", labels_out, "Journal label map (index<TAB>journal)");
    filter->add_option("--max-per-journal", filter_cfg.max_per_journal)->capture_default_str();
    filter->add_option("--min-per-journal", filter_cfg.min_per_journal)->capture_default_str();
    filter->add_option("--recent-year", filter_cfg.required_recent_year)->capture_default_str();
    actions["filter"] = [&] {
        Run run("filter", out);
        run.input(input);
        const auto records = corpus::read_jsonl_file(input);
        const auto result = corpus::filter_journals(records, filter_cfg);
        std::ostringstream jsonl;
        corpus::write_jsonl(jsonl, result.records);
        run.write(output, jsonl.str());
        run.write(labels_out.empty() ? sibling(output, ".labels.tsv") : labels_out, label_tsv(result.labels));
        out << result.records.size() << " records in " << result.labels.size() << " journals\n";
        run.finish(*filter, output + ".manifest.json", common.seed, common.deterministic);
    };

    // synth
    corpus::SyntheticSpec synth_spec;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic labelled corpus");
    synth->add_option("--seed", synth_spec.seed, "Seed for every random choice in this run")->capture_default_str();
    synth->add_flag("--deterministic,!--no-deterministic", common.deterministic)->capture_default_str();
    synth->add_option("--config", common.config, "JSON object of option values; command-line flags win");
    synth->add_option("--output", output, "Canonical JSONL corpus")->required();
    synth->add_option("--fields", synth_spec.n_fields)->capture_default_str();
    synth->add_option("--journals-per-field", synth_spec.journals_per_field)->capture_default_str();
    synth->add_option("--docs-per-journal", synth_spec.docs_per_journal)->capture_default_str();
    synth->add_option("--vocab", synth_spec.vocab_size)->capture_default_str();
    actions["synth"] = [&] {
        Run run("synth", out);
        const auto records = corpus::generate_synthetic_corpus(synth_spec);
        std::ostringstream jsonl;
        corpus::write_jsonl(jsonl, records);
        run.write(output, jsonl.str());
        out << records.size() << " synthetic records\n";
        run.finish(*synth, output + ".manifest.json", synth_spec.seed, common.deterministic);
    };

    // train-toy
    encoder::TrainConfig train_cfg;
    auto* train = app.add_subcommand("train-toy", "Train the hashed bag-of-tokens encoder on journal classes");
    add_common(train, common);
    train->add_option("--input", input, "Canonical JSONL corpus (journal = class)")->required();
    train->add_option("--output", output, "Model parameter file")->required();
    train->add_option("--feature-dim", train_cfg.feature_dim)->capture_default_str();
    train->add_option("--hidden", train_cfg.hidden_dim, "Representation size")->capture_default_str();
    train->add_option("--lr", train_cfg.lr)->capture_default_str();
    train->add_option("--batch", train_cfg.batch)->capture_default_str();
    train->add_option("--epochs", train_cfg.epochs, "0 keeps the seeded initialization")->capture_default_str();
    actions["train-toy"] = [&] {
        Run run("train-toy", out);
        run.input(input);
        const auto records = corpus::read_jsonl_file(input);
        std::vector<std::string> journals;
        for (const auto& r : records) journals.push_back(r.journal);
        const auto labels = corpus::JournalLabelMap::from_names(journals);
        train_cfg.seed = common.seed;
        const auto result = encoder::train(records, labels, train_cfg);
        std::string loss = "epoch,loss\n0," + real(result.initial_loss) + "\n";
        for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
            loss += std::to_string(e + 1) + "," + real(result.epoch_loss[e]) + "\n";
        }
        run.write_params(output, result.params);
        run.write(sibling(output, ".loss.csv"), loss);
        run.write(sibling(output, ".labels.tsv"), label_tsv(labels));
        out << "loss " << result.initial_loss << " -> "
            << (result.epoch_loss.empty() ? result.initial_loss : result.epoch_loss.back()) << " over "
            << result.epoch_loss.size() << " epoch(s)\n";
        run.finish(*train, output + ".manifest.json", common.seed, common.deterministic);
    };

    // extract
    std::string model;
    auto* extract = app.add_subcommand("extract", "Write toy-encoder representations to an embedding store");
    add_common(extract, common);
    extract->add_option("--model", model, "Model parameter file")->required();
    extract->add_option("--input", input, "Canonical JSONL corpus")->required();
    extract->add_option("--output", output, "Embedding store")->required();
    actions["extract"] = [&] {
        Run run("extract", out);
        run.input(model);
        run.input(input);
        const auto params = encoder::read_params(model);
        const auto records = corpus::read_jsonl_file(input);
        const auto m = encoder::extract(params, records);
        run.write_store(output, m);
        out << m.rows() << " x " << m.dim() << " embeddings\n";
        run.finish(*extract, output + ".manifest.json", common.seed, common.deterministic);
    };

    // export-input
    auto* export_input = app.add_subcommand("export-input", "Write assembled encoder inputs as JSONL {id, text}");
    add_common(export_input, common);
    export_input->add_option("--input", input, "Canonical JSONL corpus")->required();
    export_input->add_option("--output", output, "JSONL of encoder inputs")->required();
    actions["export-input"] = [&] {
        Run run("export-input", out);
        run.input(input);
        std::string text;
        std::size_t flagged = 0;
        for (const auto& r : corpus::read_jsonl_file(input)) {
            const auto in = embedstore::assemble_input(r);
            flagged += in.separator_in_content;
            ojson j;
            j["id"] = r.id;
            j["text"] = in.text;
            j["separator_in_content"] = in.separator_in_content;
            text += j.dump() + "\n";
        }
        run.write(output, text);
        if (flagged) out << flagged << " record(s) already contain the separator literal\n";
        run.finish(*export_input, output + ".manifest.json", common.seed, common.deterministic);
    };

    // probe
    probe::ProbeConfig probe_cfg;
    LabelSource label_src;
    std::string method, dataset, split_path;
    auto* probe_cmd = app.add_subcommand("probe", "Linear evaluation of frozen embeddings");
    add_common(probe_cmd, common);
    probe_cmd->add_option("--input", input, "Embedding store")->required();
    probe_cmd->add_option("--output", output, "Probe result (JSON); .csv and .md are written alongside")->required();
    add_label_options(probe_cmd, label_src);
    probe_cmd->add_option("--method", method, "Row name in report tables (default: store file name)");
    probe_cmd->add_option("--dataset", dataset, "Column group in report tables (default: label source)");
    probe_cmd->add_option("--split", split_path, "Fixed split file id<TAB>train|validation instead of CV");
    probe_cmd->add_option("--lr", probe_cfg.lr)->capture_default_str();
    probe_cmd->add_option("--batch", probe_cfg.batch)->capture_default_str();
    probe_cmd->add_option("--epochs", probe_cfg.epochs)->capture_default_str();
    probe_cmd->add_option("--folds", probe_cfg.folds)->capture_default_str();
    probe_cmd->add_option("--regularization", probe_cfg.regularization)->capture_default_str();
    probe_cmd->add_option("--runs", probe_cfg.runs)->capture_default_str();
    actions["probe"] = [&] {
        Run run("probe", out);
        run.input(input);
        const auto store = embedstore::read_store(input);
        const auto labels = resolve_labels(run, label_src, store);
        probe_cfg.seed = common.seed;
        probe::ProbeResult result;
        if (!split_path.empty()) {
            run.input(split_path);
            probe::Split split;
            std::set<std::string> seen;
            for (const auto& [id, part] : read_tsv_pairs(split_path)) {
                if (!seen.insert(id).second) throw InvalidArgument("duplicate id in split file: " + id);
                const auto row = store.row_of(id);
                if (part == "train") {
                    split.train.push_back(row);
                } else if (part == "validation") {
                    split.validation.push_back(row);
                } else {
                    throw InvalidArgument("split value must be train or validation, got '" + part + "'");
                }
            }
            std::sort(split.train.begin(), split.train.end());
            std::sort(split.validation.begin(), split.validation.end());
            if (split.train.empty() || split.validation.empty()) {
                throw InvalidArgument("split needs train and validation rows");
            }
            result = probe::train_probe_fixed_split(store, labels.index, split, probe_cfg);
        } else {
            result = probe::train_probe(store, labels.index, probe_cfg);
        }
        if (method.empty()) method = stem(input);
        if (dataset.empty()) dataset = label_src.labels_path.empty() ? label_src.label_by : stem(label_src.labels_path);
        const std::vector<probe::NamedProbeResult> one{{method, dataset, result}};
        run.write(output, probe::to_json(result, method, dataset));
        run.write(sibling(output, ".csv"), report::to_csv(report::probe_table(one, report::Style::csv)));
        run.write(sibling(output, ".md"), report::to_markdown(report::probe_table(one, report::Style::markdown)));
        out << "accuracy " << report::percent(result.mean_acc) << " ± " << report::percent(result.std_acc)
            << ", macro-F1 " << report::percent(result.mean_f1) << " ± " << report::percent(result.std_f1) << "\n";
        run.finish(*probe_cmd, output + ".manifest.json", common.seed, common.deterministic);
    };

    // cluster
    std::vector<std::size_t> ks{10, 20, 50, 100};
    std::size_t restarts = 1;
    auto* cluster_cmd = app.add_subcommand("cluster", "k-means purity sweep over frozen embeddings");
    add_common(cluster_cmd, common);
    cluster_cmd->add_option("--input", input, "Embedding store")->required();
    cluster_cmd->add_option("--output", output, "Cluster result (JSON); .csv and .md are written alongside")
        ->required();
    add_label_options(cluster_cmd, label_src);
    cluster_cmd->add_option("--ks", ks, "Cluster counts")->capture_default_str();
    cluster_cmd->add_option("--restarts", restarts, "k-means runs per k; lowest inertia wins")->capture_default_str();
    cluster_cmd->add_option("--method", method, "Row name in report tables (default: store file name)");
    cluster_cmd->add_option("--dataset", dataset, "Dataset name (default: label source)");
    actions["cluster"] = [&] {
        Run run("cluster", out);
        run.input(input);
        const auto store = embedstore::read_store(input);
        const auto labels = resolve_labels(run, label_src, store);
        report::ClusterResult result;
        result.method = method.empty() ? stem(input) : method;
        result.dataset = !dataset.empty() ? dataset
                         : label_src.labels_path.empty() ? label_src.label_by
                                                         : stem(label_src.labels_path);
        result.seed = common.seed;
        result.n_restarts = restarts;
        result.rows = cluster::purity_sweep(store, labels.index, ks, common.seed, restarts);
        const std::vector<report::ClusterResult> one{result};
        run.write(output, report::to_json(result));
        run.write(sibling(output, ".csv"), report::to_csv(report::cluster_table(one)));
        run.write(sibling(output, ".md"), report::to_markdown(report::cluster_table(one)));
        for (const auto& row : result.rows) out << "k=" << row.k << " purity " << report::percent(row.purity) << "\n";
        run.finish(*cluster_cmd, output + ".manifest.json", common.seed, common.deterministic);
    };

    // retrieve
    std::string corpus_path, taxonomy_path;
    std::size_t max_pairs = retrieval::kDefaultMaxPairs;
    auto* retrieve = app.add_subcommand("retrieve", "Per-field pair retrieval AP and AUC");
    add_common(retrieve, common);
    retrieve->add_option("--input", input, "Embedding store")->required();
    retrieve->add_option("--corpus", corpus_path, "Canonical JSONL corpus with subcategories")->required();
    retrieve->add_option("--output", output, "Retrieval result (JSON); AP/AUC tables are written alongside")
        ->required();
    retrieve->add_option("--taxonomy", taxonomy_path, "Taxonomy JSON (default: the built-in arXiv table)");
    retrieve->add_option("--max-pairs", max_pairs, "Pairs per field before sampling")->capture_default_str();
    retrieve->add_option("--method", method, "Row name in report tables (default: store file name)");
    actions["retrieve"] = [&] {
        Run run("retrieve", out);
        run.input(input);
        run.input(corpus_path);
        const auto store = embedstore::read_store(input);
        const auto records = corpus::read_jsonl_file(corpus_path);
        corpus::SubcategoryTaxonomy taxonomy = corpus::SubcategoryTaxonomy::shipped();
        if (!taxonomy_path.empty()) {
            run.input(taxonomy_path);
            taxonomy = corpus::SubcategoryTaxonomy::load(taxonomy_path);
        }
        report::RetrievalResult result;
        result.method = method.empty() ? stem(input) : method;
        result.max_pairs = max_pairs;
        result.seed = common.seed;
        result.fields = retrieval::evaluate_all_fields(records, store, taxonomy, max_pairs, common.seed);
        const std::vector<report::RetrievalResult> one{result};
        const auto ap = report::retrieval_table(one, false);
        const auto auc = report::retrieval_table(one, true);
        std::string md = "Average precision\n\n" + report::to_markdown(ap) + "\nAUC\n\n" + report::to_markdown(auc);
        std::string notes;
        for (const auto& f : result.fields) {
            if (!f.note.empty()) notes += "- " + f.field + ": " + f.note + "\n";
        }
        if (!notes.empty()) md += "\nAbsent fields\n\n" + notes;
        run.write(output, report::to_json(result));
        run.write(sibling(output, ".ap.csv"), report::to_csv(ap));
        run.write(sibling(output, ".auc.csv"), report::to_csv(auc));
        run.write(sibling(output, ".md"), md);
        for (const auto& f : result.fields) {
            out << f.field << ": "
                << (f.average_precision ? "AP " + report::percent(*f.average_precision) : "absent (" + f.note + ")")
                << "\n";
        }
        run.finish(*retrieve, output + ".manifest.json", common.seed, common.deterministic);
    };

    // knn
    std::string query, similarity = "cosine";
    std::size_t k = 10;
    auto* knn = app.add_subcommand("knn", "Nearest neighbours of one document");
    add_common(knn, common);
    knn->add_option("--input", input, "Embedding store")->required();
    knn->add_option("--query", query, "Query document id")->required();
    knn->add_option("--k", k)->capture_default_str();
    knn->add_option("--metric", similarity, "cosine or pearson")
        ->check(CLI::IsMember({"cosine", "pearson"}))
        ->capture_default_str();
    knn->add_option("--output", output, "Neighbour table (CSV); .md is written alongside")->required();
    actions["knn"] = [&] {
        Run run("knn", out);
        run.input(input);
        const auto store = embedstore::read_store(input);
        const auto hits = embedstore::knn_query(store, query, k, embedstore::similarity_from_string(similarity));
        report::Table t{{"rank", "id", "score"}, {}};
        for (std::size_t i = 0; i < hits.size(); ++i) t.rows.push_back({std::to_string(i + 1), hits[i].id, real(hits[i].score)});
        run.write(output, report::to_csv(t));
        run.write(sibling(output, ".md"), report::to_markdown(t));
        for (const auto& h : hits) out << h.id << "\t" << h.score << "\n";
        run.finish(*knn, output + ".manifest.json", common.seed, common.deterministic);
    };

    // compare
    std::string result_a, result_b, metric = "f1";
    bool welch = false;
    auto* compare = app.add_subcommand("compare", "Unpaired t-test between the per-run scores of two probe results");
    add_common(compare, common);
    compare->add_option("--a", result_a, "Probe result file")->required();
    compare->add_option("--b", result_b, "Probe result file")->required();
    compare->add_option("--metric", metric, "f1 or acc")->check(CLI::IsMember({"f1", "acc"}))->capture_default_str();
    compare->add_flag("--welch", welch, "Welch's unequal-variance test instead of pooled");
    compare->add_option("--output", output, "Comparison (JSON); .md is written alongside")->required();
    actions["compare"] = [&] {
        Run run("compare", out);
        run.input(result_a);
        run.input(result_b);
        const auto a = probe::probe_result_from_json(read_file(result_a));
        const auto b = probe::probe_result_from_json(read_file(result_b));
        const auto which = metric == "acc" ? probe::Metric::accuracy : probe::Metric::macro_f1;
        const auto sa = a.result.run_means(which);
        const auto sb = b.result.run_means(which);
        const auto variant = welch ? metrics::TTestVariant::welch : metrics::TTestVariant::pooled;
        const auto t = metrics::unpaired_t_test(sa, sb, variant);
        ojson j;
        j["kind"] = "comparison";
        j["metric"] = metric;
        j["variant"] = welch ? "welch" : "pooled";
        j["a"] = {{"method", a.method}, {"dataset", a.dataset}, {"run_scores", sa}};
        j["b"] = {{"method", b.method}, {"dataset", b.dataset}, {"run_scores", sb}};
        j["t"] = t.t;
        j["df"] = t.df;
        j["p"] = t.p;
        report::Table table{{"A", "B", "metric", "t", "df", "p"}, {}};
        char tb[32], db[32], pb[32];
        std::snprintf(tb, sizeof tb, "%.4f", t.t);
        std::snprintf(db, sizeof db, "%.2f", t.df);
        std::snprintf(pb, sizeof pb, "%.4g", t.p);
        table.rows.push_back({a.method, b.method, metric, tb, db, pb});
        run.write(output, j.dump(2) + "\n");
        run.write(sibling(output, ".md"), report::to_markdown(table));
        out << "t = " << tb << ", df = " << db << ", p = " << pb << "\n";
        run.finish(*compare, output + ".manifest.json", common.seed, common.deterministic);
    };

    // report
    auto* report_cmd = app.add_subcommand("report", "Assemble result files into probe, purity and retrieval tables");
    add_common(report_cmd, common);
    report_cmd->add_option("--input", inputs, "probe / cluster / retrieval result files")->required();
    report_cmd->add_option("--output", output, "Output directory")->required();
    actions["report"] = [&] {
        Run run("report", out);
        std::vector<probe::NamedProbeResult> probes;
        std::vector<report::ClusterResult> clusters;
        std::vector<report::RetrievalResult> retrievals;
        for (const auto& path : inputs) {
            run.input(path);
            const auto text = read_file(path);
            const auto kind = report::result_kind(text);
            if (kind == "probe") {
                probes.push_back(probe::probe_result_from_json(text));
            } else if (kind == "cluster") {
                clusters.push_back(report::cluster_result_from_json(text));
            } else {
                retrievals.push_back(report::retrieval_result_from_json(text));
            }
        }
        const fs::path dir(output);
        std::string md;
        if (!probes.empty()) {
            run.write((dir / "table1.csv").string(), report::to_csv(report::probe_table(probes, report::Style::csv)));
            const auto t = report::to_markdown(report::probe_table(probes, report::Style::markdown));
            run.write((dir / "table1.md").string(), t);
            md += "## Linear probe (F1 / accuracy, mean ± std over runs)\n\n" + t + "\n";
        }
        if (!clusters.empty()) {
            const auto t = report::cluster_table(clusters);
            run.write((dir / "table2.csv").string(), report::to_csv(t));
            run.write((dir / "table2.md").string(), report::to_markdown(t));
            md += "## Clustering purity by number of clusters\n\n" + report::to_markdown(t) + "\n";
        }
        if (!retrievals.empty()) {
            const auto ap = report::retrieval_table(retrievals, false);
            const auto auc = report::retrieval_table(retrievals, true);
            run.write((dir / "table3.csv").string(), report::to_csv(ap));
            run.write((dir / "table3_auc.csv").string(), report::to_csv(auc));
            const auto t = report::to_markdown(ap);
            run.write((dir / "table3.md").string(), t + "\nAUC\n\n" + report::to_markdown(auc));
            md += "## Retrieval average precision by field\n\n" + t + "\n## Retrieval AUC by field\n\n" +
                  report::to_markdown(auc) + "\n";
        }
        run.write((dir / "report.md").string(), md);
        out << probes.size() << " probe, " << clusters.size() << " cluster, " << retrievals.size()
            << " retrieval result(s)\n";
        run.finish(*report_cmd, (dir / "manifest.json").string(), common.seed, common.deterministic);
    };

    std::string active;
    try {
        auto args = raw_args;
        if (!args.empty()) active = args.front();
        if (!active.empty() && active.front() != '-' && !actions.count(active)) {
            err << "error: unknown subcommand '" << active << "'\n\n" << app.help();
            return 2;
        }
        args = expand_config(std::move(args));
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << SCIDOCBENCH_VERSION << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    } catch (const std::exception& e) {
        err << ojson{{"error", error_kind(e)}, {"subcommand", active}, {"message", e.what()}}.dump() << "\n";
        return 2;
    }

    for (auto* sub : app.get_subcommands()) {
        try {
            actions.at(sub->get_name())();
        } catch (const std::exception& e) {
            err << ojson{{"error", error_kind(e)}, {"subcommand", sub->get_name()}, {"message", e.what()}}.dump()
                << "\n";
            return 1;
        }
    }
    return 0;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace sdb::cli
