#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "scidocbench/pubmed_fetch.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "scidocbench/errors.hpp"

namespace sdb::corpus {

namespace {

std::string percent_encode(std::string_view s) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else if (c == ' ') {
            out.push_back('+');
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 15]);
        }
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_atomically(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp);
        out << content;
        if (!out) throw IoError("write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

bool retryable(int status) { return status == 0 || status == 429 || status >= 500; }

}  // namespace

// ---------------------------------------------------------------------------

HttpTransport::HttpTransport(std::string base_url, std::string api_key, std::chrono::seconds timeout)
    : api_key_(std::move(api_key)), timeout_(timeout) {
    auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw InvalidArgument("base URL needs a scheme: " + base_url);
    auto path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        scheme_host_ = base_url;
        base_path_ = "/";
    } else {
        scheme_host_ = base_url.substr(0, path_start);
        base_path_ = base_url.substr(path_start);
    }
    if (base_path_.back() != '/') base_path_.push_back('/');
}

HttpResponse HttpTransport::get(const std::string& request) {
    httplib::Client client(scheme_host_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_follow_location(true);
    std::string target = base_path_ + request;
    if (!api_key_.empty()) target += "&api_key=" + percent_encode(api_key_);
    auto result = client.Get(target);
    if (!result) return {0, httplib::to_string(result.error())};
    return {result->status, result->body};
}

ReplayTransport ReplayTransport::from_json(const std::string& text) {
    auto root = nlohmann::json::parse(text, nullptr, false);
    if (root.is_discarded() || !root.is_object() || !root.contains("interactions") ||
        !root["interactions"].is_array()) {
        throw InvalidArgument("replay fixture must be an object with an 'interactions' array");
    }
    ReplayTransport replay;
    try {
        for (const auto& it : root["interactions"]) {
            replay.add(it.at("request").get<std::string>(),
                       {it.value("status", 200), it.value("body", std::string())});
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed replay fixture: ") + e.what());
    }
    return replay;
}

ReplayTransport ReplayTransport::load(const std::string& path) { return from_json(read_file(path)); }

void ReplayTransport::add(std::string request, HttpResponse response) {
    responses_[std::move(request)].push_back(std::move(response));
}

HttpResponse ReplayTransport::get(const std::string& request) {
    log_.push_back(request);
    auto it = responses_.find(request);
    if (it == responses_.end()) throw InvalidArgument("no recorded response for request " + request);
    auto& n = served_[request];
    if (n >= it->second.size()) throw InvalidArgument("recorded responses exhausted for request " + request);
    return it->second[n++];
}

// ---------------------------------------------------------------------------

FetchConfig FetchConfig::from_environment() {
    FetchConfig cfg;
    if (const char* url = std::getenv("SCIDOCBENCH_PUBMED_URL"); url && *url) cfg.base_url = url;
    if (const char* key = std::getenv("SCIDOCBENCH_PUBMED_API_KEY"); key && *key) {
        cfg.api_key = key;
        cfg.min_interval = std::chrono::milliseconds(110);  // 10 requests/s with a key
    }
    if (const char* ms = std::getenv("SCIDOCBENCH_PUBMED_MIN_INTERVAL_MS"); ms && *ms) {
        cfg.min_interval = std::chrono::milliseconds(std::strtoll(ms, nullptr, 10));
    }
    return cfg;
}

std::string FetchCursor::to_json() const {
    nlohmann::ordered_json j;
    j["issn"] = issn;
    j["year"] = year;
    j["batch_size"] = batch_size;
    j["next_batch"] = next_batch;
    j["ids"] = ids;
    return j.dump() + "\n";
}

FetchCursor FetchCursor::from_json(const std::string& text) {
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw InvalidArgument("cursor file is not valid JSON");
    try {
        FetchCursor c;
        c.issn = j.at("issn").get<std::string>();
        c.year = j.at("year").get<int>();
        c.batch_size = j.at("batch_size").get<std::size_t>();
        c.next_batch = j.at("next_batch").get<std::size_t>();
        c.ids = j.at("ids").get<std::vector<std::string>>();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed cursor: ") + e.what());
    }
}

PubmedFetcher::PubmedFetcher(FetchConfig config, Transport& transport, Sleeper sleeper)
    : config_(std::move(config)), transport_(transport), sleeper_(std::move(sleeper)) {
    if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string PubmedFetcher::esearch_request(const std::string& issn, int year, std::size_t max_ids) {
    return "esearch.fcgi?db=pubmed&retmode=json&retmax=" + std::to_string(max_ids) +
           "&term=" + percent_encode(issn + "[ISSN] AND " + std::to_string(year) + "[PDAT]");
}

std::string PubmedFetcher::efetch_request(const std::vector<std::string>& ids) {
    std::string joined;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) joined.push_back(',');
        joined += percent_encode(ids[i]);
    }
    return "efetch.fcgi?db=pubmed&retmode=xml&id=" + joined;
}

std::string PubmedFetcher::request(const std::string& path_and_query) {
    HttpResponse last;
    std::chrono::milliseconds backoff = config_.initial_backoff;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            sleeper_(backoff);
            backoff *= 2;
        }
        if (last_request_) {
            auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                                 *last_request_);
            if (elapsed < config_.min_interval) sleeper_(config_.min_interval - elapsed);
        }
        last_request_ = std::chrono::steady_clock::now();
        last = transport_.get(path_and_query);
        if (last.status == 200) return std::move(last.body);
        if (!retryable(last.status)) break;
    }
    throw IoError("request " + path_and_query + " failed with status " + std::to_string(last.status) +
                  (last.body.empty() ? "" : ": " + last.body.substr(0, 200)));
}

std::vector<std::string> PubmedFetcher::search(const std::string& issn, int year) {
    auto body = request(esearch_request(issn, year, config_.max_ids));
    auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.contains("esearchresult")) {
        throw InvalidArgument("unexpected esearch response for " + issn);
    }
    std::vector<std::string> ids;
    const auto& result = j["esearchresult"];
    if (result.contains("idlist")) {
        for (const auto& id : result["idlist"]) ids.push_back(id.get<std::string>());
    }
    return ids;
}

std::size_t PubmedFetcher::fetch(const std::string& issn, int year, std::size_t batch_size,
                                 const std::function<void(std::size_t, const std::string&)>& sink,
                                 const std::optional<std::string>& cursor_path) {
    if (batch_size < 1 || batch_size > 200) throw InvalidArgument("batch_size must be in [1, 200]");
    if (issn.empty()) throw InvalidArgument("empty ISSN");

    FetchCursor cursor;
    bool resumed = false;
    if (cursor_path && std::filesystem::exists(*cursor_path)) {
        auto saved = FetchCursor::from_json(read_file(*cursor_path));
        if (saved.issn == issn && saved.year == year && saved.batch_size == batch_size) {
            cursor = std::move(saved);
            resumed = true;
        }
    }
    if (!resumed) {
        cursor.issn = issn;
        cursor.year = year;
        cursor.batch_size = batch_size;
        cursor.ids = search(issn, year);
        cursor.next_batch = 0;
        if (cursor_path) write_atomically(*cursor_path, cursor.to_json());
    }

    const std::size_t n_batches = (cursor.ids.size() + batch_size - 1) / batch_size;
    std::size_t yielded = 0;
    for (std::size_t b = cursor.next_batch; b < n_batches; ++b) {
        auto first = cursor.ids.begin() + static_cast<std::ptrdiff_t>(b * batch_size);
        auto last = cursor.ids.begin() + static_cast<std::ptrdiff_t>(std::min(cursor.ids.size(), (b + 1) * batch_size));
        const std::string xml = request(efetch_request({first, last}));
        sink(b, xml);
        ++yielded;
        cursor.next_batch = b + 1;
        if (cursor_path) write_atomically(*cursor_path, cursor.to_json());
    }
    return yielded;
}

std::vector<std::string> PubmedFetcher::fetch_all(const std::string& issn, int year, std::size_t batch_size) {
    std::vector<std::string> pages;
    fetch(issn, year, batch_size, [&](std::size_t, const std::string& xml) { pages.push_back(xml); });
    return pages;
}

}  // namespace sdb::corpus
