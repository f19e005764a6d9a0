#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sdb::corpus {

struct HttpResponse {
    int status = 0;  // 0 means transport failure
    std::string body;
};

// One GET against the e-utils base URL. `request` is the path plus query,
// e.g. "esearch.fcgi?db=pubmed&term=...".
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse get(const std::string& request) = 0;
};

// Live HTTP(S) transport. A non-empty api_key is appended to every request.
class HttpTransport : public Transport {
public:
    HttpTransport(std::string base_url, std::string api_key,
                  std::chrono::seconds timeout = std::chrono::seconds(60));
    HttpResponse get(const std::string& request) override;

private:
    std::string scheme_host_;
    std::string base_path_;
    std::string api_key_;
    std::chrono::seconds timeout_;
};

// Serves recorded responses. Fixture format (JSON):
//   {"interactions": [{"request": "...", "status": 200, "body": "..."}, ...]}
// Requests with the same text are served in recording order; an unknown
// request is an error.
class ReplayTransport : public Transport {
public:
    static ReplayTransport from_json(const std::string& text);
    static ReplayTransport load(const std::string& path);

    void add(std::string request, HttpResponse response);
    HttpResponse get(const std::string& request) override;
    const std::vector<std::string>& log() const noexcept { return log_; }

private:
    std::map<std::string, std::vector<HttpResponse>> responses_;
    std::map<std::string, std::size_t> served_;
    std::vector<std::string> log_;
};

struct FetchConfig {
    std::string base_url = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/";
    std::string api_key;
    std::chrono::milliseconds min_interval{340};  // ~3 requests/s without an API key
    int max_retries = 4;
    std::chrono::milliseconds initial_backoff{500};
    std::size_t max_ids = 100000;

    // Reads SCIDOCBENCH_PUBMED_URL, SCIDOCBENCH_PUBMED_API_KEY and
    // SCIDOCBENCH_PUBMED_MIN_INTERVAL_MS over the defaults.
    static FetchConfig from_environment();
};

// Persisted progress for a single ISSN/year query.
struct FetchCursor {
    std::string issn;
    int year = 0;
    std::size_t batch_size = 0;
    std::vector<std::string> ids;
    std::size_t next_batch = 0;

    std::string to_json() const;
    static FetchCursor from_json(const std::string& text);
};

class PubmedFetcher {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    PubmedFetcher(FetchConfig config, Transport& transport, Sleeper sleeper = {});

    // Runs esearch for `issn` + publication year, then efetch over the PMID
    // list in batches of `batch_size` (<= 200). Each XML page is handed to
    // `sink` in order. With `cursor_path`, progress is saved after every page
    // and a cursor for the same ISSN, year and batch size resumes where it
    // stopped (earlier pages are not yielded again). Returns pages yielded.
    std::size_t fetch(const std::string& issn, int year, std::size_t batch_size,
                      const std::function<void(std::size_t page, const std::string& xml)>& sink,
                      const std::optional<std::string>& cursor_path = std::nullopt);

    std::vector<std::string> fetch_all(const std::string& issn, int year, std::size_t batch_size);

    static std::string esearch_request(const std::string& issn, int year, std::size_t max_ids);
    static std::string efetch_request(const std::vector<std::string>& ids);

private:
    std::string request(const std::string& path_and_query);
    std::vector<std::string> search(const std::string& issn, int year);

    FetchConfig config_;
    Transport& transport_;
    Sleeper sleeper_;
    std::optional<std::chrono::steady_clock::time_point> last_request_;
};

}  // namespace sdb::corpus
