#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "scidocbench/cli.hpp"
#include "scidocbench/manifest.hpp"
#include "scidocbench/pubmed_fetch.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = sdb::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

void ok(std::vector<std::string> args) {
    const auto r = cli(args);
    ASSERT_EQ(r.code, 0) << args.front() << ": " << r.err;
}

// synth -> train-toy -> extract for trained and untrained models, then every evaluation.
void pipeline(const testutil::TempDir& d) {
    const auto f = [&](const std::string& n) { return d.file(n); };
    ok({"synth", "--output", f("corpus.jsonl"), "--fields", "3", "--journals-per-field", "3", "--docs-per-journal",
        "20", "--vocab", "400"});
    for (const std::string& epochs : {"0", "3"}) {
        const std::string tag = epochs == "0" ? "random" : "trained";
        ok({"train-toy", "--input", f("corpus.jsonl"), "--output", f(tag + ".model"), "--epochs", epochs,
            "--feature-dim", "512", "--hidden", "16", "--batch", "20", "--seed", "3"});
        ok({"extract", "--model", f(tag + ".model"), "--input", f("corpus.jsonl"), "--output", f(tag + ".mev")});
        ok({"probe", "--input", f(tag + ".mev"), "--corpus", f("corpus.jsonl"), "--label-by", "journal", "--output",
            f(tag + ".probe.json"), "--runs", "2", "--method", tag});
        ok({"cluster", "--input", f(tag + ".mev"), "--corpus", f("corpus.jsonl"), "--label-by", "journal", "--ks",
            "3", "9", "--output", f(tag + ".cluster.json"), "--method", tag});
        ok({"retrieve", "--input", f(tag + ".mev"), "--corpus", f("corpus.jsonl"), "--output",
            f(tag + ".retrieval.json"), "--method", tag});
    }
}

std::string sha(const std::string& path) { return sdb::cli::sha256_file(path); }

}  // namespace

TEST(Cli, EndToEndPipelineAndReport) {
    testutil::TempDir d("cli");
    pipeline(d);
    for (const std::string n : {"corpus.jsonl", "trained.model", "trained.loss.csv", "trained.mev",
                                "trained.probe.json", "trained.probe.csv", "trained.probe.md", "trained.cluster.md",
                                "trained.retrieval.ap.csv", "trained.retrieval.auc.csv", "trained.mev.manifest.json"}) {
        EXPECT_TRUE(fs::exists(d.file(n))) << n;
    }
    const auto manifest = nlohmann::json::parse(testutil::slurp(d.file("trained.probe.json.manifest.json")));
    EXPECT_EQ(manifest["subcommand"], "probe");
    EXPECT_EQ(manifest["inputs"][0]["sha256"], sha(d.file("trained.mev")));

    ok({"report", "--input", d.file("trained.probe.json"), d.file("random.probe.json"), d.file("trained.cluster.json"),
        d.file("random.cluster.json"), d.file("trained.retrieval.json"), d.file("random.retrieval.json"), "--output",
        d.file("report")});
    const auto t1 = testutil::slurp(d.file("report/table1.md"));
    EXPECT_NE(t1.find("| trained |"), std::string::npos) << t1;
    EXPECT_NE(t1.find("| random |"), std::string::npos) << t1;
    EXPECT_EQ(std::count(t1.begin(), t1.end(), '\n'), 4);  // header, rule, two methods
    EXPECT_TRUE(fs::exists(d.file("report/table2.csv")));
    EXPECT_TRUE(fs::exists(d.file("report/table3_auc.csv")));
    EXPECT_TRUE(fs::exists(d.file("report/manifest.json")));

    ok({"compare", "--a", d.file("trained.probe.json"), "--b", d.file("random.probe.json"), "--metric", "acc",
        "--output", d.file("cmp.json")});
    const auto cmp = nlohmann::json::parse(testutil::slurp(d.file("cmp.json")));
    EXPECT_EQ(cmp["kind"], "comparison");
    EXPECT_GT(cmp["t"].get<double>(), 0.0);

    ok({"knn", "--input", d.file("trained.mev"), "--query", "syn-000000", "--k", "5", "--output", d.file("nn.csv")});
    const auto nn = testutil::slurp(d.file("nn.csv"));
    EXPECT_EQ(std::count(nn.begin(), nn.end(), '\n'), 6);
    EXPECT_EQ(nn.find("syn-000000,"), std::string::npos);
}

TEST(Cli, ArtifactsAreReproducible) {
    testutil::TempDir a("cli-a"), b("cli-b");
    pipeline(a);
    pipeline(b);
    for (const std::string n : {"corpus.jsonl", "trained.model", "trained.mev", "random.mev", "trained.probe.json",
                                "trained.cluster.json", "trained.retrieval.json", "trained.loss.csv"}) {
        EXPECT_EQ(sha(a.file(n)), sha(b.file(n))) << n;
    }
}

TEST(Cli, InputsAreNotModified) {
    testutil::TempDir d("cli-ro");
    ok({"synth", "--output", d.file("c.jsonl"), "--fields", "2", "--journals-per-field", "2", "--docs-per-journal",
        "10", "--vocab", "200"});
    const auto before = sha(d.file("c.jsonl"));
    ok({"filter", "--input", d.file("c.jsonl"), "--output", d.file("f.jsonl"), "--min-per-journal", "5",
        "--recent-year", "2020"});
    EXPECT_EQ(sha(d.file("c.jsonl")), before);
    const auto r = cli({"filter", "--input", d.file("c.jsonl"), "--output", d.file("c.jsonl"), "--min-per-journal",
                        "5", "--recent-year", "2020"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("refusing to overwrite input"), std::string::npos) << r.err;
    EXPECT_EQ(sha(d.file("c.jsonl")), before);
}

TEST(Cli, ExitCodes) {
    auto r = cli({"frobnicate"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("unknown subcommand 'frobnicate'"), std::string::npos);
    r = cli({"extract", "--model", "m"});
    EXPECT_EQ(r.code, 2);
    r = cli({"extract", "--model", "/nonexistent/m", "--input", "/nonexistent/c", "--output", "/tmp/x"});
    EXPECT_EQ(r.code, 1);
    const auto err = nlohmann::json::parse(r.err.substr(0, r.err.find('\n')));
    EXPECT_EQ(err["subcommand"], "extract");
    EXPECT_EQ(err["error"], "io_error");
    EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, ConfigFileWithCommandLineOverride) {
    testutil::TempDir d("cli-cfg");
    testutil::spit(d.file("cfg.json"), R"({"fields": 2, "journals-per-field": 2, "docs-per-journal": 7, "vocab": 100})");
    ok({"synth", "--config", d.file("cfg.json"), "--docs-per-journal", "5", "--output", d.file("c.jsonl")});
    const auto text = testutil::slurp(d.file("c.jsonl"));
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2 * 2 * 5);
    testutil::spit(d.file("bad.json"), "[1, 2]");
    EXPECT_NE(cli({"synth", "--config", d.file("bad.json"), "--output", d.file("c2.jsonl")}).code, 0);
}

TEST(Cli, LabelSourceIsRequired) {
    testutil::TempDir d("cli-lbl");
    ok({"synth", "--output", d.file("c.jsonl"), "--fields", "2", "--journals-per-field", "2", "--docs-per-journal",
        "10", "--vocab", "200"});
    ok({"train-toy", "--input", d.file("c.jsonl"), "--output", d.file("m"), "--epochs", "0", "--feature-dim", "64",
        "--hidden", "4"});
    ok({"extract", "--model", d.file("m"), "--input", d.file("c.jsonl"), "--output", d.file("e.mev")});
    EXPECT_NE(cli({"probe", "--input", d.file("e.mev"), "--output", d.file("p.json")}).code, 0);
    testutil::spit(d.file("labels.tsv"), "syn-000000\ta\n");
    const auto r = cli({"probe", "--input", d.file("e.mev"), "--labels", d.file("labels.tsv"), "--output", d.file("p.json")});
    EXPECT_EQ(r.code, 1);  // most rows have no label
}

TEST(Cli, FetchPubmedFromReplay) {
    testutil::TempDir d("cli-fetch");
    const auto page = testutil::slurp(testutil::fixture("pubmed_one.xml"));
    nlohmann::json fixture;
    fixture["interactions"] = {
        {{"request", sdb::corpus::PubmedFetcher::esearch_request("1234-5678", 2021, 100000)},
         {"status", 200},
         {"body", R"({"esearchresult": {"idlist": ["34567890"]}})"}},
        {{"request", sdb::corpus::PubmedFetcher::efetch_request({"34567890"})}, {"status", 200}, {"body", page}}};
    testutil::spit(d.file("replay.json"), fixture.dump());
    ok({"fetch-pubmed", "--issn", "1234-5678", "--replay", d.file("replay.json"), "--output", d.file("out.jsonl"),
        "--raw-dir", d.file("raw")});
    const auto text = testutil::slurp(d.file("out.jsonl"));
    EXPECT_NE(text.find("\"34567890\""), std::string::npos) << text;
    EXPECT_TRUE(fs::exists(d.file("raw/page-00000.xml")));
    EXPECT_NE(cli({"fetch-pubmed", "--issn", "1234-5678", "--replay", d.file("replay.json"), "--output",
                   d.file("o2.jsonl"), "--cursor", d.file("cur.json")})
                  .code,
              0);  // a cursor needs --raw-dir
}

TEST(Cli, IngestFixtures) {
    testutil::TempDir d("cli-ingest");
    ok({"ingest-pubmed", "--input", testutil::fixture("pubmed_mixed.xml"), testutil::fixture("pubmed_one.xml"),
        "--output", d.file("p.jsonl")});
    const auto text = testutil::slurp(d.file("p.jsonl"));
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
    const auto rep = nlohmann::json::parse(testutil::slurp(d.file("p.report.json")));
    EXPECT_FALSE(rep.empty());
    ok({"ingest-arxiv", "--input", testutil::fixture("arxiv_sample.jsonl"), "--output", d.file("a.jsonl")});
    const auto arxiv = testutil::slurp(d.file("a.jsonl"));
    EXPECT_EQ(std::count(arxiv.begin(), arxiv.end(), '\n'), 3);
    ok({"export-input", "--input", d.file("a.jsonl"), "--output", d.file("in.jsonl")});
    EXPECT_NE(testutil::slurp(d.file("in.jsonl")).find(" [SEP] "), std::string::npos);
}
