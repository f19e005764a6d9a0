#pragma once

#include <string>
#include <vector>

#include "scidocbench/cluster.hpp"
#include "scidocbench/probe.hpp"
#include "scidocbench/retrieval.hpp"

// Result documents written by the cluster and retrieve subcommands, and the
// method-by-column tables assembled from result files.
namespace sdb::report {

struct ClusterResult {
    std::string method;
    std::string dataset;
    std::vector<cluster::PurityRow> rows;
    std::uint64_t seed = 0;
    std::size_t n_restarts = 1;
};

struct RetrievalResult {
    std::string method;
    std::vector<retrieval::FieldRow> fields;
    std::size_t max_pairs = 0;
    std::uint64_t seed = 0;
};

std::string to_json(const ClusterResult& result);
std::string to_json(const RetrievalResult& result);
ClusterResult cluster_result_from_json(const std::string& text);
RetrievalResult retrieval_result_from_json(const std::string& text);

// "probe", "cluster" or "retrieval"; throws InvalidArgument otherwise.
std::string result_kind(const std::string& text);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string to_csv(const Table& table);
std::string to_markdown(const Table& table);

// Scores are shown as percentages with two decimals; "-" marks a missing cell.
std::string percent(double fraction);

enum class Style {
    csv,       // mean and std in separate columns
    markdown,  // "mean ± std" in one cell
};

// Method rows x (dataset F1, dataset Acc) columns. Methods and datasets keep
// their first-seen order.
Table probe_table(const std::vector<probe::NamedProbeResult>& results, Style style);

// Method rows x k columns (purity). A dataset column is added when results
// span more than one dataset.
Table cluster_table(const std::vector<ClusterResult>& results);

// Method rows x field columns; `auc` selects the AUC companion table.
Table retrieval_table(const std::vector<RetrievalResult>& results, bool auc);

}  // namespace sdb::report
