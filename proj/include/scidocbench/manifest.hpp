#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sdb::cli {

// Everything needed to re-run one subcommand invocation. Holds no timestamps
// or host details, so identical runs produce identical manifests.
struct RunManifest {
    std::string subcommand;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    // Option name -> value as given on the command line (or its default).
    std::vector<std::pair<std::string, std::vector<std::string>>> config;
    std::uint64_t seed = 0;
    bool deterministic = true;
    std::string version;
    // Filled by hash_inputs(): SHA-256 of every input file, in `inputs` order.
    std::vector<std::string> input_sha256;

    void hash_inputs();
    std::string to_json() const;
};

std::string sha256_hex(std::string_view bytes);
// Throws IoError when the file cannot be read.
std::string sha256_file(const std::string& path);

std::string read_file(const std::string& path);
// Writes to a temporary sibling and renames it into place; creates missing
// parent directories.
void write_file(const std::string& path, std::string_view contents);

}  // namespace sdb::cli
