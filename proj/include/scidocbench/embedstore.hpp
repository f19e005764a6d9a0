#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scidocbench/corpus.hpp"

namespace sdb::embedstore {

// Encoder input for one record: title + " [SEP] " + abstract, verbatim.
// The leading classification token is not part of this string; each encoder
// prepends its own.
struct EncoderInput {
    std::string text;
    // True when title or abstract already contained the literal "[SEP]".
    bool separator_in_content = false;
};

inline constexpr std::string_view kSeparator = " [SEP] ";

EncoderInput assemble_input(const corpus::AbstractRecord& record);

// Dense row-per-document matrix of doubles keyed by record id.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    // Throws InvalidArgument on shape mismatch, duplicate ids or non-finite values.
    EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim, std::vector<double> values);

    std::size_t rows() const noexcept { return ids_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const std::vector<double>& values() const noexcept { return values_; }

    std::span<const double> row(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }
    bool contains(std::string_view id) const;
    // Throws InvalidArgument for an unknown id.
    std::size_t row_of(std::string_view id) const;

    // Same ids and dim, and every value bit-identical.
    bool bit_identical(const EmbeddingMatrix& other) const;

    // Copy with every value multiplied by `factor`.
    EmbeddingMatrix scaled(double factor) const;

private:
    std::vector<std::string> ids_;
    std::size_t dim_ = 0;
    std::vector<double> values_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Little-endian layout:
//   "MEV1" | dim u32 | rows u64 | rows x (len u32, UTF-8 bytes) | rows*dim f64
std::string serialize(const EmbeddingMatrix& matrix);
EmbeddingMatrix deserialize(std::string_view bytes);

// Written to a temporary sibling and renamed into place.
void write_store(const EmbeddingMatrix& matrix, const std::string& path);
EmbeddingMatrix read_store(const std::string& path);

enum class Similarity { cosine, pearson };

Similarity similarity_from_string(std::string_view name);

// Cosine similarity; 0 when either vector has zero norm.
double cosine(std::span<const double> a, std::span<const double> b);

struct Neighbor {
    std::string id;
    double score = 0.0;
};

// k nearest rows to `query_id` (excluding itself), highest score first,
// ties by ascending id. Requires 1 <= k <= rows - 1.
std::vector<Neighbor> knn_query(const EmbeddingMatrix& matrix, std::string_view query_id, std::size_t k,
                                Similarity metric);

}  // namespace sdb::embedstore
