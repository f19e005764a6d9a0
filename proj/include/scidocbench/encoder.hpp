#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scidocbench/corpus.hpp"
#include "scidocbench/embedstore.hpp"

// Desk-scale encoder trained to predict a document's journal: signed hashed
// bag-of-tokens features -> one ReLU hidden layer (the document
// representation) -> softmax over journal classes, cross-entropy loss.
namespace sdb::encoder {

// Sorted by index, no duplicate indices.
struct SparseVector {
    std::vector<std::uint32_t> indices;
    std::vector<double> values;

    std::size_t nnz() const noexcept { return indices.size(); }
};

// Lowercase, split on anything that is not an ASCII letter/digit (bytes >= 0x80
// are kept inside tokens).
std::vector<std::string> tokenize(std::string_view text);

// 64-bit FNV-1a over the 8 little-endian bytes of `seed` followed by the token bytes.
std::uint64_t token_hash(std::string_view token, std::uint64_t seed);

// Each token adds sign * 1 to bucket hash % feature_dim, where sign is -1 when
// bit 63 of the hash is set. The summed vector is L2-normalized (zero stays zero).
SparseVector featurize(std::string_view text, std::size_t feature_dim, std::uint64_t seed);

struct Params {
    std::size_t feature_dim = 0;
    std::size_t hidden_dim = 0;
    std::size_t n_classes = 0;
    std::uint64_t seed = 0;
    std::vector<double> w1;  // feature_dim x hidden_dim, row-major
    std::vector<double> b1;  // hidden_dim
    std::vector<double> w2;  // hidden_dim x n_classes, row-major
    std::vector<double> b2;  // n_classes

    void validate() const;
    bool bit_identical(const Params& other) const;
};

// Zero biases; W1 ~ N(0, 2) (inputs are unit-norm, so pre-activations have
// variance 2 as in He scaling), W2 ~ N(0, 2 / hidden_dim).
Params initialize(std::size_t feature_dim, std::size_t hidden_dim, std::size_t n_classes, std::uint64_t seed);

struct ForwardResult {
    std::vector<double> pre;     // W1^T x + b1
    std::vector<double> hidden;  // relu(pre), the representation v
    std::vector<double> logits;  // W2^T v + b2
    std::vector<double> probs;   // softmax(logits)
};

ForwardResult forward(const Params& params, const SparseVector& x);

// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> logits);

// -log(max(probs[label], 1e-15)).
double ce_loss(std::span<const double> probs, std::size_t label);

struct Gradients {
    std::vector<double> w1, b1, w2, b2;
};

// Mean cross-entropy over the batch and its exact gradient.
double batch_loss_and_gradients(const Params& params, std::span<const SparseVector> xs,
                                std::span<const std::size_t> labels, Gradients& grads);

double mean_loss(const Params& params, std::span<const SparseVector> xs, std::span<const std::size_t> labels);

struct TrainConfig {
    std::size_t feature_dim = 4096;
    std::size_t hidden_dim = 64;
    double lr = 0.5;
    std::size_t batch = 100;
    std::size_t epochs = 20;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainResult {
    Params params;
    double initial_loss = 0.0;           // mean loss over the corpus before the first step
    std::vector<double> epoch_loss;      // mean minibatch loss per epoch
};

// Mini-batch gradient descent on mean cross-entropy against each record's
// journal class. Single-threaded and bit-reproducible for a given seed.
TrainResult train(std::span<const corpus::AbstractRecord> records, const corpus::JournalLabelMap& labels,
                  const TrainConfig& cfg);

// Featurizes assemble_input(record) with the params' feature_dim and seed.
SparseVector featurize_record(const corpus::AbstractRecord& record, const Params& params);

// Row i is the hidden representation of records[i].
embedstore::EmbeddingMatrix extract(const Params& params, std::span<const corpus::AbstractRecord> records);

// Little-endian: "MTP1" | feature_dim u32 | hidden_dim u32 | n_classes u32 |
// seed u64 | w1 | b1 | w2 | b2 (f64, row-major).
void write_params(const Params& params, const std::string& path);
Params read_params(const std::string& path);
std::string serialize_params(const Params& params);
Params deserialize_params(std::string_view bytes);

}  // namespace sdb::encoder
