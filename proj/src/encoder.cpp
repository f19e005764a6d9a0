#include "scidocbench/encoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "scidocbench/errors.hpp"
#include "scidocbench/rng.hpp"

namespace sdb::encoder {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
constexpr double kProbFloor = 1e-15;
constexpr char kMagic[4] = {'M', 'T', 'P', '1'};

bool is_token_byte(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80; }

void check_finite(const std::vector<double>& v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) throw InvalidArgument(std::string("non-finite value in ") + what);
    }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
        if (is_token_byte(c)) {
            current.push_back(static_cast<char>(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::uint64_t token_hash(std::string_view token, std::uint64_t seed) {
    std::uint64_t h = kFnvOffset;
    for (int i = 0; i < 8; ++i) {
        h ^= (seed >> (8 * i)) & 0xffu;
        h *= kFnvPrime;
    }
    for (char c : token) {
        h ^= static_cast<unsigned char>(c);
        h *= kFnvPrime;
    }
    return h;
}

SparseVector featurize(std::string_view text, std::size_t feature_dim, std::uint64_t seed) {
    if (feature_dim < 2) throw InvalidArgument("feature_dim must be >= 2");
    if (feature_dim > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("feature_dim too large");
    std::vector<std::pair<std::uint32_t, double>> hits;
    for (const auto& token : tokenize(text)) {
        const std::uint64_t h = token_hash(token, seed);
        const double sign = (h >> 63) ? -1.0 : 1.0;
        hits.emplace_back(static_cast<std::uint32_t>(h % feature_dim), sign);
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    SparseVector x;
    for (std::size_t i = 0; i < hits.size();) {
        double sum = 0.0;
        std::size_t j = i;
        while (j < hits.size() && hits[j].first == hits[i].first) sum += hits[j++].second;
        if (sum != 0.0) {
            x.indices.push_back(hits[i].first);
            x.values.push_back(sum);
        }
        i = j;
    }
    double norm = 0.0;
    for (double v : x.values) norm += v * v;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& v : x.values) v /= norm;
    }
    return x;
}

// ---------------------------------------------------------------------------

void Params::validate() const {
    if (feature_dim < 2 || hidden_dim < 1 || n_classes < 1) throw InvalidArgument("encoder dimensions must be positive");
    if (w1.size() != feature_dim * hidden_dim || b1.size() != hidden_dim || w2.size() != hidden_dim * n_classes ||
        b2.size() != n_classes) {
        throw InvalidArgument("encoder parameter blocks do not match their dimensions");
    }
    check_finite(w1, "w1");
    check_finite(b1, "b1");
    check_finite(w2, "w2");
    check_finite(b2, "b2");
}

bool Params::bit_identical(const Params& o) const {
    auto same = [](const std::vector<double>& a, const std::vector<double>& b) {
        return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
    };
    return feature_dim == o.feature_dim && hidden_dim == o.hidden_dim && n_classes == o.n_classes && seed == o.seed &&
           same(w1, o.w1) && same(b1, o.b1) && same(w2, o.w2) && same(b2, o.b2);
}

Params initialize(std::size_t feature_dim, std::size_t hidden_dim, std::size_t n_classes, std::uint64_t seed) {
    Params p;
    p.feature_dim = feature_dim;
    p.hidden_dim = hidden_dim;
    p.n_classes = n_classes;
    p.seed = seed;
    if (feature_dim < 2 || hidden_dim < 1 || n_classes < 1) throw InvalidArgument("encoder dimensions must be positive");

    Rng rng(derive_seed(seed, 10));
    const double w1_std = std::sqrt(2.0);
    const double w2_std = std::sqrt(2.0 / static_cast<double>(hidden_dim));
    p.w1.resize(feature_dim * hidden_dim);
    for (auto& w : p.w1) w = w1_std * rng.normal();
    p.b1.assign(hidden_dim, 0.0);
    p.w2.resize(hidden_dim * n_classes);
    for (auto& w : p.w2) w = w2_std * rng.normal();
    p.b2.assign(n_classes, 0.0);
    return p;
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> probs(logits.size());
    if (logits.empty()) return probs;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) sum += probs[i] = std::exp(logits[i] - mx);
    for (auto& p : probs) p /= sum;
    return probs;
}

ForwardResult forward(const Params& params, const SparseVector& x) {
    const std::size_t H = params.hidden_dim;
    const std::size_t C = params.n_classes;
    if (params.w1.size() != params.feature_dim * H || params.w2.size() != H * C) {
        throw InvalidArgument("forward: parameter blocks do not match their dimensions");
    }
    if (x.indices.size() != x.values.size()) throw InvalidArgument("forward: malformed sparse vector");

    ForwardResult r;
    r.pre = params.b1;
    for (std::size_t k = 0; k < x.nnz(); ++k) {
        if (x.indices[k] >= params.feature_dim) {
            throw InvalidArgument("forward: feature index " + std::to_string(x.indices[k]) + " >= feature_dim " +
                                  std::to_string(params.feature_dim));
        }
        const double* row = params.w1.data() + static_cast<std::size_t>(x.indices[k]) * H;
        const double xv = x.values[k];
        for (std::size_t h = 0; h < H; ++h) r.pre[h] += row[h] * xv;
    }
    r.hidden.resize(H);
    for (std::size_t h = 0; h < H; ++h) r.hidden[h] = r.pre[h] > 0.0 ? r.pre[h] : 0.0;

    r.logits = params.b2;
    for (std::size_t h = 0; h < H; ++h) {
        const double v = r.hidden[h];
        if (v == 0.0) continue;
        const double* row = params.w2.data() + h * C;
        for (std::size_t c = 0; c < C; ++c) r.logits[c] += row[c] * v;
    }
    r.probs = softmax(r.logits);
    return r;
}

double ce_loss(std::span<const double> probs, std::size_t label) {
    if (label >= probs.size()) throw InvalidArgument("ce_loss: label out of range");
    return -std::log(std::max(probs[label], kProbFloor));
}

double batch_loss_and_gradients(const Params& params, std::span<const SparseVector> xs,
                                std::span<const std::size_t> labels, Gradients& g) {
    if (xs.size() != labels.size() || xs.empty()) throw InvalidArgument("batch: features/labels size mismatch");
    const std::size_t H = params.hidden_dim;
    const std::size_t C = params.n_classes;
    g.w1.assign(params.w1.size(), 0.0);
    g.b1.assign(H, 0.0);
    g.w2.assign(params.w2.size(), 0.0);
    g.b2.assign(C, 0.0);

    const double inv_b = 1.0 / static_cast<double>(xs.size());
    double loss = 0.0;
    std::vector<double> dlogits(C), dpre(H);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto f = forward(params, xs[i]);
        loss += ce_loss(f.probs, labels[i]);

        for (std::size_t c = 0; c < C; ++c) dlogits[c] = (f.probs[c] - (c == labels[i] ? 1.0 : 0.0)) * inv_b;
        for (std::size_t c = 0; c < C; ++c) g.b2[c] += dlogits[c];
        for (std::size_t h = 0; h < H; ++h) {
            const double* w2row = params.w2.data() + h * C;
            double* g2row = g.w2.data() + h * C;
            double back = 0.0;
            for (std::size_t c = 0; c < C; ++c) {
                g2row[c] += f.hidden[h] * dlogits[c];
                back += w2row[c] * dlogits[c];
            }
            dpre[h] = f.pre[h] > 0.0 ? back : 0.0;
            g.b1[h] += dpre[h];
        }
        const auto& x = xs[i];
        for (std::size_t k = 0; k < x.nnz(); ++k) {
            double* g1row = g.w1.data() + static_cast<std::size_t>(x.indices[k]) * H;
            for (std::size_t h = 0; h < H; ++h) g1row[h] += x.values[k] * dpre[h];
        }
    }
    return loss * inv_b;
}

double mean_loss(const Params& params, std::span<const SparseVector> xs, std::span<const std::size_t> labels) {
    if (xs.size() != labels.size() || xs.empty()) throw InvalidArgument("mean_loss: features/labels size mismatch");
    double loss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) loss += ce_loss(forward(params, xs[i]).probs, labels[i]);
    return loss / static_cast<double>(xs.size());
}

void TrainConfig::validate() const {
    if (feature_dim < 2) throw InvalidArgument("feature_dim must be >= 2");
    if (hidden_dim < 1) throw InvalidArgument("hidden_dim must be >= 1");
    if (batch < 1) throw InvalidArgument("batch must be >= 1");
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidArgument("lr must be finite and >= 0");
}

SparseVector featurize_record(const corpus::AbstractRecord& record, const Params& params) {
    return featurize(embedstore::assemble_input(record).text, params.feature_dim, params.seed);
}

TrainResult train(std::span<const corpus::AbstractRecord> records, const corpus::JournalLabelMap& labels,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (records.empty()) throw InvalidArgument("train: empty corpus");
    if (labels.size() == 0) throw InvalidArgument("train: empty label map");

    std::vector<std::size_t> y(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) y[i] = labels.index_of(records[i].journal);

    TrainResult result;
    result.params = initialize(cfg.feature_dim, cfg.hidden_dim, labels.size(), cfg.seed);
    auto& p = result.params;

    std::vector<SparseVector> xs(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) xs[i] = featurize_record(records[i], p);
    result.initial_loss = mean_loss(p, xs, y);

    Rng rng(derive_seed(cfg.seed, 11));
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    Gradients g;
    std::vector<SparseVector> bx;
    std::vector<std::size_t> by;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            const std::size_t end = std::min(order.size(), start + cfg.batch);
            bx.clear();
            by.clear();
            for (std::size_t i = start; i < end; ++i) {
                bx.push_back(xs[order[i]]);
                by.push_back(y[order[i]]);
            }
            epoch_loss += batch_loss_and_gradients(p, bx, by, g);
            ++n_batches;
            for (std::size_t i = 0; i < p.w1.size(); ++i) p.w1[i] -= cfg.lr * g.w1[i];
            for (std::size_t i = 0; i < p.b1.size(); ++i) p.b1[i] -= cfg.lr * g.b1[i];
            for (std::size_t i = 0; i < p.w2.size(); ++i) p.w2[i] -= cfg.lr * g.w2[i];
            for (std::size_t i = 0; i < p.b2.size(); ++i) p.b2[i] -= cfg.lr * g.b2[i];
        }
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(n_batches));
    }
    p.validate();
    return result;
}

embedstore::EmbeddingMatrix extract(const Params& params, std::span<const corpus::AbstractRecord> records) {
    params.validate();
    std::vector<std::string> ids;
    std::vector<double> values;
    ids.reserve(records.size());
    values.reserve(records.size() * params.hidden_dim);
    for (const auto& r : records) {
        ids.push_back(r.id);
        const auto f = forward(params, featurize_record(r, params));
        values.insert(values.end(), f.hidden.begin(), f.hidden.end());
    }
    return embedstore::EmbeddingMatrix(std::move(ids), params.hidden_dim, std::move(values));
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

void put_block(std::string& out, const std::vector<double>& v) {
    out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
}

}  // namespace

std::string serialize_params(const Params& p) {
    p.validate();
    for (auto d : {p.feature_dim, p.hidden_dim, p.n_classes}) {
        if (d > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("dimension does not fit in 32 bits");
    }
    std::string out(kMagic, 4);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.feature_dim));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.hidden_dim));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.n_classes));
    put<std::uint64_t>(out, p.seed);
    put_block(out, p.w1);
    put_block(out, p.b1);
    put_block(out, p.w2);
    put_block(out, p.b2);
    return out;
}

Params deserialize_params(std::string_view bytes) {
    constexpr std::size_t header = 4 + 4 * 3 + 8;
    if (bytes.size() < header) {
        throw FormatError("truncated header: expected " + std::to_string(header) + " bytes, file has " +
                          std::to_string(bytes.size()));
    }
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad magic number, expected MTP1");
    std::uint32_t dims[3];
    std::memcpy(dims, bytes.data() + 4, sizeof dims);
    Params p;
    p.feature_dim = dims[0];
    p.hidden_dim = dims[1];
    p.n_classes = dims[2];
    std::memcpy(&p.seed, bytes.data() + 16, 8);

    const std::uint64_t count = static_cast<std::uint64_t>(p.feature_dim) * p.hidden_dim + p.hidden_dim +
                                static_cast<std::uint64_t>(p.hidden_dim) * p.n_classes + p.n_classes;
    const std::uint64_t expected = header + count * sizeof(double);
    if (bytes.size() != expected) {
        throw FormatError(std::string(bytes.size() < expected ? "truncated payload" : "trailing bytes") +
                          ": expected " + std::to_string(expected) + " bytes, file has " + std::to_string(bytes.size()));
    }
    std::size_t pos = header;
    auto take = [&](std::vector<double>& v, std::size_t n) {
        v.resize(n);
        std::memcpy(v.data(), bytes.data() + pos, n * sizeof(double));
        pos += n * sizeof(double);
    };
    take(p.w1, p.feature_dim * p.hidden_dim);
    take(p.b1, p.hidden_dim);
    take(p.w2, p.hidden_dim * p.n_classes);
    take(p.b2, p.n_classes);
    try {
        p.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError(e.what());
    }
    return p;
}

void write_params(const Params& params, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp + " for writing");
        auto bytes = serialize_params(params);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

Params read_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return deserialize_params(ss.str());
}

}  // namespace sdb::encoder
