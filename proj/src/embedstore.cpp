#include "scidocbench/embedstore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "scidocbench/errors.hpp"
#include "scidocbench/metrics.hpp"

namespace sdb::embedstore {

static_assert(std::endian::native == std::endian::little, "store I/O assumes a little-endian host");
static_assert(std::numeric_limits<double>::is_iec559);

namespace {

constexpr char kMagic[4] = {'M', 'E', 'V', '1'};

template <typename T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get(const char* what) {
        need(sizeof(T), what);
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::string_view take(std::size_t n, const char* what) {
        need(n, what);
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n, const char* what) {
        if (remaining() < n) {
            throw FormatError(std::string("truncated ") + what + ": expected " + std::to_string(pos_ + n) +
                              " bytes, file has " + std::to_string(bytes_.size()));
        }
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

EncoderInput assemble_input(const corpus::AbstractRecord& record) {
    EncoderInput in;
    in.text.reserve(record.title.size() + kSeparator.size() + record.abstract.size());
    in.text += record.title;
    in.text += kSeparator;
    in.text += record.abstract;
    in.separator_in_content = record.title.find("[SEP]") != std::string::npos ||
                              record.abstract.find("[SEP]") != std::string::npos;
    return in;
}

// ---------------------------------------------------------------------------

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim, std::vector<double> values)
    : ids_(std::move(ids)), dim_(dim), values_(std::move(values)) {
    if (values_.size() != ids_.size() * dim_) {
        throw InvalidArgument("embedding values size " + std::to_string(values_.size()) + " != rows*dim " +
                              std::to_string(ids_.size() * dim_));
    }
    if (dim_ > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("dim does not fit in 32 bits");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw InvalidArgument("non-finite embedding value in row " + std::to_string(i / std::max<std::size_t>(dim_, 1)));
        }
    }
    index_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!index_.emplace(ids_[i], i).second) throw InvalidArgument("duplicate embedding id " + ids_[i]);
    }
}

bool EmbeddingMatrix::contains(std::string_view id) const { return index_.count(std::string(id)) > 0; }

std::size_t EmbeddingMatrix::row_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw InvalidArgument("unknown id " + std::string(id));
    return it->second;
}

bool EmbeddingMatrix::bit_identical(const EmbeddingMatrix& other) const {
    return ids_ == other.ids_ && dim_ == other.dim_ && values_.size() == other.values_.size() &&
           std::memcmp(values_.data(), other.values_.data(), values_.size() * sizeof(double)) == 0;
}

EmbeddingMatrix EmbeddingMatrix::scaled(double factor) const {
    auto v = values_;
    for (auto& x : v) x *= factor;
    return EmbeddingMatrix(ids_, dim_, std::move(v));
}

std::string serialize(const EmbeddingMatrix& m) {
    std::string out;
    out.append(kMagic, 4);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim()));
    put<std::uint64_t>(out, m.rows());
    for (const auto& id : m.ids()) {
        if (id.size() > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("id too long");
        put<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
        out += id;
    }
    const auto& v = m.values();
    out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
    return out;
}

EmbeddingMatrix deserialize(std::string_view bytes) {
    Reader r(bytes);
    auto magic = r.take(4, "header");
    if (std::memcmp(magic.data(), kMagic, 4) != 0) throw FormatError("bad magic number, expected MEV1");
    const auto dim = r.get<std::uint32_t>("header");
    const auto rows = r.get<std::uint64_t>("header");
    // each id costs at least its 4-byte length prefix
    if (rows > r.remaining() / 4) {
        throw FormatError("truncated id table: header claims " + std::to_string(rows) + " rows");
    }

    std::vector<std::string> ids;
    ids.reserve(rows);
    for (std::uint64_t i = 0; i < rows; ++i) {
        auto len = r.get<std::uint32_t>("id table");
        ids.emplace_back(r.take(len, "id table"));
    }
    {
        std::vector<std::string_view> sorted(ids.begin(), ids.end());
        std::sort(sorted.begin(), sorted.end());
        auto dup = std::adjacent_find(sorted.begin(), sorted.end());
        if (dup != sorted.end()) throw FormatError("duplicate id " + std::string(*dup) + " in store");
    }

    if (dim != 0 && rows > std::numeric_limits<std::uint64_t>::max() / dim / sizeof(double)) {
        throw FormatError("header dimensions overflow");
    }
    const std::uint64_t expected = rows * dim * sizeof(double);
    if (r.remaining() != expected) {
        if (r.remaining() < expected) {
            throw FormatError("truncated payload: expected " + std::to_string(r.pos() + expected) +
                              " bytes, file has " + std::to_string(bytes.size()));
        }
        throw FormatError("trailing bytes after payload: expected " + std::to_string(r.pos() + expected) +
                          " bytes, file has " + std::to_string(bytes.size()));
    }
    std::vector<double> values(rows * dim);
    auto payload = r.take(expected, "payload");
    std::memcpy(values.data(), payload.data(), expected);
    try {
        return EmbeddingMatrix(std::move(ids), dim, std::move(values));
    } catch (const InvalidArgument& e) {
        throw FormatError(e.what());
    }
}

void write_store(const EmbeddingMatrix& matrix, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp + " for writing");
        auto bytes = serialize(matrix);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

EmbeddingMatrix read_store(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return deserialize(ss.str());
}

// ---------------------------------------------------------------------------

Similarity similarity_from_string(std::string_view name) {
    if (name == "cosine") return Similarity::cosine;
    if (name == "pearson") return Similarity::pearson;
    throw InvalidArgument("unknown similarity '" + std::string(name) + "' (expected cosine or pearson)");
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("cosine: length mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::vector<Neighbor> knn_query(const EmbeddingMatrix& matrix, std::string_view query_id, std::size_t k,
                                Similarity metric) {
    const std::size_t q = matrix.row_of(query_id);
    if (k < 1 || k + 1 > matrix.rows()) {
        throw InvalidArgument("k=" + std::to_string(k) + " out of range [1, " +
                              std::to_string(matrix.rows() == 0 ? 0 : matrix.rows() - 1) + "]");
    }
    std::vector<Neighbor> all;
    all.reserve(matrix.rows() - 1);
    const auto query = matrix.row(q);
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        if (i == q) continue;
        double s = metric == Similarity::cosine ? cosine(query, matrix.row(i)) : metrics::pearson(query, matrix.row(i));
        all.push_back({matrix.ids()[i], s});
    }
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                      [](const Neighbor& a, const Neighbor& b) {
                          if (a.score != b.score) return a.score > b.score;
                          return a.id < b.id;
                      });
    all.resize(k);
    return all;
}

}  // namespace sdb::embedstore
