#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "scidocbench/embedstore.hpp"
#include "scidocbench/errors.hpp"
#include "test_util.hpp"

using namespace sdb;
using namespace sdb::embedstore;

namespace {

// Byte layout built by hand, independent of serialize().
std::string encode(const std::vector<std::string>& ids, std::uint32_t dim, const std::vector<double>& values) {
    std::string out = "MEV1";
    auto put = [&](auto v) {
        for (std::size_t i = 0; i < sizeof(v); ++i) out.push_back(char((std::uint64_t(v) >> (8 * i)) & 0xff));
    };
    put(dim);
    put(std::uint64_t(ids.size()));
    for (const auto& id : ids) {
        put(std::uint32_t(id.size()));
        out += id;
    }
    for (double v : values) put(std::bit_cast<std::uint64_t>(v));
    return out;
}

EmbeddingMatrix random_matrix(std::mt19937_64& gen) {
    std::uniform_int_distribution<std::size_t> rows_d(0, 40), dim_d(1, 33);
    const auto rows = rows_d(gen), dim = dim_d(gen);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < rows; ++i) ids.push_back("doc-" + std::to_string(i) + (i % 3 ? "é" : ""));
    std::vector<double> values;
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (std::size_t i = 0; i < rows * dim; ++i) {
        switch (gen() % 5) {
            case 0: values.push_back(std::numeric_limits<double>::denorm_min() * double(gen() % 100)); break;
            case 1: values.push_back(-0.0); break;
            default: values.push_back(u(gen));
        }
    }
    return EmbeddingMatrix(std::move(ids), dim, std::move(values));
}

corpus::AbstractRecord rec(std::string title, std::string abstract) {
    corpus::AbstractRecord r;
    r.id = "x";
    r.title = std::move(title);
    r.abstract = std::move(abstract);
    return r;
}

}  // namespace

TEST(Embedstore, LayoutMatchesHandEncoding) {
    EmbeddingMatrix m({"a", "bc"}, 2, {1.0, -2.5, 0.0, 1e-310});
    EXPECT_EQ(serialize(m), encode({"a", "bc"}, 2, {1.0, -2.5, 0.0, 1e-310}));
    EXPECT_TRUE(deserialize(encode({"a", "bc"}, 2, {1.0, -2.5, 0.0, 1e-310})).bit_identical(m));
}

TEST(Embedstore, RandomRoundTripIsBitExact) {
    std::mt19937_64 gen(5);
    testutil::TempDir dir("store");
    for (int i = 0; i < 200; ++i) {
        const auto m = random_matrix(gen);
        const auto back = deserialize(serialize(m));
        ASSERT_TRUE(back.bit_identical(m)) << "matrix " << i;
        for (std::size_t r = 0; r < m.rows(); ++r) EXPECT_EQ(back.row_of(m.ids()[r]), r);
    }
    const auto m = random_matrix(gen);
    write_store(m, dir.file("m.mev"));
    EXPECT_TRUE(read_store(dir.file("m.mev")).bit_identical(m));
    EXPECT_FALSE(std::filesystem::exists(dir.file("m.mev.tmp")));
}

TEST(Embedstore, EdgeShapes) {
    EXPECT_EQ(deserialize(serialize(EmbeddingMatrix({}, 7, {}))).rows(), 0u);
    EXPECT_EQ(deserialize(serialize(EmbeddingMatrix({}, 7, {}))).dim(), 7u);
    const EmbeddingMatrix one({"only"}, 1, {std::numeric_limits<double>::denorm_min()});
    const auto back = deserialize(serialize(one));
    EXPECT_TRUE(back.bit_identical(one));
    EXPECT_EQ(back.row(0)[0], std::numeric_limits<double>::denorm_min());
}

TEST(Embedstore, TruncatedPayloadNamesSizes) {
    auto bytes = encode({"a", "b"}, 3, {1, 2, 3, 4, 5, 6});
    const auto full = bytes.size();
    bytes.resize(full - 5);
    try {
        deserialize(bytes);
        FAIL();
    } catch (const FormatError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("truncated payload"), std::string::npos) << msg;
        EXPECT_NE(msg.find(std::to_string(full)), std::string::npos) << msg;
        EXPECT_NE(msg.find(std::to_string(full - 5)), std::string::npos) << msg;
    }
}

TEST(Embedstore, RejectsCorruptContainers) {
    auto bytes = encode({"a"}, 1, {1});
    auto bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(deserialize(bad), FormatError);
    EXPECT_THROW(deserialize(bytes + "z"), FormatError);
    EXPECT_THROW(deserialize(encode({"a", "a"}, 1, {1, 2})), FormatError);
    EXPECT_THROW(deserialize(encode({"a"}, 1, {std::nan("")})), FormatError);
    EXPECT_THROW(deserialize(std::string("MEV")), FormatError);
    // header claims far more rows than bytes exist
    auto huge = encode({}, 1, {});
    std::uint64_t rows = 1ull << 60;
    std::memcpy(huge.data() + 8, &rows, 8);
    EXPECT_THROW(deserialize(huge), FormatError);
    for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
        EXPECT_THROW(deserialize(bytes.substr(0, cut)), FormatError) << cut;
    }
}

TEST(Embedstore, ConstructorValidation) {
    EXPECT_THROW(EmbeddingMatrix({"a"}, 2, {1.0}), InvalidArgument);
    EXPECT_THROW(EmbeddingMatrix({"a", "a"}, 1, {1.0, 2.0}), InvalidArgument);
    EXPECT_THROW(EmbeddingMatrix({"a"}, 1, {INFINITY}), InvalidArgument);
    EmbeddingMatrix m({"a"}, 1, {1.0});
    EXPECT_THROW(m.row_of("b"), InvalidArgument);
    EXPECT_TRUE(m.contains("a"));
    EXPECT_DOUBLE_EQ(m.scaled(3.0).row(0)[0], 3.0);
}

TEST(Embedstore, AssembleInput) {
    auto in = assemble_input(rec("Deep nets", "We study them."));
    EXPECT_EQ(in.text, "Deep nets [SEP] We study them.");
    EXPECT_FALSE(in.separator_in_content);
    in = assemble_input(rec("A [SEP] B", "c"));
    EXPECT_EQ(in.text, "A [SEP] B [SEP] c");
    EXPECT_TRUE(in.separator_in_content);
    EXPECT_TRUE(assemble_input(rec("t", "x[SEP]")).separator_in_content);
    EXPECT_EQ(assemble_input(rec("", "")).text, " [SEP] ");
    EXPECT_EQ(assemble_input(rec("  spaced ", "ünï")).text, "  spaced  [SEP] ünï");
}

TEST(Embedstore, CosineExamples) {
    const std::vector<double> a{1, 0}, b{0, 1}, c{2, 0}, z{0, 0}, d{-1, 0};
    EXPECT_DOUBLE_EQ(cosine(a, b), 0.0);
    EXPECT_DOUBLE_EQ(cosine(a, c), 1.0);
    EXPECT_DOUBLE_EQ(cosine(a, d), -1.0);
    EXPECT_DOUBLE_EQ(cosine(a, z), 0.0);
    EXPECT_THROW(cosine(a, std::vector<double>{1, 2, 3}), InvalidArgument);
}

TEST(Embedstore, KnnMatchesBruteForce) {
    std::mt19937_64 gen(17);
    std::normal_distribution<double> n01;
    const std::size_t rows = 60, dim = 8;
    std::vector<std::string> ids;
    std::vector<double> values;
    for (std::size_t i = 0; i < rows; ++i) {
        ids.push_back("r" + std::to_string(i));
        for (std::size_t j = 0; j < dim; ++j) values.push_back(n01(gen));
    }
    // an exact duplicate of r0 to exercise the tie-break
    ids.push_back("r00");
    values.insert(values.end(), values.begin(), values.begin() + dim);
    const EmbeddingMatrix m(ids, dim, values);

    for (auto metric : {Similarity::cosine, Similarity::pearson}) {
        for (const std::string q : {"r0", "r7", "r00"}) {
            const auto got = knn_query(m, q, 10, metric);
            ASSERT_EQ(got.size(), 10u);
            std::vector<std::pair<double, std::string>> all;
            const auto qi = m.row_of(q);
            for (std::size_t i = 0; i < m.rows(); ++i) {
                if (i == qi) continue;
                long double dot = 0, nq = 0, ni = 0, mq = 0, mi = 0;
                if (metric == Similarity::pearson) {
                    for (std::size_t j = 0; j < dim; ++j) {
                        mq += m.row(qi)[j] / dim;
                        mi += m.row(i)[j] / dim;
                    }
                }
                for (std::size_t j = 0; j < dim; ++j) {
                    const long double x = m.row(qi)[j] - mq, y = m.row(i)[j] - mi;
                    dot += x * y;
                    nq += x * x;
                    ni += y * y;
                }
                all.emplace_back(double(dot / std::sqrt(nq * ni)), m.ids()[i]);
            }
            std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
                if (std::fabs(a.first - b.first) > 1e-12) return a.first > b.first;
                return a.second < b.second;
            });
            for (std::size_t r = 0; r < 10; ++r) {
                EXPECT_EQ(got[r].id, all[r].second) << q << " rank " << r;
                EXPECT_NEAR(got[r].score, all[r].first, 1e-12);
                EXPECT_NE(got[r].id, q);
            }
        }
    }
    EXPECT_EQ(knn_query(m, "r0", 1, Similarity::cosine)[0].id, "r00");
    EXPECT_THROW(knn_query(m, "r0", 0, Similarity::cosine), InvalidArgument);
    EXPECT_THROW(knn_query(m, "r0", m.rows(), Similarity::cosine), InvalidArgument);
    EXPECT_NO_THROW(knn_query(m, "r0", m.rows() - 1, Similarity::cosine));
    EXPECT_THROW(knn_query(m, "nope", 1, Similarity::cosine), InvalidArgument);
}

TEST(Embedstore, OneHotRowsAreOrthogonal) {
    const std::size_t n = 5;
    std::vector<std::string> ids;
    std::vector<double> values(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(std::string(1, char('e' + i)));
        values[i * n + i] = 1.0;
    }
    const EmbeddingMatrix m(ids, n, values);
    const auto got = knn_query(m, "g", n - 1, Similarity::cosine);
    std::vector<std::string> order;
    for (const auto& nb : got) {
        EXPECT_EQ(nb.score, 0.0);
        order.push_back(nb.id);
    }
    EXPECT_EQ(order, (std::vector<std::string>{"e", "f", "h", "i"}));
}

TEST(Embedstore, SimilarityNames) {
    EXPECT_EQ(similarity_from_string("cosine"), Similarity::cosine);
    EXPECT_EQ(similarity_from_string("pearson"), Similarity::pearson);
    EXPECT_THROW(similarity_from_string("l2"), InvalidArgument);
}
