#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scidocbench/embedstore.hpp"
#include "scidocbench/metrics.hpp"

namespace sdb::cluster {

enum class Init { kmeanspp, random };

struct KMeansConfig {
    std::size_t k = 10;
    std::size_t max_iters = 300;
    double rel_tol = 1e-6;
    std::uint64_t seed = 0;
    Init init = Init::kmeanspp;
    std::size_t n_restarts = 1;  // lowest-inertia restart wins
};

struct KMeansResult {
    std::vector<std::size_t> assignments;
    std::vector<double> centroids;       // k x dim, row-major
    double inertia = 0.0;                // sum of squared distances to assigned centroid
    std::vector<double> inertia_trace;   // inertia after every assignment step
    std::size_t iterations = 0;
};

// Lloyd iterations from k-means++ (or uniform random) seeding. Stops when the
// relative inertia improvement drops below rel_tol, inertia reaches 0, or
// max_iters is hit. An empty cluster is re-seeded with the point farthest from
// its assigned centroid. Nearest-centroid ties go to the lowest cluster id.
// Throws InvalidArgument when k is 0 or exceeds the number of points, and
// std::logic_error if inertia ever increases between iterations.
KMeansResult kmeans(const embedstore::EmbeddingMatrix& matrix, const KMeansConfig& cfg);

struct PurityRow {
    std::size_t k = 0;
    double purity = 0.0;
    double inertia = 0.0;
};

// kmeans at each k (seeded with `seed`) scored by metrics::purity against `truth`.
std::vector<PurityRow> purity_sweep(const embedstore::EmbeddingMatrix& matrix, std::span<const metrics::Label> truth,
                                    std::span<const std::size_t> ks, std::uint64_t seed,
                                    std::size_t n_restarts = 1);

}  // namespace sdb::cluster
