#include "scidocbench/cluster.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "scidocbench/errors.hpp"
#include "scidocbench/rng.hpp"

namespace sdb::cluster {

namespace {

double sq_dist(std::span<const double> a, const double* b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

std::vector<double> seed_centroids(const embedstore::EmbeddingMatrix& m, std::size_t k, Init init, Rng& rng) {
    const std::size_t n = m.rows();
    const std::size_t d = m.dim();
    std::vector<std::size_t> chosen;
    chosen.reserve(k);
    std::vector<char> taken(n, 0);

    if (init == Init::random) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        for (std::size_t i = 0; i < k; ++i) {
            std::swap(idx[i], idx[i + rng.index(n - i)]);
            chosen.push_back(idx[i]);
        }
    } else {
        chosen.push_back(rng.index(n));
        taken[chosen.back()] = 1;
        std::vector<double> best(n, std::numeric_limits<double>::infinity());
        while (chosen.size() < k) {
            const double* c = m.values().data() + chosen.back() * d;
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                best[i] = std::min(best[i], sq_dist(m.row(i), c));
                total += best[i];
            }
            std::size_t pick = n;
            if (total > 0.0) {
                const double target = rng.uniform() * total;
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    acc += best[i];
                    if (best[i] > 0.0 && acc > target) {
                        pick = i;
                        break;
                    }
                }
                if (pick == n) {
                    // rounding at the tail: last point with positive weight
                    for (std::size_t i = n; i-- > 0;) {
                        if (best[i] > 0.0) {
                            pick = i;
                            break;
                        }
                    }
                }
            } else {
                // every point coincides with a chosen centroid
                std::vector<std::size_t> free;
                for (std::size_t i = 0; i < n; ++i) {
                    if (!taken[i]) free.push_back(i);
                }
                pick = free[rng.index(free.size())];
            }
            chosen.push_back(pick);
            taken[pick] = 1;
        }
    }

    std::vector<double> centroids(k * d);
    for (std::size_t c = 0; c < k; ++c) {
        auto row = m.row(chosen[c]);
        std::copy(row.begin(), row.end(), centroids.begin() + static_cast<std::ptrdiff_t>(c * d));
    }
    return centroids;
}

// Nearest-centroid assignment; returns inertia and fills per-point distances.
double assign(const embedstore::EmbeddingMatrix& m, const std::vector<double>& centroids, std::size_t k,
              std::vector<std::size_t>& labels, std::vector<double>& dist) {
    const std::size_t d = m.dim();
    double inertia = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto x = m.row(i);
        std::size_t best = 0;
        double best_d = sq_dist(x, centroids.data());
        for (std::size_t c = 1; c < k; ++c) {
            const double dc = sq_dist(x, centroids.data() + c * d);
            if (dc < best_d) {
                best_d = dc;
                best = c;
            }
        }
        labels[i] = best;
        dist[i] = best_d;
        inertia += best_d;
    }
    return inertia;
}

// Moves the farthest point into each empty cluster; returns the new inertia.
double fix_empty(const embedstore::EmbeddingMatrix& m, std::vector<double>& centroids, std::size_t k,
                 std::vector<std::size_t>& labels, std::vector<double>& dist, double inertia) {
    const std::size_t d = m.dim();
    std::vector<std::size_t> sizes(k, 0);
    for (auto l : labels) ++sizes[l];
    for (std::size_t c = 0; c < k; ++c) {
        if (sizes[c] != 0) continue;
        std::size_t far = m.rows();
        for (std::size_t i = 0; i < m.rows(); ++i) {
            if (sizes[labels[i]] < 2) continue;
            if (far == m.rows() || dist[i] > dist[far]) far = i;
        }
        if (far == m.rows()) continue;
        --sizes[labels[far]];
        labels[far] = c;
        ++sizes[c];
        inertia -= dist[far];
        dist[far] = 0.0;
        auto row = m.row(far);
        std::copy(row.begin(), row.end(), centroids.begin() + static_cast<std::ptrdiff_t>(c * d));
    }
    return std::max(inertia, 0.0);
}

void update(const embedstore::EmbeddingMatrix& m, std::vector<double>& centroids, std::size_t k,
            const std::vector<std::size_t>& labels) {
    const std::size_t d = m.dim();
    std::vector<double> sums(k * d, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto x = m.row(i);
        double* s = sums.data() + labels[i] * d;
        for (std::size_t j = 0; j < d; ++j) s[j] += x[j];
        ++counts[labels[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) continue;
        for (std::size_t j = 0; j < d; ++j) centroids[c * d + j] = sums[c * d + j] / static_cast<double>(counts[c]);
    }
}

KMeansResult run_once(const embedstore::EmbeddingMatrix& m, const KMeansConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    KMeansResult r;
    r.centroids = seed_centroids(m, cfg.k, cfg.init, rng);
    r.assignments.assign(m.rows(), 0);
    std::vector<double> dist(m.rows());

    double inertia = assign(m, r.centroids, cfg.k, r.assignments, dist);
    inertia = fix_empty(m, r.centroids, cfg.k, r.assignments, dist, inertia);
    r.inertia_trace.push_back(inertia);

    for (std::size_t iter = 1; iter <= cfg.max_iters && inertia > 0.0; ++iter) {
        update(m, r.centroids, cfg.k, r.assignments);
        const double prev = inertia;
        inertia = assign(m, r.centroids, cfg.k, r.assignments, dist);
        inertia = fix_empty(m, r.centroids, cfg.k, r.assignments, dist, inertia);
        r.inertia_trace.push_back(inertia);
        r.iterations = iter;
        // allow for summation-order rounding only
        if (inertia > prev * (1.0 + 1e-12)) {
            throw std::logic_error("k-means inertia increased from " + std::to_string(prev) + " to " +
                                   std::to_string(inertia));
        }
        if (prev - inertia <= cfg.rel_tol * prev) break;
    }
    r.inertia = inertia;
    return r;
}

}  // namespace

KMeansResult kmeans(const embedstore::EmbeddingMatrix& matrix, const KMeansConfig& cfg) {
    if (cfg.k < 1) throw InvalidArgument("k must be >= 1");
    if (cfg.k > matrix.rows()) {
        throw InvalidArgument("k=" + std::to_string(cfg.k) + " exceeds the number of points " +
                              std::to_string(matrix.rows()));
    }
    if (cfg.n_restarts < 1) throw InvalidArgument("n_restarts must be >= 1");
    if (!(cfg.rel_tol >= 0.0)) throw InvalidArgument("rel_tol must be >= 0");

    KMeansResult best;
    for (std::size_t restart = 0; restart < cfg.n_restarts; ++restart) {
        auto r = run_once(matrix, cfg, derive_seed(cfg.seed, 30 + restart));
        if (restart == 0 || r.inertia < best.inertia) best = std::move(r);
    }
    return best;
}

std::vector<PurityRow> purity_sweep(const embedstore::EmbeddingMatrix& matrix, std::span<const metrics::Label> truth,
                                    std::span<const std::size_t> ks, std::uint64_t seed, std::size_t n_restarts) {
    if (truth.size() != matrix.rows()) {
        throw InvalidArgument("purity_sweep: " + std::to_string(truth.size()) + " labels for " +
                              std::to_string(matrix.rows()) + " rows");
    }
    std::vector<PurityRow> table;
    for (auto k : ks) {
        KMeansConfig cfg;
        cfg.k = k;
        cfg.seed = seed;
        cfg.n_restarts = n_restarts;
        const auto r = kmeans(matrix, cfg);
        table.push_back({k, metrics::purity(r.assignments, truth), r.inertia});
    }
    return table;
}

}  // namespace sdb::cluster
