#include "tvsh/clustering.hpp"

#include "tvsh/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace tvsh::clustering {

LaplacianParts normalized_laplacian(const Matrix& Z) {
    if (Z.rows() != Z.cols()) throw InvalidInput("affinity source must be square");
    require_finite(Z, "Z");
    LaplacianParts out;
    const Matrix absZ = Z.cwiseAbs();
    out.W = 0.5 * (absZ + absZ.transpose());
    out.degree = out.W.rowwise().sum();
    Vector dinv(out.degree.size());
    for (Index i = 0; i < dinv.size(); ++i) {
        dinv(i) = out.degree(i) > 0.0 ? 1.0 / std::sqrt(out.degree(i)) : 0.0;
    }
    out.L = -(dinv.asDiagonal() * out.W * dinv.asDiagonal());
    out.L.diagonal().array() += 1.0;
    // Exact symmetry for the eigensolver.
    out.L = 0.5 * (out.L + out.L.transpose()).eval();
    return out;
}

Matrix spectral_embed(const Matrix& L, Index K) {
    if (K < 2 || K > L.rows()) throw InvalidInput("spectral embedding needs 2 <= K <= N");
    return linalg::smallest_eigvecs(L, K).vectors;
}

Vector neighbor_eta(const Neighborhoods& nbrs) {
    Vector eta(static_cast<Index>(nbrs.size()));
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
        eta(static_cast<Index>(i)) = nbrs[i].empty() ? 0.0 : 1.0 / static_cast<double>(nbrs[i].size());
    }
    return eta;
}

Matrix cluster_weights(const Neighborhoods& nbrs, const Labels& labels, int K) {
    const Index n = static_cast<Index>(labels.size());
    if (static_cast<Index>(nbrs.size()) != n) throw InvalidInput("neighborhoods must cover every frame");
    const Vector eta = neighbor_eta(nbrs);
    Matrix w = Matrix::Zero(K, n);
    for (Index j = 0; j < n; ++j) {
        const int k = labels[static_cast<std::size_t>(j)];
        w(k, j) += 1.0;
        for (Index i : nbrs[static_cast<std::size_t>(j)]) w(k, i) += eta(j);
    }
    return w;
}

namespace {

Matrix squared_distances(const Matrix& U, const Matrix& centers) {
    Matrix d(U.rows(), centers.rows());
    for (Index k = 0; k < centers.rows(); ++k) {
        d.col(k) = (U.rowwise() - centers.row(k)).rowwise().squaredNorm();
    }
    return d;
}

/// c_{i,k} = d_{i,k} + eta_i sum_{j in N_i} d_{j,k}
Matrix neighbor_costs(const Matrix& d, const Neighborhoods& nbrs, const Vector& eta) {
    Matrix c = d;
    for (Index i = 0; i < d.rows(); ++i) {
        const auto& nb = nbrs[static_cast<std::size_t>(i)];
        if (nb.empty()) continue;
        for (Index j : nb) c.row(i) += eta(i) * d.row(j);
    }
    return c;
}

void check_inputs(const Matrix& U, const Neighborhoods& nbrs, const Labels& labels,
                  const Matrix& centers) {
    if (static_cast<Index>(labels.size()) != U.rows() ||
        static_cast<Index>(nbrs.size()) != U.rows()) {
        throw InvalidInput("labels and neighborhoods must cover every row of U");
    }
    if (centers.cols() != U.cols()) throw InvalidInput("center dimension mismatch");
    for (int l : labels) {
        if (l < 0 || l >= centers.rows()) throw InvalidInput("label outside center range");
    }
}

void update_centers(const Matrix& U, const Matrix& w, Matrix& centers) {
    for (Index k = 0; k < w.rows(); ++k) {
        const double mass = w.row(k).sum();
        if (mass > 0.0) centers.row(k) = (w.row(k) * U) / mass;
    }
}

Matrix kmeanspp_init(const Matrix& U, int K, std::mt19937_64& rng) {
    const Index n = U.rows();
    Matrix centers(K, U.cols());
    std::uniform_int_distribution<Index> pick(0, n - 1);
    centers.row(0) = U.row(pick(rng));
    Vector best = (U.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int k = 1; k < K; ++k) {
        const double total = best.sum();
        Index chosen = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> unif(0.0, total);
            double target = unif(rng);
            chosen = n - 1;
            for (Index i = 0; i < n; ++i) {
                target -= best(i);
                if (target <= 0.0 && best(i) > 0.0) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = pick(rng);
        }
        centers.row(k) = U.row(chosen);
        best = best.cwiseMin((U.rowwise() - centers.row(k)).rowwise().squaredNorm());
    }
    return centers;
}

}  // namespace

double temporal_objective(const Matrix& U, const Neighborhoods& nbrs, const Labels& labels,
                          const Matrix& centers) {
    check_inputs(U, nbrs, labels, centers);
    const Vector eta = neighbor_eta(nbrs);
    const Matrix c = neighbor_costs(squared_distances(U, centers), nbrs, eta);
    double total = 0.0;
    for (Index i = 0; i < U.rows(); ++i) total += c(i, labels[static_cast<std::size_t>(i)]);
    return total;
}

double weighted_objective(const Matrix& U, const Neighborhoods& nbrs, const Labels& labels,
                          const Matrix& centers) {
    check_inputs(U, nbrs, labels, centers);
    const Matrix w = cluster_weights(nbrs, labels, static_cast<int>(centers.rows()));
    const Matrix d = squared_distances(U, centers);
    return (w.transpose().cwiseProduct(d)).sum();
}

KmeansResult temporal_kmeans(const Matrix& U, const Neighborhoods& nbrs, int K,
                             std::uint64_t seed, const KmeansOptions& options) {
    const Index n = U.rows();
    if (K < 2) throw InvalidInput("temporal k-means needs K >= 2");
    if (K > n) throw InvalidInput("more clusters than frames");
    if (static_cast<Index>(nbrs.size()) != n) throw InvalidInput("neighborhoods must cover every frame");
    require_finite(U, "spectral rows");

    std::mt19937_64 rng(seed);
    KmeansResult out;
    out.centers = kmeanspp_init(U, K, rng);
    const Vector eta = neighbor_eta(nbrs);

    Labels labels(static_cast<std::size_t>(n));
    {
        const Matrix d = squared_distances(U, out.centers);
        for (Index i = 0; i < n; ++i) {
            Index k;
            d.row(i).minCoeff(&k);
            labels[static_cast<std::size_t>(i)] = static_cast<int>(k);
        }
    }

    for (int round = 0; round < options.max_iter; ++round) {
        const Matrix w = cluster_weights(nbrs, labels, K);
        update_centers(U, w, out.centers);
        const Matrix d = squared_distances(U, out.centers);

        Labels next = labels;
        if (options.rule == AssignmentRule::NeighborResidual) {
            const Matrix c = neighbor_costs(d, nbrs, eta);
            for (Index i = 0; i < n; ++i) {
                Index best;
                const double cbest = c.row(i).minCoeff(&best);
                const int cur = labels[static_cast<std::size_t>(i)];
                if (cbest < c(i, cur)) next[static_cast<std::size_t>(i)] = static_cast<int>(best);
            }
        } else {
            for (Index i = 0; i < n; ++i) {
                int best = -1;
                double cbest = std::numeric_limits<double>::infinity();
                for (int k = 0; k < K; ++k) {
                    if (w(k, i) <= 0.0) continue;
                    const double cost = d(i, k) * w(k, i);
                    if (cost < cbest) {
                        cbest = cost;
                        best = k;
                    }
                }
                if (best >= 0) next[static_cast<std::size_t>(i)] = best;
            }
        }

        std::vector<int> counts(static_cast<std::size_t>(K), 0);
        for (int l : next) ++counts[static_cast<std::size_t>(l)];
        bool reseeded = false;
        for (int k = 0; k < K; ++k) {
            if (counts[static_cast<std::size_t>(k)] > 0) continue;
            const Matrix c = neighbor_costs(d, nbrs, eta);
            Index victim = -1;
            double worst = -1.0;
            for (Index i = 0; i < n; ++i) {
                const int l = next[static_cast<std::size_t>(i)];
                if (counts[static_cast<std::size_t>(l)] < 2) continue;
                if (c(i, l) > worst) {
                    worst = c(i, l);
                    victim = i;
                }
            }
            if (victim < 0) break;
            --counts[static_cast<std::size_t>(next[static_cast<std::size_t>(victim)])];
            next[static_cast<std::size_t>(victim)] = k;
            counts[static_cast<std::size_t>(k)] = 1;
            out.centers.row(k) = U.row(victim);
            reseeded = true;
        }
        if (reseeded) out.reseed_rounds.push_back(round);

        out.objective_trace.push_back(temporal_objective(U, nbrs, next, out.centers));
        out.rounds = round + 1;
        const bool changed = next != labels;
        labels = std::move(next);
        if (!changed) {
            out.converged = true;
            break;
        }
    }
    update_centers(U, cluster_weights(nbrs, labels, K), out.centers);
    out.labels = std::move(labels);
    return out;
}

double silhouette(const Matrix& U, const Labels& labels) {
    const Index n = U.rows();
    if (static_cast<Index>(labels.size()) != n) throw InvalidInput("labels must cover every row");
    int K = 0;
    for (int l : labels) K = std::max(K, l + 1);
    std::vector<Index> sizes(static_cast<std::size_t>(K), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    const auto populated = std::count_if(sizes.begin(), sizes.end(), [](Index s) { return s > 0; });
    if (populated < 2) return std::numeric_limits<double>::quiet_NaN();

    // Per point, sum of distances to every cluster.
    Matrix sums = Matrix::Zero(n, K);
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            const double dist = (U.row(i) - U.row(j)).norm();
            sums(i, labels[static_cast<std::size_t>(j)]) += dist;
            sums(j, labels[static_cast<std::size_t>(i)]) += dist;
        }
    }
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
        const int own = labels[static_cast<std::size_t>(i)];
        const Index own_size = sizes[static_cast<std::size_t>(own)];
        if (own_size < 2) continue;
        const double a = sums(i, own) / static_cast<double>(own_size - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k) {
            if (k == own || sizes[static_cast<std::size_t>(k)] == 0) continue;
            b = std::min(b, sums(i, k) / static_cast<double>(sizes[static_cast<std::size_t>(k)]));
        }
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

Selection select_k(const EmbeddingFn& embed, const Neighborhoods& nbrs, int k_min, int k_max,
                   std::uint64_t seed, const KmeansOptions& options) {
    const Index n = static_cast<Index>(nbrs.size());
    if (k_min < 2 || k_max < k_min) throw InvalidInput("invalid K range");
    if (k_max > n - 1) {
        throw InvalidInput("K range upper bound " + std::to_string(k_max) + " exceeds N - 1");
    }
    Selection best;
    best.score = -std::numeric_limits<double>::infinity();
    for (int K = k_min; K <= k_max; ++K) {
        Matrix U = embed(K);
        if (U.rows() != n) throw InvalidInput("embedding row count differs from N");
        const std::uint64_t derived = seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(K));
        auto km = temporal_kmeans(U, nbrs, K, derived, options);
        const double s = silhouette(U, km.labels);
        best.scores.push_back(s);
        if (std::isnan(s)) continue;
        if (best.K == 0 || s > best.score) {
            best.K = K;
            best.score = s;
            best.labels = std::move(km.labels);
            best.centers = std::move(km.centers);
            best.U = std::move(U);
        }
    }
    if (best.K == 0) throw SelectionError("every candidate K produced fewer than two clusters");
    return best;
}

Matrix q_from_labels(const Labels& labels, int K) {
    return ClusterAssignment(labels, K).indicator();
}

double neighbor_disagreement(const Neighborhoods& nbrs, const Labels& labels) {
    std::size_t pairs = 0, differ = 0;
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
        for (Index j : nbrs[i]) {
            ++pairs;
            if (labels[i] != labels[static_cast<std::size_t>(j)]) ++differ;
        }
    }
    return pairs ? static_cast<double>(differ) / static_cast<double>(pairs) : 0.0;
}

}  // namespace tvsh::clustering
