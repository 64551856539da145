#pragma once

#include "tvsh/core.hpp"
#include "tvsh/linalg.hpp"
#include "tvsh/tvs.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace tvsh::clustering {

using tvs::Neighborhoods;

/// W = (|Z| + |Z^T|)/2, its degrees, and L = I - D^{-1/2} W D^{-1/2}.
/// Zero-degree rows get D^{-1/2} = 0, which leaves L_ii = 1.
struct LaplacianParts {
    Matrix W;
    Vector degree;
    Matrix L;
};

LaplacianParts normalized_laplacian(const Matrix& Z);

/// Rows u_i of the K smallest eigenvectors of L. Requires 2 <= K <= N.
Matrix spectral_embed(const Matrix& L, Index K);

struct KmeansOptions {
    int max_iter = 100;
    AssignmentRule rule = AssignmentRule::NeighborResidual;
};

struct KmeansResult {
    Labels labels;
    Matrix centers;  // K x dim, row k is mu_k
    int rounds = 0;
    bool converged = false;
    /// Neighbor-augmented objective after every full round.
    std::vector<double> objective_trace;
    /// Rounds (0-based) in which an emptied cluster was re-seeded.
    std::vector<int> reseed_rounds;
};

/// eta_i = 1/|N_i|, or 0 for frames without neighbors.
Vector neighbor_eta(const Neighborhoods& nbrs);

/// w_{k,i} = 1(i in C_k) + sum_{j in C_k, i in N_j} eta_j, returned as K x N.
Matrix cluster_weights(const Neighborhoods& nbrs, const Labels& labels, int K);

/// sum_k sum_{i in C_k} (||u_i - mu_k||^2 + eta_i sum_{j in N_i} ||u_j - mu_k||^2)
double temporal_objective(const Matrix& U, const Neighborhoods& nbrs, const Labels& labels,
                          const Matrix& centers);
/// sum_k sum_i ||u_i - mu_k||^2 w_{k,i}
double weighted_objective(const Matrix& U, const Neighborhoods& nbrs, const Labels& labels,
                          const Matrix& centers);

/// Temporally-weighted k-means on the rows of U with seeded k-means++ initialization.
KmeansResult temporal_kmeans(const Matrix& U, const Neighborhoods& nbrs, int K,
                             std::uint64_t seed, const KmeansOptions& options = {});

/// Mean silhouette of the rows of U under Euclidean distance. Points in singleton
/// clusters score 0. Returns NaN when fewer than two clusters are populated.
double silhouette(const Matrix& U, const Labels& labels);

struct Selection {
    int K = 0;
    double score = 0.0;
    Labels labels;
    Matrix centers;
    Matrix U;
    /// Silhouette per candidate K (NaN for degenerate candidates), index K - k_min.
    std::vector<double> scores;
};

/// Embedding for a candidate cluster count.
using EmbeddingFn = std::function<Matrix(int)>;

/// Runs spectral embedding and temporal k-means for every K in [k_min, k_max]
/// and keeps the K with the largest silhouette (ties go to the smaller K).
Selection select_k(const EmbeddingFn& embed, const Neighborhoods& nbrs, int k_min, int k_max,
                   std::uint64_t seed, const KmeansOptions& options = {});

/// One-hot N x K indicator matrix.
Matrix q_from_labels(const Labels& labels, int K);

/// Fraction of (i, j in N_i) pairs whose labels differ.
double neighbor_disagreement(const Neighborhoods& nbrs, const Labels& labels);

}  // namespace tvsh::clustering
