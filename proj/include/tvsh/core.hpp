#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace tvsh {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Labels = std::vector<int>;

/// Column-wise frame matrix X (D x N). Columns are per-frame feature vectors.
class FeatureSequence {
public:
    /// Validates shape (N >= 2, D >= 1) and finiteness. With `normalize_columns`
    /// every nonzero column is scaled to unit l2 norm.
    explicit FeatureSequence(Matrix data, bool normalize_columns = true);

    const Matrix& data() const noexcept { return data_; }
    Index frames() const noexcept { return data_.cols(); }
    Index dim() const noexcept { return data_.rows(); }
    bool normalized() const noexcept { return normalized_; }

private:
    Matrix data_;
    bool normalized_;
};

/// Z plus the ADMM auxiliaries of the split H = ZG.
struct SubspaceEmbedding {
    Matrix Z;
    Matrix H;
    Matrix F;
    double gamma = 0.1;
    double rho = 1.1;
};

/// Hard cluster assignment together with the spectral data it was computed from.
class ClusterAssignment {
public:
    ClusterAssignment() = default;
    /// Labels must lie in [0, K).
    ClusterAssignment(Labels labels, int clusters);

    /// Builds from an N x K indicator; every row must be one-hot.
    static ClusterAssignment from_indicator(const Matrix& Q);

    const Labels& labels() const noexcept { return labels_; }
    int clusters() const noexcept { return clusters_; }
    Index size() const noexcept { return static_cast<Index>(labels_.size()); }
    Matrix indicator() const;

    /// Spectral rows u_i (N x K) and centers mu_k (K x K) when produced by the Q-step.
    Matrix spectral_rows;
    Matrix centers;

private:
    Labels labels_;
    int clusters_ = 0;
};

struct ObjectiveWeights {
    double fit = 1.0;
    double sparsity = 1.0;
    double tvs = 1.0;
    double cluster = 1.0;
};

struct ObjectiveBreakdown {
    double fit = 0.0;       // ||X - XZ||_F^2
    double sparsity = 0.0;  // ||Z^T Z||_1
    double tvs = 0.0;       // ||ZG||_{2,1}
    double cluster = 0.0;   // ||Theta (.) Z||_1
    double total = 0.0;
    double aug_lagrangian = 0.0;
};

/// How the temporally-weighted k-means assigns a frame once centers are fixed.
enum class AssignmentRule {
    /// argmin_k ||u_i - mu_k||^2 + eta_i * sum_{j in N_i} ||u_j - mu_k||^2
    NeighborResidual,
    /// argmin_k ||u_i - mu_k||^2 * w_{k,i} over clusters with positive weight
    WeightedResidual,
};

struct SolverConfig {
    ObjectiveWeights weights;
    double gamma0 = 0.1;
    double rho = 1.1;
    int max_outer = 50;
    double tol_rel_obj = 1e-6;
    std::uint64_t rng_seed = 0;
    int k_min = 2;
    int k_max = 8;
    bool normalize_columns = true;

    int kmeans_max_iter = 100;
    AssignmentRule assignment = AssignmentRule::NeighborResidual;
    /// Relative spectral gap below which a Sylvester mode is treated as null.
    double sylvester_rcond = 1e-10;
    /// Weight of the proximal term (prox/2)||Z - Z_prev||_F^2 in the Z-subproblem.
    double z_prox = 0.0;
    /// Keep the previous Q when the new one has the same K and a larger cluster term.
    bool guard_q_step = true;
    /// Exact line search back toward the previous Z when the Z-step raised the
    /// augmented Lagrangian.
    bool guard_z_step = true;

    /// Throws InvalidInput on any violated constraint.
    void validate() const;
};

double l21_norm(const Matrix& M);

/// Theta_ij = ||q_i - q_j||^2 / 2, i.e. 1 when labels differ, 0 otherwise.
Matrix theta_from_assignment(const ClusterAssignment& Q);
/// Same as above from a raw indicator; rejects rows that are not one-hot.
Matrix theta_from_indicator(const Matrix& Q);

/// Objective terms for (Z, Q). aug_lagrangian equals total (H = ZG, no multiplier).
ObjectiveBreakdown objective(const FeatureSequence& X, const Matrix& Z, const Matrix& G,
                             const ClusterAssignment& Q, const ObjectiveWeights& weights = {});

/// Objective terms with the augmented Lagrangian of the split H = ZG.
/// The Lagrangian uses ||H||_{2,1} in place of ||ZG||_{2,1}.
ObjectiveBreakdown objective(const FeatureSequence& X, const SubspaceEmbedding& embedding,
                             const Matrix& G, const Matrix& theta,
                             const ObjectiveWeights& weights = {});

/// ||Z^T Z||_1 = sum_ij |z_i^T z_j|; uses ||Z e||^2 when Z >= 0.
double gram_l1(const Matrix& Z);

void require_finite(const Matrix& M, const char* what);

}  // namespace tvsh
