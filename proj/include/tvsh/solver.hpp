#pragma once

#include "tvsh/clustering.hpp"
#include "tvsh/core.hpp"
#include "tvsh/errors.hpp"
#include "tvsh/linalg.hpp"
#include "tvsh/tvs.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace tvsh::solver {

/// Cosine similarity with negatives clamped, zero diagonal, rows scaled to unit sum.
Matrix cosine_init(const FeatureSequence& X);

/// Columnwise group shrinkage of P = ZG - F/gamma at radius weight/gamma.
Matrix h_update(const Matrix& ZG, const Matrix& F, double gamma, double weight = 1.0);

/// Group shrinkage of the columns of P at the given radius.
Matrix group_shrink(const Matrix& P, double radius);

/// F += gamma (H - ZG), then gamma *= rho.
void dual_update(SubspaceEmbedding& e, const Matrix& ZG);

/// Z-subproblem with the Schur factors of both Sylvester coefficients cached.
/// The factor of 2 lambda_fit X^T X is fixed; the one of 2 lambda_s E + gamma G G^T
/// is rebuilt when gamma changes, in a joint eigenbasis of E and G G^T when one exists.
class ZStep {
public:
    /// `prox` adds (prox/2)||Z - Z_prev||_F^2 to the subproblem.
    ZStep(const FeatureSequence& X, const Matrix& G, const ObjectiveWeights& weights,
          double rcond = 1e-10, double prox = 0.0);

    /// Solves the Sylvester system with sign(Theta (.) Z_prev) frozen, without projection.
    Matrix solve(const SubspaceEmbedding& e, const Matrix& theta, const Matrix& Z_prev) const;
    /// solve() followed by project_feasible().
    Matrix update(const SubspaceEmbedding& e, const Matrix& theta, const Matrix& Z_prev) const;

    bool joint_basis() const noexcept { return joint_; }

private:
    linalg::SchurFactorization b_factor(double gamma) const;

    Matrix XtX_;
    Matrix G_;
    ObjectiveWeights weights_;
    double prox_ = 0.0;
    linalg::SylvesterOptions sylv_;
    linalg::SchurFactorization a_;
    bool joint_ = false;
    Matrix V_;
    Vector e_diag_;
    Vector g2_diag_;
    Matrix E_;
    Matrix GGt_;
};

/// Exact minimizer over t in [0, 1] of the augmented Lagrangian along
/// Z_prev + t (Z_next - Z_prev); both endpoints feasible, H, F, Theta fixed.
double z_line_search(const FeatureSequence& X, const SubspaceEmbedding& e, const Matrix& G,
                     const Matrix& theta, const ObjectiveWeights& w, const Matrix& Z_prev,
                     const Matrix& Z_next);

struct IterationRecord {
    ObjectiveBreakdown objective;
    double primal_residual = 0.0;
    double gamma = 0.0;
    int K = 0;
    /// Step length kept by the Z guard (1 when the plain step was accepted).
    double z_step = 1.0;
    /// The Q guard kept the previous assignment.
    bool q_rejected = false;
    /// Augmented Lagrangian rose by more than 1e-8 over the previous iteration.
    bool nonmonotone = false;
};

struct SegmentationReport {
    Labels labels;
    int K = 0;
    /// trace[t] holds the state after outer iteration t + 1.
    std::vector<IterationRecord> trace;
    ObjectiveBreakdown final_objective;
    int iterations = 0;
    bool converged = false;
    double neighbor_disagreement = 0.0;
    double silhouette = 0.0;
    /// Silhouette per candidate K at the final Q-step, index K - k_min.
    std::vector<double> silhouette_scores;
    std::vector<int> nonmonotone_iterations;
    bool joint_basis = false;
    SubspaceEmbedding embedding;
    ClusterAssignment assignment;
};

/// Non-finite objective during the outer loop; carries the partial report.
class Divergence : public NumericalFailure {
public:
    Divergence(const std::string& what, std::shared_ptr<const SegmentationReport> partial)
        : NumericalFailure(what, partial ? partial->iterations : 0), partial_(std::move(partial)) {}
    const SegmentationReport& partial() const noexcept { return *partial_; }

private:
    std::shared_ptr<const SegmentationReport> partial_;
};

/// One Q-step: normalized Laplacian of Z, spectral embedding and temporal k-means
/// for every K in the configured range, silhouette selection.
clustering::Selection q_update(const Matrix& Z, const tvs::Neighborhoods& nbrs,
                               const SolverConfig& cfg, std::uint64_t seed);

/// Full alternating solve on a frame matrix with TVS matrix G and neighborhoods used by the Q-step.
SegmentationReport run(const FeatureSequence& X, const Matrix& G, const tvs::Neighborhoods& nbrs,
                       const SolverConfig& cfg);
SegmentationReport run(const FeatureSequence& X, const tvs::TvsStructure& tvs,
                       const SolverConfig& cfg);

}  // namespace tvsh::solver
