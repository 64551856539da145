#include "tvsh/solver.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace tvsh::solver {

namespace {

constexpr double kMonotoneSlack = 1e-8;

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double off_diagonal_norm(const Matrix& M) {
    Matrix off = M;
    off.diagonal().setZero();
    return off.norm();
}

Matrix sign_mask(const Matrix& theta, const Matrix& Z) {
    Matrix s(Z.rows(), Z.cols());
    for (Index j = 0; j < Z.cols(); ++j) {
        for (Index i = 0; i < Z.rows(); ++i) {
            const double v = theta(i, j) * Z(i, j);
            s(i, j) = theta(i, j) * (v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
        }
    }
    return s;
}

double cluster_term(const Matrix& theta, const Matrix& Z) {
    return theta.cwiseProduct(Z).cwiseAbs().sum();
}

Matrix theta_of(const Labels& labels, int K) {
    return theta_from_assignment(ClusterAssignment(labels, K));
}

}  // namespace

Matrix cosine_init(const FeatureSequence& X) {
    Matrix Xn = X.data();
    for (Index j = 0; j < Xn.cols(); ++j) {
        const double n = Xn.col(j).norm();
        if (n > 0.0) Xn.col(j) /= n;
    }
    Matrix Z = (Xn.transpose() * Xn).cwiseMax(0.0);
    Z.diagonal().setZero();
    for (Index i = 0; i < Z.rows(); ++i) {
        const double s = Z.row(i).sum();
        if (s > 0.0) Z.row(i) /= s;
    }
    return Z;
}

Matrix group_shrink(const Matrix& P, double radius) {
    if (!(radius >= 0.0)) throw InvalidInput("shrinkage radius must be nonnegative");
    Matrix H(P.rows(), P.cols());
    for (Index j = 0; j < P.cols(); ++j) {
        const double norm = P.col(j).norm();
        if (norm > radius) {
            H.col(j) = (1.0 - radius / norm) * P.col(j);
        } else {
            H.col(j).setZero();
        }
    }
    return H;
}

Matrix h_update(const Matrix& ZG, const Matrix& F, double gamma, double weight) {
    if (!(gamma > 0.0)) throw InvalidInput("gamma must be positive");
    if (ZG.rows() != F.rows() || ZG.cols() != F.cols()) throw InvalidInput("ZG and F shapes differ");
    return group_shrink(ZG - F / gamma, weight / gamma);
}

void dual_update(SubspaceEmbedding& e, const Matrix& ZG) {
    if (!(e.rho > 1.0)) throw InvalidInput("rho must exceed 1");
    e.F += e.gamma * (e.H - ZG);
    e.gamma *= e.rho;
}

ZStep::ZStep(const FeatureSequence& X, const Matrix& G, const ObjectiveWeights& weights,
             double rcond, double prox)
    : G_(G), weights_(weights), prox_(prox) {
    if (!(prox >= 0.0)) throw InvalidInput("proximal weight must be nonnegative");
    const Index n = X.frames();
    if (G.rows() != n || G.cols() != n) throw InvalidInput("G must be N x N");
    require_finite(G, "G");
    XtX_ = X.data().transpose() * X.data();
    sylv_.singular_tol = rcond;
    sylv_.policy = linalg::SingularPolicy::MinimumNorm;
    Matrix A = 2.0 * weights_.fit * XtX_;
    A.diagonal().array() += prox_;
    a_ = linalg::schur(A);

    E_ = Matrix::Ones(n, n);
    GGt_ = G_ * G_.transpose();
    // E and GG^T commute when Ge = 0.
    constexpr double kMix = 0.6180339887498949;
    const Matrix M = GGt_ + kMix * E_;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()));
    if (es.info() == Eigen::Success) {
        V_ = es.eigenvectors();
        const Matrix Ed = V_.transpose() * E_ * V_;
        const Matrix Gd = V_.transpose() * GGt_ * V_;
        const double tol = 1e-9;
        if (off_diagonal_norm(Ed) <= tol * std::max(1.0, Ed.norm()) &&
            off_diagonal_norm(Gd) <= tol * std::max(1.0, Gd.norm())) {
            joint_ = true;
            e_diag_ = Ed.diagonal();
            g2_diag_ = Gd.diagonal();
        }
    }
}

linalg::SchurFactorization ZStep::b_factor(double gamma) const {
    if (joint_) {
        linalg::SchurFactorization b;
        b.Q = V_;
        b.T = (2.0 * weights_.sparsity * e_diag_ + gamma * g2_diag_).asDiagonal();
        b.diagonal = true;
        return b;
    }
    return linalg::schur(2.0 * weights_.sparsity * E_ + gamma * GGt_);
}

Matrix ZStep::solve(const SubspaceEmbedding& e, const Matrix& theta, const Matrix& Z_prev) const {
    const Matrix Gt = G_.transpose();
    Matrix C = e.F * Gt + e.gamma * (e.H * Gt) + 2.0 * weights_.fit * XtX_;
    if (weights_.cluster != 0.0) C -= weights_.cluster * sign_mask(theta, Z_prev);
    if (prox_ != 0.0) C += prox_ * Z_prev;
    return linalg::solve_sylvester(a_, b_factor(e.gamma), C, sylv_);
}

Matrix ZStep::update(const SubspaceEmbedding& e, const Matrix& theta, const Matrix& Z_prev) const {
    return linalg::project_feasible(solve(e, theta, Z_prev));
}

double z_line_search(const FeatureSequence& X, const SubspaceEmbedding& e, const Matrix& G,
                     const Matrix& theta, const ObjectiveWeights& w, const Matrix& Z_prev,
                     const Matrix& Z_next) {
    const Matrix& Xd = X.data();
    const Matrix D = Z_next - Z_prev;
    const Matrix XD = Xd * D;
    const Matrix R0 = Xd - Xd * Z_prev;
    const Matrix DG = D * G;
    const Matrix r0 = e.H - Z_prev * G;
    const Vector De = D.rowwise().sum();
    const Vector Ze = Z_prev.rowwise().sum();
    // L(t) = L(0) + b t + a t^2 on the segment, where every entry stays >= 0.
    const double a = w.fit * XD.squaredNorm() + w.sparsity * De.squaredNorm() +
                     0.5 * e.gamma * DG.squaredNorm();
    const double b = -2.0 * w.fit * R0.cwiseProduct(XD).sum() + 2.0 * w.sparsity * Ze.dot(De) +
                     w.cluster * theta.cwiseProduct(D).sum() - e.F.cwiseProduct(DG).sum() -
                     e.gamma * r0.cwiseProduct(DG).sum();
    if (a > 0.0) return std::clamp(-b / (2.0 * a), 0.0, 1.0);
    return b < 0.0 ? 1.0 : 0.0;
}

clustering::Selection q_update(const Matrix& Z, const tvs::Neighborhoods& nbrs,
                               const SolverConfig& cfg, std::uint64_t seed) {
    const Index n = Z.rows();
    const int k_max = static_cast<int>(std::min<Index>(cfg.k_max, n - 1));
    if (k_max < cfg.k_min) throw InvalidInput("K range does not fit N - 1 frames");
    const auto lap = clustering::normalized_laplacian(Z);
    // Eigenvectors for the largest candidate; smaller K take the leading columns.
    const Matrix V = linalg::smallest_eigvecs(lap.L, k_max).vectors;
    clustering::KmeansOptions opts;
    opts.max_iter = cfg.kmeans_max_iter;
    opts.rule = cfg.assignment;
    return clustering::select_k([&](int K) -> Matrix { return V.leftCols(K); }, nbrs, cfg.k_min,
                                k_max, seed, opts);
}

SegmentationReport run(const FeatureSequence& X, const Matrix& G, const tvs::Neighborhoods& nbrs,
                       const SolverConfig& cfg) {
    cfg.validate();
    const Index n = X.frames();
    if (G.rows() != n || G.cols() != n) throw InvalidInput("G must be N x N");
    if (static_cast<Index>(nbrs.size()) != n) throw InvalidInput("neighborhoods must cover N frames");
    const auto& w = cfg.weights;

    SegmentationReport report;
    SubspaceEmbedding& e = report.embedding;
    e.Z = cosine_init(X);
    e.H = e.Z * G;
    e.F = Matrix::Ones(n, n);
    e.gamma = cfg.gamma0;
    e.rho = cfg.rho;

    auto sel = q_update(e.Z, tvs::empty_neighborhoods(n), cfg, splitmix(cfg.rng_seed));
    Labels labels = sel.labels;
    int K = sel.K;
    Matrix theta = theta_of(labels, K);
    report.silhouette = sel.score;
    report.silhouette_scores = sel.scores;

    const ZStep zstep(X, G, w, cfg.sylvester_rcond, cfg.z_prox);
    report.joint_basis = zstep.joint_basis();
    double prev_aug = std::numeric_limits<double>::quiet_NaN();

    for (int t = 1; t <= cfg.max_outer; ++t) {
        IterationRecord rec;

        const Matrix Z_prev = e.Z;
        Matrix Z_next = zstep.update(e, theta, Z_prev);
        if (cfg.guard_z_step) {
            const double before = objective(X, e, G, theta, w).aug_lagrangian;
            e.Z = Z_next;
            const double after = objective(X, e, G, theta, w).aug_lagrangian;
            if (!(after <= before)) {
                rec.z_step = z_line_search(X, e, G, theta, w, Z_prev, Z_next);
                Z_next = Z_prev + rec.z_step * (Z_next - Z_prev);
            }
        }
        e.Z = std::move(Z_next);
        const Matrix ZG = e.Z * G;

        e.H = h_update(ZG, e.F, e.gamma, w.tvs);
        rec.primal_residual = (e.H - ZG).norm();
        dual_update(e, ZG);

        sel = q_update(e.Z, nbrs, cfg, splitmix(cfg.rng_seed + static_cast<std::uint64_t>(t)));
        Matrix theta_new = theta_of(sel.labels, sel.K);
        if (cfg.guard_q_step && sel.K == K && cluster_term(theta_new, e.Z) > cluster_term(theta, e.Z)) {
            rec.q_rejected = true;
        } else {
            labels = std::move(sel.labels);
            K = sel.K;
            theta = std::move(theta_new);
            report.silhouette = sel.score;
            report.silhouette_scores = sel.scores;
        }

        rec.objective = objective(X, e, G, theta, w);
        rec.gamma = e.gamma;
        rec.K = K;
        const double aug = rec.objective.aug_lagrangian;
        if (!std::isfinite(aug) || !std::isfinite(rec.objective.total)) {
            report.trace.push_back(rec);
            report.iterations = t;
            report.labels = labels;
            report.K = K;
            throw Divergence("objective became non-finite at iteration " + std::to_string(t),
                             std::make_shared<const SegmentationReport>(report));
        }
        if (t > 1 && aug > prev_aug + kMonotoneSlack) {
            rec.nonmonotone = true;
            report.nonmonotone_iterations.push_back(t);
        }
        report.trace.push_back(rec);
        report.iterations = t;
        if (t > 1 && std::abs(prev_aug - aug) <=
                         cfg.tol_rel_obj * std::max(std::abs(prev_aug), 1e-12)) {
            report.converged = true;
            break;
        }
        prev_aug = aug;
    }

    report.labels = labels;
    report.K = K;
    report.assignment = ClusterAssignment(labels, K);
    report.final_objective = report.trace.back().objective;
    report.neighbor_disagreement = clustering::neighbor_disagreement(nbrs, labels);
    return report;
}

SegmentationReport run(const FeatureSequence& X, const tvs::TvsStructure& tvs,
                       const SolverConfig& cfg) {
    return run(X, tvs.G, tvs.neighborhoods, cfg);
}

}  // namespace tvsh::solver
