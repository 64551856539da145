#include "tvsh/core.hpp"

#include "tvsh/errors.hpp"

#include <cmath>
#include <string>

namespace tvsh {

void require_finite(const Matrix& M, const char* what) {
    if (!M.allFinite()) {
        throw InvalidInput(std::string(what) + " contains non-finite entries");
    }
}

FeatureSequence::FeatureSequence(Matrix data, bool normalize_columns)
    : data_(std::move(data)), normalized_(normalize_columns) {
    if (data_.cols() < 2) throw InvalidInput("feature sequence needs at least 2 frames");
    if (data_.rows() < 1) throw InvalidInput("feature sequence needs at least 1 dimension");
    require_finite(data_, "feature matrix");
    if (normalize_columns) {
        for (Index j = 0; j < data_.cols(); ++j) {
            const double n = data_.col(j).norm();
            if (n > 0.0) data_.col(j) /= n;
        }
    }
}

ClusterAssignment::ClusterAssignment(Labels labels, int clusters)
    : labels_(std::move(labels)), clusters_(clusters) {
    if (clusters_ < 1) throw InvalidInput("cluster count must be positive");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] < 0 || labels_[i] >= clusters_) {
            throw InvalidInput("label " + std::to_string(labels_[i]) + " at frame " +
                               std::to_string(i) + " outside [0, " + std::to_string(clusters_) +
                               ")");
        }
    }
}

ClusterAssignment ClusterAssignment::from_indicator(const Matrix& Q) {
    if (Q.cols() < 1) throw InvalidInput("indicator matrix has no columns");
    Labels labels(static_cast<std::size_t>(Q.rows()));
    for (Index i = 0; i < Q.rows(); ++i) {
        int hot = -1;
        for (Index k = 0; k < Q.cols(); ++k) {
            const double q = Q(i, k);
            if (q == 1.0) {
                if (hot >= 0) hot = -2;
                else if (hot == -1) hot = static_cast<int>(k);
            } else if (q != 0.0) {
                hot = -2;
                break;
            }
        }
        if (hot < 0) {
            throw InvalidInput("indicator row " + std::to_string(i) + " is not one-hot");
        }
        labels[static_cast<std::size_t>(i)] = hot;
    }
    return ClusterAssignment(std::move(labels), static_cast<int>(Q.cols()));
}

Matrix ClusterAssignment::indicator() const {
    Matrix Q = Matrix::Zero(size(), clusters_);
    for (Index i = 0; i < size(); ++i) Q(i, labels_[static_cast<std::size_t>(i)]) = 1.0;
    return Q;
}

void SolverConfig::validate() const {
    if (weights.fit < 0 || weights.sparsity < 0 || weights.tvs < 0 || weights.cluster < 0) {
        throw InvalidInput("objective weights must be nonnegative");
    }
    if (!(gamma0 > 0)) throw InvalidInput("gamma0 must be positive");
    if (!(rho > 1)) throw InvalidInput("rho must exceed 1");
    if (max_outer < 1) throw InvalidInput("max_outer must be positive");
    if (!(tol_rel_obj > 0)) throw InvalidInput("tol_rel_obj must be positive");
    if (k_min < 2) throw InvalidInput("k_range lower bound must be at least 2");
    if (k_max < k_min) throw InvalidInput("k_range upper bound below lower bound");
    if (kmeans_max_iter < 1) throw InvalidInput("kmeans_max_iter must be positive");
    if (!(sylvester_rcond >= 0)) throw InvalidInput("sylvester_rcond must be nonnegative");
    if (!(z_prox >= 0)) throw InvalidInput("z_prox must be nonnegative");
}

double l21_norm(const Matrix& M) {
    require_finite(M, "l21 argument");
    return M.colwise().norm().sum();
}

Matrix theta_from_assignment(const ClusterAssignment& Q) {
    const Index n = Q.size();
    const auto& l = Q.labels();
    Matrix theta(n, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            theta(i, j) = l[static_cast<std::size_t>(i)] == l[static_cast<std::size_t>(j)] ? 0.0 : 1.0;
        }
    }
    return theta;
}

Matrix theta_from_indicator(const Matrix& Q) {
    return theta_from_assignment(ClusterAssignment::from_indicator(Q));
}

double gram_l1(const Matrix& Z) {
    if (Z.minCoeff() >= 0.0) return Z.rowwise().sum().squaredNorm();
    return (Z.transpose() * Z).cwiseAbs().sum();
}

namespace {

void check_dims(const FeatureSequence& X, const Matrix& Z, const Matrix& G) {
    const Index n = X.frames();
    if (Z.rows() != n || Z.cols() != n) throw InvalidInput("Z must be N x N");
    if (G.rows() != n || G.cols() != n) throw InvalidInput("G must be N x N");
}

ObjectiveBreakdown base_terms(const FeatureSequence& X, const Matrix& Z, const Matrix& ZG,
                              const Matrix& theta, const ObjectiveWeights& w) {
    ObjectiveBreakdown out;
    const Matrix& D = X.data();
    out.fit = (D - D * Z).squaredNorm();
    out.sparsity = gram_l1(Z);
    out.tvs = ZG.colwise().norm().sum();
    out.cluster = theta.cwiseProduct(Z).cwiseAbs().sum();
    out.total = w.fit * out.fit + w.sparsity * out.sparsity + w.tvs * out.tvs +
                w.cluster * out.cluster;
    return out;
}

}  // namespace

ObjectiveBreakdown objective(const FeatureSequence& X, const Matrix& Z, const Matrix& G,
                             const ClusterAssignment& Q, const ObjectiveWeights& weights) {
    check_dims(X, Z, G);
    if (Q.size() != X.frames()) throw InvalidInput("assignment length must equal N");
    require_finite(Z, "Z");
    const Matrix ZG = Z * G;
    auto out = base_terms(X, Z, ZG, theta_from_assignment(Q), weights);
    out.aug_lagrangian = out.total;
    return out;
}

ObjectiveBreakdown objective(const FeatureSequence& X, const SubspaceEmbedding& e,
                             const Matrix& G, const Matrix& theta,
                             const ObjectiveWeights& weights) {
    check_dims(X, e.Z, G);
    const Index n = X.frames();
    if (e.H.rows() != n || e.H.cols() != n || e.F.rows() != n || e.F.cols() != n) {
        throw InvalidInput("H and F must be N x N");
    }
    if (theta.rows() != n || theta.cols() != n) throw InvalidInput("Theta must be N x N");
    const Matrix ZG = e.Z * G;
    auto out = base_terms(X, e.Z, ZG, theta, weights);
    const Matrix r = e.H - ZG;
    out.aug_lagrangian = weights.fit * out.fit + weights.sparsity * out.sparsity +
                         weights.tvs * e.H.colwise().norm().sum() +
                         weights.cluster * out.cluster + e.F.cwiseProduct(r).sum() +
                         0.5 * e.gamma * r.squaredNorm();
    return out;
}

}  // namespace tvsh
