#include "tvsh/linalg.hpp"

#include "tvsh/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

namespace tvsh::linalg {

namespace {

constexpr double kSymmetryTol = 1e-14;

bool nearly_symmetric(const Matrix& A, double rel_tol) {
    const double scale = std::max(1.0, A.norm());
    return (A - A.transpose()).norm() <= rel_tol * scale;
}

struct Block {
    Index start;
    Index size;
};

std::vector<Block> diagonal_blocks(const Matrix& T) {
    std::vector<Block> blocks;
    const Index n = T.rows();
    for (Index k = 0; k < n;) {
        if (k + 1 < n && T(k + 1, k) != 0.0) {
            blocks.push_back({k, 2});
            k += 2;
        } else {
            blocks.push_back({k, 1});
            k += 1;
        }
    }
    return blocks;
}

using Complex = std::complex<double>;

void block_eigenvalues(const Matrix& T, const Block& b, Complex out[2]) {
    if (b.size == 1) {
        out[0] = out[1] = T(b.start, b.start);
        return;
    }
    const double a = T(b.start, b.start), c = T(b.start, b.start + 1);
    const double d = T(b.start + 1, b.start), e = T(b.start + 1, b.start + 1);
    const Complex half_tr = 0.5 * (a + e);
    const Complex disc = std::sqrt(Complex(0.25 * (a - e) * (a - e) + c * d));
    out[0] = half_tr + disc;
    out[1] = half_tr - disc;
}

double spectral_radius(const Matrix& T, const std::vector<Block>& blocks) {
    double r = 0.0;
    for (const auto& b : blocks) {
        Complex ev[2];
        block_eigenvalues(T, b, ev);
        r = std::max({r, std::abs(ev[0]), std::abs(ev[1])});
    }
    return r;
}

double min_eigen_sum(const Matrix& TA, const Block& bi, const Matrix& TB, const Block& bj) {
    Complex ea[2], eb[2];
    block_eigenvalues(TA, bi, ea);
    block_eigenvalues(TB, bj, eb);
    double m = std::abs(ea[0] + eb[0]);
    for (const auto& x : ea) {
        for (const auto& y : eb) m = std::min(m, std::abs(x + y));
    }
    return m;
}

}  // namespace

SchurFactorization schur(const Matrix& A) {
    if (A.rows() != A.cols()) throw InvalidInput("Schur decomposition needs a square matrix");
    require_finite(A, "Schur argument");
    SchurFactorization out;
    if (A.rows() == 0) return out;
    if (nearly_symmetric(A, kSymmetryTol)) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (A + A.transpose()));
        if (es.info() != Eigen::Success) {
            throw NumericalFailure("symmetric eigensolver did not converge",
                                   static_cast<int>(30 * A.rows()));
        }
        out.Q = es.eigenvectors();
        out.T = es.eigenvalues().asDiagonal();
        out.diagonal = true;
        return out;
    }
    Eigen::RealSchur<Matrix> rs(A.rows());
    rs.compute(A, true);
    if (rs.info() != Eigen::Success) {
        throw NumericalFailure("real Schur iteration did not converge",
                               static_cast<int>(rs.getMaxIterations()));
    }
    out.Q = rs.matrixU();
    out.T = rs.matrixT();
    out.diagonal = out.T.isDiagonal(0.0);
    return out;
}

Matrix solve_quasi_triangular_sylvester(const Matrix& TA, const Matrix& TB, const Matrix& C,
                                        const SylvesterOptions& options) {
    const Index n = TA.rows();
    const Index m = TB.rows();
    if (TA.cols() != n || TB.cols() != m || C.rows() != n || C.cols() != m) {
        throw InvalidInput("Sylvester dimensions do not conform");
    }
    const auto rows = diagonal_blocks(TA);
    const auto cols = diagonal_blocks(TB);
    const double scale = std::max(1.0, spectral_radius(TA, rows) + spectral_radius(TB, cols));
    const double tol = options.singular_tol * scale;

    Matrix Y = Matrix::Zero(n, m);
    Matrix rhs_col;
    for (const auto& bj : cols) {
        // C(:, J) - Y(:, before J) * TB(before J, J)
        rhs_col = C.middleCols(bj.start, bj.size);
        if (bj.start > 0) {
            rhs_col.noalias() -= Y.leftCols(bj.start) * TB.block(0, bj.start, bj.start, bj.size);
        }
        for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
            const auto& bi = *it;
            const Index after = bi.start + bi.size;
            Matrix rhs = rhs_col.middleRows(bi.start, bi.size);
            if (after < n) {
                rhs.noalias() -= TA.block(bi.start, after, bi.size, n - after) *
                                 Y.block(after, bj.start, n - after, bj.size);
            }
            const bool singular = min_eigen_sum(TA, bi, TB, bj) <= tol;
            if (bi.size == 1 && bj.size == 1) {
                const double pivot = TA(bi.start, bi.start) + TB(bj.start, bj.start);
                if (singular) {
                    if (options.policy == SingularPolicy::Throw) {
                        throw SingularSystem("Sylvester operator singular: |lambda_A + lambda_B| = " +
                                             std::to_string(std::abs(pivot)));
                    }
                    Y(bi.start, bj.start) = 0.0;
                } else {
                    Y(bi.start, bj.start) = rhs(0, 0) / pivot;
                }
                continue;
            }
            // Small Kronecker system for a 2x2 block on either side.
            const Index p = bi.size, q = bj.size;
            Matrix K = Matrix::Zero(p * q, p * q);
            const Matrix Ta = TA.block(bi.start, bi.start, p, p);
            const Matrix Tb = TB.block(bj.start, bj.start, q, q);
            for (Index c = 0; c < q; ++c) {
                K.block(c * p, c * p, p, p) += Ta;
                for (Index r = 0; r < q; ++r) {
                    K.block(r * p, c * p, p, p) +=
                        Tb(c, r) * Matrix::Identity(p, p);
                }
            }
            const Vector vec_rhs = Eigen::Map<const Vector>(rhs.data(), p * q);
            Vector sol;
            if (singular) {
                if (options.policy == SingularPolicy::Throw) {
                    throw SingularSystem("Sylvester operator singular on a 2x2 Schur block");
                }
                Eigen::CompleteOrthogonalDecomposition<Matrix> cod(K);
                cod.setThreshold(options.singular_tol);
                sol = cod.solve(vec_rhs);
            } else {
                sol = K.fullPivLu().solve(vec_rhs);
            }
            Y.block(bi.start, bj.start, p, q) = Eigen::Map<const Matrix>(sol.data(), p, q);
        }
    }
    return Y;
}

Matrix solve_sylvester(const SchurFactorization& a, const SchurFactorization& b, const Matrix& C,
                       const SylvesterOptions& options) {
    const Index n = a.T.rows();
    const Index m = b.T.rows();
    if (C.rows() != n || C.cols() != m) throw InvalidInput("Sylvester right-hand side shape");
    require_finite(C, "Sylvester right-hand side");
    const Matrix Cp = a.Q.transpose() * C * b.Q;
    Matrix Yp;
    if (a.diagonal && b.diagonal) {
        const Vector da = a.T.diagonal();
        const Vector db = b.T.diagonal();
        const double scale = std::max(1.0, da.cwiseAbs().maxCoeff() + db.cwiseAbs().maxCoeff());
        const double tol = options.singular_tol * scale;
        Yp.resize(n, m);
        for (Index j = 0; j < m; ++j) {
            for (Index i = 0; i < n; ++i) {
                const double pivot = da(i) + db(j);
                if (std::abs(pivot) <= tol) {
                    if (options.policy == SingularPolicy::Throw) {
                        throw SingularSystem("Sylvester operator singular: |lambda_A + lambda_B| = " +
                                             std::to_string(std::abs(pivot)));
                    }
                    Yp(i, j) = 0.0;
                } else {
                    Yp(i, j) = Cp(i, j) / pivot;
                }
            }
        }
    } else {
        Yp = solve_quasi_triangular_sylvester(a.T, b.T, Cp, options);
    }
    return a.Q * Yp * b.Q.transpose();
}

Matrix solve_sylvester(const Matrix& A, const Matrix& B, const Matrix& C,
                       const SylvesterOptions& options) {
    if (A.rows() != A.cols() || B.rows() != B.cols()) {
        throw InvalidInput("Sylvester coefficients must be square");
    }
    if (C.rows() != A.rows() || C.cols() != B.rows()) {
        throw InvalidInput("Sylvester right-hand side shape");
    }
    return solve_sylvester(schur(A), schur(B), C, options);
}

void canonicalize_signs(Matrix& vectors) {
    for (Index k = 0; k < vectors.cols(); ++k) {
        auto v = vectors.col(k);
        const double peak = v.cwiseAbs().maxCoeff();
        for (Index i = 0; i < v.size(); ++i) {
            if (std::abs(v(i)) >= peak * (1.0 - 1e-9)) {
                if (v(i) < 0) v = -v;
                break;
            }
        }
    }
}

EigenPairs smallest_eigvecs(const Matrix& S, Index K) {
    if (S.rows() != S.cols()) throw InvalidInput("eigensolver needs a square matrix");
    if (K < 1 || K > S.rows()) throw InvalidInput("requested eigenpair count outside [1, n]");
    require_finite(S, "eigensolver argument");
    if (!nearly_symmetric(S, 1e-10)) throw InvalidInput("matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()));
    if (es.info() != Eigen::Success) {
        throw NumericalFailure("symmetric eigensolver did not converge",
                               static_cast<int>(30 * S.rows()));
    }
    EigenPairs out;
    out.values = es.eigenvalues().head(K);
    out.vectors = es.eigenvectors().leftCols(K);
    canonicalize_signs(out.vectors);
    return out;
}

Matrix project_feasible(const Matrix& Z) {
    Matrix out = Z.cwiseMax(0.0);
    out.diagonal().setZero();
    return out;
}

}  // namespace tvsh::linalg
