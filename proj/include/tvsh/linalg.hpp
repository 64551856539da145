#pragma once

#include "tvsh/core.hpp"

namespace tvsh::linalg {

/// A = Q T Q^T with Q orthogonal and T upper quasi-triangular (1x1 and 2x2
/// diagonal blocks). For symmetric input T is diagonal.
struct SchurFactorization {
    Matrix Q;
    Matrix T;
    bool diagonal = false;
};

SchurFactorization schur(const Matrix& A);

enum class SingularPolicy {
    /// Raise SingularSystem when some eigenvalue sum lambda_i(A) + lambda_j(B) vanishes.
    Throw,
    /// Zero the null modes. With diagonal Schur factors this is the minimum
    /// norm least-squares solution.
    MinimumNorm,
};

struct SylvesterOptions {
    /// Eigenvalue sums with |lambda + mu| <= tol * max(1, |lambda|max + |mu|max) are singular.
    double singular_tol = 1e-12;
    SingularPolicy policy = SingularPolicy::Throw;
};

/// Bartels-Stewart solve of A Z + Z B = C.
Matrix solve_sylvester(const Matrix& A, const Matrix& B, const Matrix& C,
                       const SylvesterOptions& options = {});
/// Same with precomputed Schur factors of A and B.
Matrix solve_sylvester(const SchurFactorization& a, const SchurFactorization& b, const Matrix& C,
                       const SylvesterOptions& options = {});

/// Solves T_A Y + Y T_B = C for quasi-triangular T_A, T_B by blocked back-substitution.
Matrix solve_quasi_triangular_sylvester(const Matrix& TA, const Matrix& TB, const Matrix& C,
                                        const SylvesterOptions& options = {});

struct EigenPairs {
    Vector values;   // ascending
    Matrix vectors;  // orthonormal columns
};

/// K smallest eigenpairs of a symmetric matrix. Each vector's largest-magnitude
/// entry is made positive.
EigenPairs smallest_eigvecs(const Matrix& S, Index K);

/// Elementwise projection onto {diag(Z) = 0, Z >= 0}.
Matrix project_feasible(const Matrix& Z);

/// Flips each column so its first largest-magnitude entry is positive.
void canonicalize_signs(Matrix& vectors);

}  // namespace tvsh::linalg
