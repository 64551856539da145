#include "tvsh/datagen.hpp"

#include "tvsh/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <random>
#include <string>

namespace tvsh::datagen {

void SyntheticSpec::validate() const {
    if (N < 2) throw InvalidInput("synthetic data needs N >= 2");
    if (K < 1) throw InvalidInput("synthetic data needs K >= 1");
    if (D < 1 || d < 1 || d > D) throw InvalidInput("synthetic data needs 1 <= d <= D");
    if (L_min < 1) throw InvalidInput("synthetic data needs L_min >= 1");
    if (static_cast<Index>(K) * L_min > N) {
        throw InvalidInput("infeasible generator settings: K * L_min = " + std::to_string(K * L_min) +
                           " exceeds N = " + std::to_string(N));
    }
    if (orthogonal && d * K > D) {
        throw InvalidInput("infeasible generator settings: orthogonal bases need d * K <= D");
    }
    if (!(sigma >= 0.0)) throw InvalidInput("synthetic data needs sigma >= 0");
}

SyntheticSpec preset_s1(std::uint64_t seed) {
    SyntheticSpec s;
    s.rng_seed = seed;
    return s;
}

namespace {

Matrix orthonormal_columns(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix g(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
    }
    Eigen::HouseholderQR<Matrix> qr(g);
    return qr.householderQ() * Matrix::Identity(rows, cols);
}

}  // namespace

SyntheticInstance generate(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.rng_seed);
    SyntheticInstance out;

    if (spec.orthogonal) {
        const Matrix q = orthonormal_columns(spec.D, spec.d * spec.K, rng);
        for (int g = 0; g < spec.K; ++g) out.bases.push_back(q.middleCols(g * spec.d, spec.d));
    } else {
        for (int g = 0; g < spec.K; ++g) out.bases.push_back(orthonormal_columns(spec.D, spec.d, rng));
    }

    out.lengths.assign(static_cast<std::size_t>(spec.K), spec.L_min);
    std::uniform_int_distribution<int> segment(0, spec.K - 1);
    for (Index r = spec.N - spec.K * spec.L_min; r > 0; --r) ++out.lengths[segment(rng)];

    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    out.X.resize(spec.D, spec.N);
    out.labels.reserve(static_cast<std::size_t>(spec.N));
    std::vector<std::uint8_t> bits;
    bits.reserve(static_cast<std::size_t>(spec.N - 1));
    Index col = 0;
    Vector c(spec.d);
    for (int g = 0; g < spec.K; ++g) {
        for (Index t = 0; t < out.lengths[g]; ++t, ++col) {
            for (Index k = 0; k < spec.d; ++k) c(k) = coef(rng);
            out.X.col(col) = out.bases[g] * c;
            for (Index i = 0; i < spec.D; ++i) out.X(i, col) += spec.sigma * noise(rng);
            out.labels.push_back(g);
            if (col > 0) bits.push_back(t == 0 ? 0 : 1);
        }
    }
    std::vector<tvs::AuditRecord> audit(bits.size());
    for (std::size_t k = 0; k < bits.size(); ++k) {
        audit[k].index = k;
        audit[k].verdict = bits[k] ? tvs::Verdict::Same : tvs::Verdict::Different;
        audit[k].source = tvs::Source::Simulated;
    }
    out.eq = tvs::AdjacencySequence(std::move(bits), std::move(audit));
    return out;
}

double subspace_distance2(const Matrix& Bg, const Matrix& Bh) {
    if (Bg.rows() != Bh.rows()) throw InvalidInput("bases live in different ambient dimensions");
    const Matrix m = Bg.transpose() * Bh;
    // sigma_max^2 is the top eigenvalue of M^T M.
    Eigen::SelfAdjointEigenSolver<Matrix> es(m.transpose() * m, Eigen::EigenvaluesOnly);
    const double top = es.eigenvalues().maxCoeff();
    return std::clamp(1.0 - top, 0.0, 1.0);
}

double separation(const std::vector<Matrix>& bases) {
    double best = 1.0;
    for (std::size_t g = 0; g < bases.size(); ++g) {
        for (std::size_t h = g + 1; h < bases.size(); ++h) {
            best = std::min(best, subspace_distance2(bases[g], bases[h]));
        }
    }
    return best;
}

}  // namespace tvsh::datagen
