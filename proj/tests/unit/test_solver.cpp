#include <doctest.h>

#include "tvsh/datagen.hpp"
#include "tvsh/errors.hpp"
#include "tvsh/linalg.hpp"
#include "tvsh/metrics.hpp"
#include "tvsh/solver.hpp"
#include "tvsh/tvs.hpp"

#include <cmath>
#include <random>

using namespace tvsh;
using namespace tvsh::solver;

namespace {

Matrix gaussian(Index r, Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Matrix M(r, c);
    for (Index i = 0; i < M.size(); ++i) M.data()[i] = g(rng);
    return M;
}

double prox_objective(const Vector& h, const Vector& p, double gamma) {
    return h.norm() + 0.5 * gamma * (h - p).squaredNorm();
}

Matrix sign_of_masked(const Matrix& theta, const Matrix& Z) {
    Matrix S(Z.rows(), Z.cols());
    for (Index j = 0; j < Z.cols(); ++j)
        for (Index i = 0; i < Z.rows(); ++i) {
            const double v = theta(i, j) * Z(i, j);
            S(i, j) = theta(i, j) * ((v > 0) - (v < 0));
        }
    return S;
}

}  // namespace

TEST_CASE("group shrinkage") {
    Matrix P(2, 1);
    P << 3, 4;
    const Matrix H = h_update(P, Matrix::Zero(2, 1), 1.0);
    CHECK(H(0, 0) == doctest::Approx(2.4).epsilon(1e-15));
    CHECK(H(1, 0) == doctest::Approx(3.2).epsilon(1e-15));
    P << 0.3, 0.4;
    CHECK(h_update(P, Matrix::Zero(2, 1), 2.0).isZero(0.0));
    CHECK_THROWS_AS(h_update(P, Matrix::Zero(2, 1), 0.0), InvalidInput);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const Vector p = gaussian(6, 1, rng);
        const double gamma = 0.7;
        const Vector h = group_shrink(p, 1.0 / gamma);
        const double best = prox_objective(h, p, gamma);
        for (int k = 0; k < 1000; ++k) {
            Vector d(6);
            for (Index i = 0; i < 6; ++i) d(i) = u(rng);
            d *= 0.1 * std::pow(u(rng) * 0.5 + 0.5, 1.0 / 6.0) / d.norm();
            CHECK(best <= prox_objective(h + d, p, gamma) + 1e-15);
        }
    }
}

TEST_CASE("h_update uses P = ZG - F/gamma") {
    std::mt19937_64 rng(2);
    const Matrix ZG = gaussian(5, 5, rng), F = gaussian(5, 5, rng);
    const Matrix H = h_update(ZG, F, 0.4, 2.0);
    const Matrix P = ZG - F / 0.4;
    for (Index j = 0; j < 5; ++j) {
        const double n = P.col(j).norm();
        const Vector expect = n > 5.0 ? Vector((1.0 - 5.0 / n) * P.col(j)) : Vector::Zero(5);
        CHECK((H.col(j) - expect).norm() <= 1e-14);
    }
}

TEST_CASE("dual update") {
    std::mt19937_64 rng(3);
    SubspaceEmbedding e;
    e.Z = gaussian(4, 4, rng);
    const Matrix G = gaussian(4, 4, rng);
    e.H = e.Z * G;
    e.F = gaussian(4, 4, rng);
    e.gamma = 0.1;
    e.rho = 1.1;
    const Matrix F0 = e.F;
    dual_update(e, e.Z * G);
    CHECK(e.F == F0);
    CHECK(e.gamma == doctest::Approx(0.11).epsilon(1e-15));

    e.H = gaussian(4, 4, rng);
    const Matrix F1 = e.F;
    const double g = e.gamma;
    const Matrix ZG = e.Z * G;
    dual_update(e, ZG);
    CHECK(((e.F - F1) - g * (e.H - ZG)).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(e.gamma == doctest::Approx(g * 1.1));

    e.rho = 1.0;
    CHECK_THROWS_AS(dual_update(e, ZG), InvalidInput);
}

TEST_CASE("z-step on the reduced system") {
    std::mt19937_64 rng(4);
    const Index n = 6;
    const FeatureSequence X(gaussian(10, n, rng));
    const Matrix G = Matrix::Zero(n, n);
    SubspaceEmbedding e;
    e.Z = Matrix::Zero(n, n);
    e.H = Matrix::Zero(n, n);
    e.F = Matrix::Zero(n, n);
    const ZStep step(X, G, {});
    const Matrix Z = step.solve(e, Matrix::Zero(n, n), e.Z);
    const Matrix XtX = X.data().transpose() * X.data();
    const Matrix E = Matrix::Ones(n, n);
    const Matrix R = 2.0 * XtX * Z + 2.0 * Z * E - 2.0 * XtX;
    CHECK(R.norm() <= 1e-8 * (1.0 + XtX.norm()));
    const Matrix P = step.update(e, Matrix::Zero(n, n), e.Z);
    CHECK(linalg::project_feasible(P) == P);
}

TEST_CASE("z-step solves the full Sylvester system") {
    std::mt19937_64 rng(5);
    const auto eq = tvs::AdjacencySequence::from_ints({1, 1, 0, 1, 1, 1, 0, 1});
    const auto st = tvs::build_structure(eq);
    const Index n = st.frames();
    const FeatureSequence X(gaussian(14, n, rng));
    const ObjectiveWeights w{1.3, 0.7, 1.1, 0.9};
    SubspaceEmbedding e;
    e.Z = linalg::project_feasible(gaussian(n, n, rng));
    e.H = gaussian(n, n, rng);
    e.F = gaussian(n, n, rng);
    e.gamma = 0.35;
    const Matrix theta = theta_from_assignment(ClusterAssignment({0, 0, 0, 1, 1, 1, 1, 2, 2}, 3));
    for (double prox : {0.0, 0.5}) {
        const ZStep step(X, st.G, w, 1e-10, prox);
        CHECK(step.joint_basis());
        const Matrix Z = step.solve(e, theta, e.Z);
        const Matrix XtX = X.data().transpose() * X.data();
        const Matrix A = 2.0 * w.fit * XtX + prox * Matrix::Identity(n, n);
        const Matrix B = 2.0 * w.sparsity * Matrix::Ones(n, n) + e.gamma * st.G * st.G.transpose();
        const Matrix C = e.F * st.G.transpose() + e.gamma * e.H * st.G.transpose() + 2.0 * w.fit * XtX -
                         w.cluster * sign_of_masked(theta, e.Z) + prox * e.Z;
        CHECK((A * Z + Z * B - C).norm() <= 1e-8 * (A.norm() + B.norm()) * Z.norm() + 1e-10 * C.norm());
    }
}

TEST_CASE("z line search is exact on the segment") {
    std::mt19937_64 rng(6);
    const auto st = tvs::build_structure(tvs::AdjacencySequence::from_ints({1, 0, 1, 1, 0, 1}));
    const Index n = st.frames();
    const FeatureSequence X(gaussian(5, n, rng));
    const Matrix theta = theta_from_assignment(ClusterAssignment({0, 0, 1, 1, 1, 2, 2}, 3));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        SubspaceEmbedding e;
        e.Z = linalg::project_feasible(gaussian(n, n, rng));
        e.H = gaussian(n, n, rng);
        e.F = gaussian(n, n, rng);
        e.gamma = 0.5;
        const Matrix Z0 = e.Z;
        const Matrix Z1 = linalg::project_feasible(gaussian(n, n, rng));
        const double t = z_line_search(X, e, st.G, theta, {}, Z0, Z1);
        CHECK(t >= 0.0);
        CHECK(t <= 1.0);
        auto at = [&](double s) {
            SubspaceEmbedding f = e;
            f.Z = Z0 + s * (Z1 - Z0);
            return objective(X, f, st.G, theta).aug_lagrangian;
        };
        const double best = at(t);
        for (int k = 0; k <= 100; ++k) CHECK(best <= at(k / 100.0) + 1e-9 * std::abs(best));
    }
}

TEST_CASE("cosine initialization is feasible") {
    std::mt19937_64 rng(7);
    const FeatureSequence X(gaussian(4, 12, rng));
    const Matrix Z = cosine_init(X);
    CHECK(linalg::project_feasible(Z) == Z);
    for (Index i = 0; i < 12; ++i) {
        const double s = Z.row(i).sum();
        CHECK((s == 0.0 || std::abs(s - 1.0) <= 1e-14));
    }
}

TEST_CASE("graph-TV identity for run-structured G") {
    std::mt19937_64 rng(8);
    const auto st = tvs::build_structure(tvs::AdjacencySequence::from_ints({1, 1, 0, 1, 0, 1, 1, 1}));
    const Matrix Z = gaussian(9, 9, rng);
    const Matrix ZG = Z * st.G;
    for (Index i = 0; i < 9; ++i) {
        Vector s = Vector::Zero(9);
        for (Index l : st.neighborhoods[static_cast<std::size_t>(i)]) s += Z.col(l) - Z.col(i);
        CHECK((ZG.col(i) - s).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("orthogonal one-dimensional subspaces give a block-diagonal Z") {
    Matrix raw = Matrix::Zero(4, 10);
    for (Index i = 0; i < 5; ++i) raw(0, i) = 1.0;
    for (Index i = 5; i < 10; ++i) raw(1, i) = 1.0;
    std::vector<int> bits(9, 1);
    bits[4] = 0;
    const auto st = tvs::build_structure(tvs::AdjacencySequence::from_ints(bits));
    SolverConfig cfg;
    cfg.k_max = 4;
    const auto r = run(FeatureSequence(raw), st, cfg);
    const Matrix& Z = r.embedding.Z;
    const double off = std::sqrt(Z.topRightCorner(5, 5).squaredNorm() + Z.bottomLeftCorner(5, 5).squaredNorm());
    CHECK(off <= 1e-3 * Z.norm());
    CHECK(r.K == 2);
    CHECK(metrics::accuracy({0, 0, 0, 0, 0, 1, 1, 1, 1, 1}, r.labels) == 1.0);
}

TEST_CASE("end-to-end on preset S1 with perfect G") {
    const auto inst = datagen::generate(datagen::preset_s1(1));
    const FeatureSequence X(inst.X);
    const auto st = tvs::build_structure(inst.eq);
    SolverConfig cfg;
    const auto r = run(X, st, cfg);
    CHECK(metrics::accuracy(inst.labels, r.labels) == 1.0);
    CHECK(r.K == 4);
    CHECK(r.converged);
    CHECK(r.iterations == static_cast<int>(r.trace.size()));
    CHECK(r.neighbor_disagreement == 0.0);
    for (const auto& rec : r.trace) {
        CHECK(linalg::project_feasible(r.embedding.Z) == r.embedding.Z);
        CHECK(rec.gamma > 0.0);
    }
    for (std::size_t t = 1; t < r.trace.size(); ++t) CHECK(r.trace[t].gamma > r.trace[t - 1].gamma);

    const auto again = run(X, st, cfg);
    CHECK(again.labels == r.labels);
    CHECK(again.final_objective.aug_lagrangian == r.final_objective.aug_lagrangian);

    cfg.max_outer = 1;
    const auto one = run(X, st, cfg);
    CHECK(one.iterations == 1);
    CHECK(one.trace.size() == 1);
}

TEST_CASE("three orthogonal segments mostly select K = 3") {
    datagen::SyntheticSpec s;
    s.N = 150;
    s.K = 3;
    s.D = 12;
    s.d = 3;
    s.L_min = 40;
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        s.rng_seed = seed;
        const auto inst = datagen::generate(s);
        const auto r = run(FeatureSequence(inst.X), tvs::build_structure(inst.eq), SolverConfig{});
        CHECK(r.K >= 2);
        CHECK(r.K <= 3);
        if (r.K == 3) {
            ++hits;
            CHECK(metrics::accuracy(inst.labels, r.labels) >= 0.99);
        }
    }
    CHECK(hits >= 5);
}

TEST_CASE("run validates its inputs") {
    const FeatureSequence X(Matrix::Identity(3, 4).eval());
    SolverConfig cfg;
    CHECK_THROWS_AS(run(X, Matrix::Zero(3, 3), tvs::empty_neighborhoods(4), cfg), InvalidInput);
    CHECK_THROWS_AS(run(X, Matrix::Zero(4, 4), tvs::empty_neighborhoods(3), cfg), InvalidInput);
    cfg.rho = 0.5;
    CHECK_THROWS_AS(run(X, Matrix::Zero(4, 4), tvs::empty_neighborhoods(4), cfg), InvalidInput);
}
