#include <doctest.h>

#include "metric_oracles.hpp"

#include "tvsh/errors.hpp"
#include "tvsh/metrics.hpp"

#include <cmath>
#include <random>

using namespace tvsh;
using namespace tvsh::metrics;

namespace {

Labels random_labels(std::size_t n, int K, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> d(0, K - 1);
    Labels l(n);
    for (auto& v : l) v = d(rng);
    return l;
}

}  // namespace

TEST_CASE("hungarian_map") {
    const std::vector<std::vector<std::int64_t>> diag = {{5, 0, 0}, {0, 3, 0}, {0, 0, 7}};
    CHECK(hungarian_map(diag) == std::vector<int>{0, 1, 2});
    const std::vector<std::vector<std::int64_t>> anti = {{0, 0, 4}, {0, 6, 0}, {2, 0, 0}};
    CHECK(hungarian_map(anti) == std::vector<int>{2, 1, 0});

    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> c(0, 20);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<std::vector<std::int64_t>> w(5, std::vector<std::int64_t>(5));
        for (auto& row : w)
            for (auto& v : row) v = c(rng);
        const auto m = hungarian_map(w);
        std::int64_t s = 0;
        std::vector<bool> used(5, false);
        for (std::size_t r = 0; r < 5; ++r) {
            REQUIRE(!used[static_cast<std::size_t>(m[r])]);
            used[static_cast<std::size_t>(m[r])] = true;
            s += w[r][static_cast<std::size_t>(m[r])];
        }
        CHECK(s == oracle::best_assignment(w));
    }
}

TEST_CASE("accuracy") {
    CHECK(accuracy({1, 1, 0, 0}, {0, 0, 1, 1}) == 1.0);
    CHECK(accuracy({0, 1, 2, 2}, {0, 1, 2, 2}) == 1.0);
    CHECK(accuracy({0, 0, 1}, {0, 1, 1}) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(accuracy({7, 7, 9, 9, 9}, {3, 3, 3, 1, 1}) == doctest::Approx(0.8));
    CHECK(accuracy({0, 0, 0, 0}, {0, 1, 2, 3}) == doctest::Approx(0.25));
    CHECK_THROWS_AS(accuracy({0, 1}, {0}), InvalidInput);

    const auto r = evaluate({0, 0, 1, 1, 2}, {5, 5, 4, 4, 4});
    CHECK(r.acc == doctest::Approx(0.8));
    CHECK(r.mapping.size() == 2);
    CHECK(r.confusion.pred_values == std::vector<int>{4, 5});
    CHECK(r.mapping[0] == 1);
    CHECK(r.mapping[1] == 0);
}

TEST_CASE("nmi") {
    CHECK(nmi({0, 0, 1, 1, 2}, {2, 2, 0, 0, 1}) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(nmi({0, 0, 1, 1}, {0, 1, 0, 1})) <= 1e-12);
    CHECK(std::abs(nmi({0, 0, 0, 1, 1, 1}, {0, 1, 2, 0, 1, 2})) <= 1e-12);
    bool degenerate = false;
    CHECK(nmi({3, 3, 3}, {1, 1, 1}, &degenerate) == 1.0);
    CHECK(degenerate);
    CHECK(nmi({3, 3, 3}, {1, 2, 1}, &degenerate) == 0.0);
    CHECK(degenerate);
    nmi({0, 1}, {0, 1}, &degenerate);
    CHECK_FALSE(degenerate);
    CHECK_THROWS_AS(nmi({0, 1}, {0, 1, 1}), InvalidInput);

    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 50; ++rep) {
        const auto a = random_labels(8, 3, rng), b = random_labels(8, 4, rng);
        CHECK(std::abs(nmi(a, b) - oracle::nmi(a, b)) <= 1e-12);
        CHECK(std::abs(nmi(a, b) - nmi(b, a)) <= 1e-12);
    }
}

TEST_CASE("pair_precision") {
    CHECK(pair_precision({0, 0, 1, 1}, {0, 0, 1, 1}) == 1.0);
    for (int half : {2, 3, 5, 8}) {
        Labels truth(static_cast<std::size_t>(2 * half), 0), pred(static_cast<std::size_t>(2 * half), 0);
        for (int i = half; i < 2 * half; ++i) truth[static_cast<std::size_t>(i)] = 1;
        const double c2 = [](double m) { return m * (m - 1) / 2.0; }(half);
        CHECK(pair_precision(truth, pred) == doctest::Approx(2.0 * c2 / (2.0 * half * (2.0 * half - 1) / 2.0)));
    }
    CHECK_THROWS_AS(pair_precision({0, 0, 1}, {0, 1, 2}), UndefinedMetric);

    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        const auto a = random_labels(12, 3, rng), b = random_labels(12, 3, rng);
        CHECK(std::abs(pair_precision(a, b) - oracle::precision(a, b)) <= 1e-12);
    }
}

TEST_CASE("ari") {
    CHECK(ari({0, 1, 1, 2}, {5, 3, 3, 4}) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(ari({0, 0, 1, 1}, {0, 0, 0, 0})) <= 1e-12);
    CHECK(std::abs(ari({0, 0, 0, 1, 1, 1}, {2, 2, 2, 2, 2, 2})) <= 1e-12);
    bool degenerate = false;
    CHECK(ari({0, 0}, {1, 1}, &degenerate) == 1.0);
    CHECK(degenerate);

    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 50; ++rep) {
        const auto a = random_labels(10, 3, rng), b = random_labels(10, 4, rng);
        const double v = ari(a, b);
        CHECK(std::abs(v - oracle::ari(a, b)) <= 1e-12);
        CHECK(v <= 1.0 + 1e-15);
    }
}

TEST_CASE("metrics are invariant under relabeling") {
    std::mt19937_64 rng(5);
    const std::vector<int> relabel = {4, 9, 1, 7};
    for (int rep = 0; rep < 30; ++rep) {
        auto a = random_labels(15, 4, rng), b = random_labels(15, 4, rng);
        Labels b2 = b;
        for (auto& v : b2) v = relabel[static_cast<std::size_t>(v)];
        const auto r1 = evaluate(a, b), r2 = evaluate(a, b2);
        CHECK(r1.acc == doctest::Approx(r2.acc).epsilon(1e-15));
        CHECK(r1.nmi == doctest::Approx(r2.nmi).epsilon(1e-12));
        CHECK(r1.precision == doctest::Approx(r2.precision).epsilon(1e-15));
        CHECK(r1.ari == doctest::Approx(r2.ari).epsilon(1e-12));
    }
}

TEST_CASE("exhaustive small cases match the definitions") {
    double worst = 0.0;
    oracle::for_each_labeling(5, 3, [&](const Labels& t) {
        oracle::for_each_labeling(5, 3, [&](const Labels& p) {
            worst = std::max(worst, std::abs(accuracy(t, p) - oracle::accuracy(t, p)));
            worst = std::max(worst, std::abs(nmi(t, p) - oracle::nmi(t, p)));
            worst = std::max(worst, std::abs(ari(t, p) - oracle::ari(t, p)));
            const double pr = oracle::precision(t, p);
            if (!std::isnan(pr)) worst = std::max(worst, std::abs(pair_precision(t, p) - pr));
        });
    });
    CHECK(worst <= 1e-12);
}
