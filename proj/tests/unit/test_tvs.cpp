#include <doctest.h>

#include "tvsh/errors.hpp"
#include "tvsh/tvs.hpp"

#include <map>
#include <mutex>
#include <random>
#include <set>

using namespace tvsh;
using namespace tvsh::tvs;

namespace {

/// Answers from a per-pair script; the n-th call for a pair returns script[pair][n].
class ScriptedOracle final : public AdjacencyOracle {
public:
    explicit ScriptedOracle(std::map<std::size_t, std::vector<Verdict>> script, Verdict fallback = Verdict::Same)
        : script_(std::move(script)), fallback_(fallback) {}

    OracleResponse judge(const FramePair& pair, bool strict) override {
        std::lock_guard lock(mu_);
        strict_calls_ += strict ? 1 : 0;
        auto it = script_.find(pair.index);
        const std::size_t n = calls_[pair.index]++;
        if (it == script_.end() || n >= it->second.size()) return {fallback_, "scripted", std::nullopt};
        return {it->second[n], "scripted", std::nullopt};
    }
    Source source() const noexcept override { return Source::Oracle; }

    int strict_calls_ = 0;

private:
    std::map<std::size_t, std::vector<Verdict>> script_;
    std::map<std::size_t, std::size_t> calls_;
    Verdict fallback_;
    std::mutex mu_;
};

class FailingOracle final : public AdjacencyOracle {
public:
    OracleResponse judge(const FramePair& pair, bool) override {
        if (pair.index == 3) throw OracleUnavailable(pair.index, "down");
        return {Verdict::Same, "yes", std::nullopt};
    }
    Source source() const noexcept override { return Source::Oracle; }
};

AdjacencySequence seq(const std::vector<int>& bits) { return AdjacencySequence::from_ints(bits); }

std::vector<std::uint8_t> random_bits(std::size_t n, std::mt19937_64& rng, double p_one = 0.8) {
    std::bernoulli_distribution b(p_one);
    std::vector<std::uint8_t> out(n);
    for (auto& v : out) v = b(rng) ? 1 : 0;
    return out;
}

/// Run-length oracle: run id per frame.
std::vector<int> run_ids(const std::vector<std::uint8_t>& eq) {
    std::vector<int> id(eq.size() + 1, 0);
    for (std::size_t k = 0; k < eq.size(); ++k) id[k + 1] = id[k] + (eq[k] ? 0 : 1);
    return id;
}

}  // namespace

TEST_CASE("adjacency sequence validation") {
    CHECK_THROWS_AS(seq({0, 2}), InvalidInput);
    CHECK_THROWS_AS(seq({-1}), InvalidInput);
    CHECK(seq({1, 1, 0}).frames() == 4);
}

TEST_CASE("build_adjacency with a replay oracle passes bits through") {
    ReplayOracle oracle({1, 1, 0, 1});
    const auto eq = build_adjacency(oracle, 5);
    CHECK(eq.bits() == std::vector<std::uint8_t>{1, 1, 0, 1});
    for (const auto& rec : eq.audit()) CHECK(rec.retries == 0);
    CHECK_THROWS_AS(build_adjacency(oracle, 1), InvalidInput);
}

TEST_CASE("ambiguous answers are re-queried once") {
    ScriptedOracle oracle({{0, {Verdict::Ambiguous, Verdict::Same}},
                           {2, {Verdict::Ambiguous, Verdict::Ambiguous}},
                           {3, {Verdict::Different}}});
    const auto eq = build_adjacency(oracle, 6);
    CHECK(eq[0]);
    CHECK(eq.audit()[0].retries == 1);
    CHECK_FALSE(eq.audit()[0].flagged);
    CHECK_FALSE(eq[2]);
    CHECK(eq.audit()[2].retries == 1);
    CHECK(eq.audit()[2].flagged);
    CHECK_FALSE(eq[3]);
    CHECK_FALSE(eq.audit()[3].flagged);
    CHECK(oracle.strict_calls_ == 2);

    int flagged = 0;
    for (const auto& r : eq.audit()) flagged += r.flagged;
    CHECK(flagged == 1);
}

TEST_CASE("oracle failures carry the pair index") {
    FailingOracle oracle;
    try {
        build_adjacency(oracle, 8, BuildOptions{3});
        FAIL("expected OracleUnavailable");
    } catch (const OracleUnavailable& e) {
        CHECK(e.pair_index() == 3);
    }
}

TEST_CASE("parallel build is bit-identical to the serial one") {
    std::mt19937_64 rng(21);
    std::map<std::size_t, std::vector<Verdict>> script;
    std::uniform_int_distribution<int> v(0, 2);
    for (std::size_t k = 0; k < 120; ++k) {
        script[k] = {static_cast<Verdict>(v(rng)), static_cast<Verdict>(v(rng))};
    }
    ScriptedOracle serial_oracle(script), parallel_oracle(script);
    const auto a = build_adjacency(serial_oracle, 121);
    const auto b = build_adjacency(parallel_oracle, 121, BuildOptions{6});
    CHECK(a.bits() == b.bits());
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a.audit()[k].retries == b.audit()[k].retries);
        CHECK(a.audit()[k].flagged == b.audit()[k].flagged);
    }
}

TEST_CASE("neighborhoods from the worked example") {
    const auto s = neighborhoods_from_eq(seq({1, 1, 0, 1}));
    using N = std::vector<Index>;
    CHECK(s.neighborhoods[0] == N{1, 2});
    CHECK(s.neighborhoods[1] == N{0, 2});
    CHECK(s.neighborhoods[2] == N{0, 1});
    CHECK(s.neighborhoods[3] == N{4});
    CHECK(s.neighborhoods[4] == N{3});
    CHECK(s.runs() == 2);

    const auto iso = neighborhoods_from_eq(seq({0, 0, 0}));
    for (const auto& n : iso.neighborhoods) CHECK(n.empty());
}

TEST_CASE("bounds match a run-length oracle") {
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        const auto bits = random_bits(199, rng);
        const auto s = neighborhoods_from_eq(AdjacencySequence(bits));
        const auto id = run_ids(bits);
        for (Index i = 0; i < 200; ++i) {
            const auto [l, r] = s.bounds[static_cast<std::size_t>(i)];
            CHECK(l <= i);
            CHECK(i <= r);
            CHECK(id[static_cast<std::size_t>(l)] == id[static_cast<std::size_t>(i)]);
            CHECK(id[static_cast<std::size_t>(r)] == id[static_cast<std::size_t>(i)]);
            if (l > 0) CHECK(id[static_cast<std::size_t>(l - 1)] != id[static_cast<std::size_t>(i)]);
            if (r < 199) CHECK(id[static_cast<std::size_t>(r + 1)] != id[static_cast<std::size_t>(i)]);
            for (Index j = l; j <= r; ++j) CHECK(s.bounds[static_cast<std::size_t>(j)] == s.bounds[static_cast<std::size_t>(i)]);
        }
        std::vector<std::uint8_t> back(199);
        for (std::size_t k = 0; k < 199; ++k) back[k] = s.bounds[k] == s.bounds[k + 1] ? 1 : 0;
        CHECK(back == bits);
    }
}

TEST_CASE("tvs_matrix examples") {
    Matrix three(3, 3);
    three << -2, 1, 1, 1, -2, 1, 1, 1, -2;
    CHECK(build_structure(seq({1, 1})).G == three);
    CHECK(build_structure(seq({0, 0, 0})).G.isZero(0.0));

    Matrix expected = Matrix::Zero(5, 5);
    expected.topLeftCorner(3, 3) = three;
    expected.bottomRightCorner(2, 2) << -1, 1, 1, -1;
    CHECK(build_structure(seq({1, 1, 0, 1})).G == expected);

    std::mt19937_64 rng(9);
    const auto G = build_structure(AdjacencySequence(random_bits(80, rng))).G;
    CHECK(G == G.transpose());
    CHECK(G.rowwise().sum().isZero(0.0));
}

TEST_CASE("flip_adjacency") {
    const auto truth = seq({1, 1, 0, 1, 0, 0, 1});
    CHECK(flip_adjacency(truth, 0.0, 1).bits() == truth.bits());
    const auto all = flip_adjacency(truth, 1.0, 1);
    for (std::size_t k = 0; k < truth.size(); ++k) {
        CHECK(all[k] != truth[k]);
        CHECK(all.audit()[k].flipped);
    }
    CHECK_THROWS_AS(flip_adjacency(truth, 1.5, 1), InvalidInput);
    CHECK_THROWS_AS(flip_adjacency(truth, -0.1, 1), InvalidInput);

    const AdjacencySequence ones(std::vector<std::uint8_t>(10000, 1));
    const auto noisy = flip_adjacency(ones, 0.1, 42);
    std::size_t flips = 0;
    for (std::size_t k = 0; k < noisy.size(); ++k) {
        flips += noisy[k] ? 0 : 1;
        CHECK(noisy.audit()[k].flipped == !noisy[k]);
    }
    const double frac = static_cast<double>(flips) / 10000.0;
    CHECK(frac >= 0.09);
    CHECK(frac <= 0.11);
    CHECK(flip_adjacency(ones, 0.1, 42).bits() == noisy.bits());
}

TEST_CASE("boundary_error_count") {
    const auto a = seq({1, 1, 1});
    CHECK(boundary_error_count(a, a) == 0);
    CHECK(boundary_error_count(a, seq({1, 0, 1})) == 1);
    CHECK_THROWS_AS(boundary_error_count(a, seq({1, 1})), InvalidInput);

    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 20; ++rep) {
        const auto x = random_bits(60, rng, 0.6), y = random_bits(60, rng, 0.6);
        std::set<std::size_t> zx, zy, diff;
        for (std::size_t k = 0; k < 60; ++k) {
            if (!x[k]) zx.insert(k);
            if (!y[k]) zy.insert(k);
        }
        std::set_symmetric_difference(zx.begin(), zx.end(), zy.begin(), zy.end(),
                                      std::inserter(diff, diff.begin()));
        CHECK(boundary_error_count(AdjacencySequence(x), AdjacencySequence(y)) == diff.size());
    }
}
