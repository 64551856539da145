#include "tvsh/tvs.hpp"

#include "tvsh/errors.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

namespace tvsh::tvs {

const char* to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::Same: return "same";
        case Verdict::Different: return "different";
        case Verdict::Ambiguous: return "ambiguous";
    }
    return "ambiguous";
}

const char* to_string(Source s) noexcept {
    switch (s) {
        case Source::Oracle: return "oracle";
        case Source::Simulated: return "simulated";
        case Source::File: return "file";
    }
    return "file";
}

AdjacencySequence::AdjacencySequence(std::vector<std::uint8_t> bits,
                                     std::vector<AuditRecord> audit)
    : bits_(std::move(bits)), audit_(std::move(audit)) {
    for (std::size_t k = 0; k < bits_.size(); ++k) {
        if (bits_[k] > 1) throw InvalidInput("adjacency bit " + std::to_string(k) + " is not 0/1");
    }
    if (!audit_.empty() && audit_.size() != bits_.size()) {
        throw InvalidInput("audit length must match adjacency length");
    }
}

AdjacencySequence AdjacencySequence::from_ints(const std::vector<int>& bits, Source source) {
    std::vector<std::uint8_t> b(bits.size());
    std::vector<AuditRecord> audit(bits.size());
    for (std::size_t k = 0; k < bits.size(); ++k) {
        if (bits[k] != 0 && bits[k] != 1) {
            throw InvalidInput("adjacency bit " + std::to_string(k) + " is not 0/1");
        }
        b[k] = static_cast<std::uint8_t>(bits[k]);
        audit[k].index = k;
        audit[k].verdict = bits[k] ? Verdict::Same : Verdict::Different;
        audit[k].source = source;
    }
    return AdjacencySequence(std::move(b), std::move(audit));
}

Index TvsStructure::runs() const {
    Index count = 0;
    for (Index i = 0; i < frames(); ++i) {
        if (bounds[static_cast<std::size_t>(i)].first == i) ++count;
    }
    return count;
}

OracleResponse ReplayOracle::judge(const FramePair& pair, bool /*strict*/) {
    if (pair.index >= bits_.size()) {
        throw OracleUnavailable(pair.index, "replay sequence too short");
    }
    const bool same = bits_[pair.index] != 0;
    return {same ? Verdict::Same : Verdict::Different, same ? "1" : "0", std::nullopt};
}

FlipOracle::FlipOracle(const AdjacencySequence& truth, double p, std::uint64_t seed)
    : noisy_(flip_adjacency(truth, p, seed).bits()) {}

OracleResponse FlipOracle::judge(const FramePair& pair, bool /*strict*/) {
    if (pair.index >= noisy_.size()) {
        throw OracleUnavailable(pair.index, "pair outside simulated sequence");
    }
    const bool same = noisy_[pair.index] != 0;
    return {same ? Verdict::Same : Verdict::Different, same ? "Yes" : "No", std::nullopt};
}

namespace {

AuditRecord query_pair(AdjacencyOracle& oracle, const FramePair& pair) {
    AuditRecord rec;
    rec.index = pair.index;
    rec.source = oracle.source();
    OracleResponse resp = oracle.judge(pair, false);
    if (resp.verdict == Verdict::Ambiguous) {
        rec.retries = 1;
        resp = oracle.judge(pair, true);
        if (resp.verdict == Verdict::Ambiguous) rec.flagged = true;
    }
    rec.verdict = resp.verdict;
    rec.raw_text = std::move(resp.raw_text);
    rec.score = resp.score;
    return rec;
}

AdjacencySequence assemble(AdjacencyOracle& oracle, std::size_t pairs,
                           const std::vector<std::string>* frames, const BuildOptions& options) {
    std::vector<AuditRecord> records(pairs);
    auto make_pair = [&](std::size_t k) {
        FramePair pair;
        pair.index = k;
        if (frames) {
            pair.frame_a = (*frames)[k];
            pair.frame_b = (*frames)[k + 1];
        }
        return pair;
    };

    const int workers = std::clamp(options.max_parallel, 1, static_cast<int>(std::max<std::size_t>(pairs, 1)));
    if (workers == 1) {
        for (std::size_t k = 0; k < pairs; ++k) records[k] = query_pair(oracle, make_pair(k));
    } else {
        std::atomic<std::size_t> next{0};
        std::mutex err_mu;
        std::exception_ptr first_error;
        std::size_t first_error_index = pairs;
        auto work = [&] {
            for (std::size_t k = next++; k < pairs; k = next++) {
                try {
                    records[k] = query_pair(oracle, make_pair(k));
                } catch (...) {
                    std::lock_guard lock(err_mu);
                    if (k < first_error_index) {
                        first_error_index = k;
                        first_error = std::current_exception();
                    }
                }
            }
        };
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        pool.clear();
        if (first_error) std::rethrow_exception(first_error);
    }

    std::vector<std::uint8_t> bits(pairs);
    for (std::size_t k = 0; k < pairs; ++k) bits[k] = records[k].verdict == Verdict::Same ? 1 : 0;
    return AdjacencySequence(std::move(bits), std::move(records));
}

}  // namespace

AdjacencySequence build_adjacency(AdjacencyOracle& oracle, const std::vector<std::string>& frames,
                                  const BuildOptions& options) {
    if (frames.size() < 2) throw InvalidInput("need at least 2 frames");
    return assemble(oracle, frames.size() - 1, &frames, options);
}

AdjacencySequence build_adjacency(AdjacencyOracle& oracle, std::size_t frame_count,
                                  const BuildOptions& options) {
    if (frame_count < 2) throw InvalidInput("need at least 2 frames");
    return assemble(oracle, frame_count - 1, nullptr, options);
}

TvsStructure neighborhoods_from_eq(const AdjacencySequence& eq) {
    const Index n = static_cast<Index>(eq.frames());
    if (n < 2) throw InvalidInput("adjacency sequence must cover at least 2 frames");
    TvsStructure s;
    s.bounds.resize(static_cast<std::size_t>(n));
    s.neighborhoods.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        // Frames inside the previous run share its bounds.
        if (i > 0 && i <= s.bounds[ui - 1].second) {
            s.bounds[ui] = s.bounds[ui - 1];
            continue;
        }
        Index l = i;
        Index r = i;
        while (l > 0 && eq[static_cast<std::size_t>(l - 1)]) --l;
        while (r < n - 1 && eq[static_cast<std::size_t>(r)]) ++r;
        s.bounds[ui] = {l, r};
    }
    for (Index i = 0; i < n; ++i) {
        const auto [l, r] = s.bounds[static_cast<std::size_t>(i)];
        auto& nb = s.neighborhoods[static_cast<std::size_t>(i)];
        nb.reserve(static_cast<std::size_t>(r - l));
        for (Index j = l; j <= r; ++j) {
            if (j != i) nb.push_back(j);
        }
    }
    return s;
}

Matrix tvs_matrix(const TvsStructure& structure) {
    const Index n = static_cast<Index>(structure.neighborhoods.size());
    Matrix G = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        const auto& nb = structure.neighborhoods[static_cast<std::size_t>(i)];
        G(i, i) = -static_cast<double>(nb.size());
        for (Index j : nb) {
            if (j < 0 || j >= n || j == i) throw InvalidInput("neighborhood index out of range");
            G(i, j) = 1.0;
        }
    }
    return G;
}

TvsStructure build_structure(const AdjacencySequence& eq) {
    TvsStructure s = neighborhoods_from_eq(eq);
    s.G = tvs_matrix(s);
    return s;
}

AdjacencySequence flip_adjacency(const AdjacencySequence& truth, double p, std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("flip probability must lie in [0, 1]");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::uint8_t> bits = truth.bits();
    std::vector<AuditRecord> audit(bits.size());
    for (std::size_t k = 0; k < bits.size(); ++k) {
        // Draw for every position so the stream does not depend on p.
        const bool flip = unif(rng) < p;
        if (flip) bits[k] ^= 1U;
        auto& rec = audit[k];
        rec.index = k;
        rec.source = Source::Simulated;
        rec.flipped = flip;
        rec.verdict = bits[k] ? Verdict::Same : Verdict::Different;
    }
    return AdjacencySequence(std::move(bits), std::move(audit));
}

std::size_t boundary_error_count(const AdjacencySequence& truth, const AdjacencySequence& noisy) {
    if (truth.size() != noisy.size()) throw InvalidInput("adjacency sequences differ in length");
    std::size_t count = 0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        if (truth[k] != noisy[k]) ++count;
    }
    return count;
}

Neighborhoods empty_neighborhoods(Index frames) {
    return Neighborhoods(static_cast<std::size_t>(frames));
}

}  // namespace tvsh::tvs
