#pragma once

#include "tvsh/core.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tvsh::tvs {

enum class Verdict { Same, Different, Ambiguous };
enum class Source { Oracle, Simulated, File };

const char* to_string(Verdict v) noexcept;
const char* to_string(Source s) noexcept;

struct AuditRecord {
    std::size_t index = 0;
    Verdict verdict = Verdict::Ambiguous;
    int retries = 0;
    Source source = Source::File;
    std::string raw_text;
    std::optional<double> score;
    /// Second ambiguous answer resolved to a cut.
    bool flagged = false;
    /// Bit was flipped by the noise simulator.
    bool flipped = false;
};

/// eq[k] == 1 means frames k and k+1 show the same motion.
class AdjacencySequence {
public:
    AdjacencySequence() = default;
    /// Bits must be 0 or 1.
    explicit AdjacencySequence(std::vector<std::uint8_t> bits,
                               std::vector<AuditRecord> audit = {});
    static AdjacencySequence from_ints(const std::vector<int>& bits, Source source = Source::File);

    const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }
    const std::vector<AuditRecord>& audit() const noexcept { return audit_; }
    std::size_t size() const noexcept { return bits_.size(); }
    std::size_t frames() const noexcept { return bits_.size() + 1; }
    bool operator[](std::size_t k) const { return bits_[k] != 0; }

private:
    std::vector<std::uint8_t> bits_;
    std::vector<AuditRecord> audit_;
};

using Neighborhoods = std::vector<std::vector<Index>>;

/// Run bounds [l_i, r_i] (0-indexed, inclusive), neighborhoods N_i and G.
struct TvsStructure {
    std::vector<std::pair<Index, Index>> bounds;
    Neighborhoods neighborhoods;
    Matrix G;

    Index frames() const noexcept { return static_cast<Index>(bounds.size()); }
    /// Number of maximal runs.
    Index runs() const;
};

struct FramePair {
    std::size_t index = 0;  // pair (index, index + 1)
    std::string frame_a;
    std::string frame_b;
};

struct OracleResponse {
    Verdict verdict = Verdict::Ambiguous;
    std::string raw_text;
    std::optional<double> score;
};

/// Answers whether two consecutive frames depict the same motion.
/// Implementations must be safe to call concurrently.
class AdjacencyOracle {
public:
    virtual ~AdjacencyOracle() = default;
    /// `strict` requests the single-token re-query instruction.
    virtual OracleResponse judge(const FramePair& pair, bool strict) = 0;
    virtual Source source() const noexcept = 0;
};

/// Replays a stored adjacency sequence.
class ReplayOracle final : public AdjacencyOracle {
public:
    explicit ReplayOracle(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {}
    OracleResponse judge(const FramePair& pair, bool strict) override;
    Source source() const noexcept override { return Source::File; }

private:
    std::vector<std::uint8_t> bits_;
};

/// Ground truth with every bit independently flipped with probability p.
class FlipOracle final : public AdjacencyOracle {
public:
    FlipOracle(const AdjacencySequence& truth, double p, std::uint64_t seed);
    OracleResponse judge(const FramePair& pair, bool strict) override;
    Source source() const noexcept override { return Source::Simulated; }

private:
    std::vector<std::uint8_t> noisy_;
};

struct BuildOptions {
    /// Concurrent oracle calls; results are reassembled in pair order.
    int max_parallel = 1;
};

/// Queries every consecutive pair once; an ambiguous answer is re-queried once
/// with the strict instruction, and a second ambiguous answer becomes a cut (0)
/// flagged in the audit.
AdjacencySequence build_adjacency(AdjacencyOracle& oracle, const std::vector<std::string>& frames,
                                  const BuildOptions& options = {});
/// Variant for oracles that do not need frame references.
AdjacencySequence build_adjacency(AdjacencyOracle& oracle, std::size_t frame_count,
                                  const BuildOptions& options = {});

/// Bounds and neighborhoods only; G is left empty.
TvsStructure neighborhoods_from_eq(const AdjacencySequence& eq);
Matrix tvs_matrix(const TvsStructure& structure);
/// neighborhoods_from_eq followed by tvs_matrix.
TvsStructure build_structure(const AdjacencySequence& eq);

AdjacencySequence flip_adjacency(const AdjacencySequence& truth, double p, std::uint64_t seed);

/// Number of boundaries (0 bits) present in exactly one of the two sequences.
std::size_t boundary_error_count(const AdjacencySequence& truth, const AdjacencySequence& noisy);

/// Every N_i empty, as for an all-zero adjacency sequence.
Neighborhoods empty_neighborhoods(Index frames);

}  // namespace tvsh::tvs
