#pragma once

#include "tvsh/core.hpp"
#include "tvsh/datagen.hpp"
#include "tvsh/llm_client.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tvsh::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kOracleError = 2, kDivergence = 3 };

struct TvsOptions {
    /// llm, replay or flip.
    std::string oracle = "llm";
    std::filesystem::path frames_dir;
    /// Stored sequence for replay, ground truth for flip.
    std::filesystem::path eq_in;
    double flip_p = 0.0;
    std::uint64_t seed = 0;
    std::string prompt = "baseline";
    llm::EndpointConfig endpoint;
    std::filesystem::path output_dir = ".";
    /// Overrides the http transport; used by tests.
    std::shared_ptr<llm::Transport> transport;
};

struct SegmentOptions {
    std::filesystem::path features;
    /// Adjacency sequence; when empty G = I and the Q-step has no neighborhoods.
    std::filesystem::path eq_in;
    SolverConfig solver;
    std::filesystem::path output_dir = ".";
};

struct EvalOptions {
    std::filesystem::path pred;
    std::filesystem::path truth;
    /// Writes eval.json when set.
    std::filesystem::path output;
};

struct GenerateOptions {
    datagen::SyntheticSpec spec;
    std::filesystem::path output_dir = ".";
};

struct SimulateOptions {
    datagen::SyntheticSpec spec;
    std::vector<double> p_values = {0.0, 0.01, 0.02, 0.05, 0.1};
    int trials = 20;
    /// Skip the solver and report boundary errors only.
    bool boundary_only = false;
    int workers = 1;
    SolverConfig solver;
    std::filesystem::path output_dir = ".";
};

/// Each command writes its artifacts under output_dir, prints a short summary
/// to `out` and returns the process exit code; errors propagate as exceptions.
int run_tvs(const TvsOptions& opt, std::ostream& out);
int run_segment(const SegmentOptions& opt, std::ostream& out);
int run_eval(const EvalOptions& opt, std::ostream& out);
int run_generate(const GenerateOptions& opt, std::ostream& out);
int run_simulate(const SimulateOptions& opt, std::ostream& out);

/// Maps a library exception to an exit code and prints it to `err`.
int report_error(const std::exception& e, std::ostream& err);

/// Per-trial seed derivation shared by simulate and the tests.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace tvsh::cli
