#include "commands.hpp"

#include "io.hpp"

#include "tvsh/errors.hpp"
#include "tvsh/metrics.hpp"
#include "tvsh/solver.hpp"
#include "tvsh/tvs.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

namespace tvsh::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::string fixed6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

double round6(double v) { return std::round(v * 1e6) / 1e6; }

json objective_json(const ObjectiveBreakdown& o) {
    return {{"fit", o.fit},           {"sparsity", o.sparsity}, {"tvs", o.tvs},
            {"cluster", o.cluster},   {"total", o.total},       {"aug_lagrangian", o.aug_lagrangian}};
}

json spec_json(const datagen::SyntheticSpec& s) {
    return {{"N", s.N},         {"K", s.K},         {"D", s.D},
            {"d", s.d},         {"L_min", s.L_min}, {"sigma", s.sigma},
            {"orthogonal", s.orthogonal},           {"seed", s.rng_seed}};
}

json solver_json(const SolverConfig& c) {
    return {{"lambda_fit", c.weights.fit},
            {"lambda_sparse", c.weights.sparsity},
            {"lambda_tvs", c.weights.tvs},
            {"lambda_cluster", c.weights.cluster},
            {"gamma0", c.gamma0},
            {"rho", c.rho},
            {"max_outer", c.max_outer},
            {"tol_rel_obj", c.tol_rel_obj},
            {"seed", c.rng_seed},
            {"k_min", c.k_min},
            {"k_max", c.k_max},
            {"normalize_columns", c.normalize_columns},
            {"assignment", c.assignment == AssignmentRule::NeighborResidual ? "neighbor" : "weighted"},
            {"z_prox", c.z_prox},
            {"guard_q_step", c.guard_q_step},
            {"guard_z_step", c.guard_z_step}};
}

void write_trace(const fs::path& path, const std::vector<solver::IterationRecord>& trace) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FileError(path.string(), "cannot open for writing");
    out << "iteration,fit,sparsity,tvs,cluster,total,aug_lagrangian,primal_residual,gamma,K,z_step,"
           "q_rejected,nonmonotone\n";
    for (std::size_t t = 0; t < trace.size(); ++t) {
        const auto& r = trace[t];
        const auto& o = r.objective;
        out << t + 1 << ',' << format_number(o.fit) << ',' << format_number(o.sparsity) << ','
            << format_number(o.tvs) << ',' << format_number(o.cluster) << ',' << format_number(o.total)
            << ',' << format_number(o.aug_lagrangian) << ',' << format_number(r.primal_residual) << ','
            << format_number(r.gamma) << ',' << r.K << ',' << format_number(r.z_step) << ','
            << (r.q_rejected ? 1 : 0) << ',' << (r.nonmonotone ? 1 : 0) << '\n';
    }
    if (!out) throw FileError(path.string(), "write failed");
}

json report_json(const solver::SegmentationReport& r) {
    return {{"K", r.K},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"final_objective", objective_json(r.final_objective)},
            {"neighbor_disagreement", r.neighbor_disagreement},
            {"silhouette", r.silhouette},
            {"silhouette_scores", r.silhouette_scores},
            {"nonmonotone_iterations", r.nonmonotone_iterations},
            {"joint_basis", r.joint_basis}};
}

struct Moments {
    double mean = 0.0;
    double stderr_ = 0.0;
};

Moments moments(const std::vector<double>& v) {
    Moments m;
    if (v.empty()) return m;
    for (double x : v) m.mean += x;
    m.mean /= static_cast<double>(v.size());
    if (v.size() < 2) return m;
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.stderr_ = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    return m;
}

struct TrialResult {
    double b_err = 0.0;
    double acc = 0.0;
    double nmi = 0.0;
    int K = 0;
    bool failed = false;
    std::string error;
};

/// Runs fn(i) for i in [0, count) on at most `workers` threads.
template <class Fn>
void parallel_for(std::size_t count, int workers, Fn fn) {
    const std::size_t w = std::min<std::size_t>(std::max(workers, 1), std::max<std::size_t>(count, 1));
    std::atomic<std::size_t> next{0};
    auto loop = [&] {
        for (std::size_t i = next++; i < count; i = next++) fn(i);
    };
    if (w == 1) {
        loop();
        return;
    }
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < w; ++t) pool.emplace_back(loop);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    return splitmix(splitmix(splitmix(base) ^ a) ^ (b * 0xD1B54A32D192ED03ULL));
}

int run_tvs(const TvsOptions& opt, std::ostream& out) {
    tvs::BuildOptions build;
    build.max_parallel = std::max(1, opt.endpoint.max_parallel);

    tvs::AdjacencySequence eq;
    json summary;
    if (opt.oracle == "llm") {
        if (opt.frames_dir.empty() || !fs::is_directory(opt.frames_dir)) {
            throw OracleUnavailable(0, "frames directory not found: '" + opt.frames_dir.string() + "'");
        }
        const auto frames = list_frames(opt.frames_dir);
        if (frames.size() < 2) throw InvalidInput(opt.frames_dir.string() + ": need at least 2 frames");
        auto transport = opt.transport ? opt.transport : std::make_shared<llm::HttplibTransport>();
        llm::LlmOracle oracle(opt.endpoint, llm::prompt_from_name(opt.prompt), transport);
        eq = tvs::build_adjacency(oracle, frames, build);
        summary["network_calls"] = oracle.network_calls();
        summary["cache_hits"] = oracle.cache_hits();
        summary["prompt"] = opt.prompt;
        summary["model"] = opt.endpoint.model_name;
    } else if (opt.oracle == "replay") {
        const auto stored = read_eq(opt.eq_in);
        tvs::ReplayOracle oracle(stored.bits());
        eq = tvs::build_adjacency(oracle, stored.frames(), build);
    } else if (opt.oracle == "flip") {
        const auto truth = read_eq(opt.eq_in);
        tvs::FlipOracle oracle(truth, opt.flip_p, opt.seed);
        eq = tvs::build_adjacency(oracle, truth.frames(), build);
        summary["p"] = opt.flip_p;
        summary["seed"] = opt.seed;
        summary["boundary_errors"] = tvs::boundary_error_count(truth, eq);
    } else {
        throw InvalidInput("unknown oracle '" + opt.oracle + "' (expected llm, replay or flip)");
    }

    const auto structure = tvs::build_structure(eq);
    std::size_t retries = 0, ambiguous = 0, flagged = 0, cuts = 0;
    for (const auto& rec : eq.audit()) {
        retries += static_cast<std::size_t>(rec.retries);
        if (rec.retries > 0) ++ambiguous;
        if (rec.flagged) ++flagged;
    }
    for (auto b : eq.bits()) cuts += b == 0;

    ensure_dir(opt.output_dir);
    write_eq(opt.output_dir / "eq.txt", eq);
    write_matrix_csv(opt.output_dir / "G.csv", structure.G);
    write_audit(opt.output_dir / "audit.jsonl", eq);
    summary["oracle"] = opt.oracle;
    summary["N"] = eq.frames();
    summary["num_runs"] = structure.runs();
    summary["cuts"] = cuts;
    summary["retries"] = retries;
    summary["ambiguous_count"] = ambiguous;
    summary["flagged_count"] = flagged;
    write_json(opt.output_dir / "tvs.json", summary);

    out << "frames " << eq.frames() << ", runs " << structure.runs() << ", cuts " << cuts
        << ", flagged " << flagged << '\n';
    return kOk;
}

int run_segment(const SegmentOptions& opt, std::ostream& out) {
    opt.solver.validate();
    const FeatureSequence X(read_feature_csv(opt.features), opt.solver.normalize_columns);
    const Index n = X.frames();

    tvs::TvsStructure structure;
    if (!opt.eq_in.empty()) {
        const auto eq = read_eq(opt.eq_in);
        if (static_cast<Index>(eq.frames()) != n) {
            throw InvalidInput(opt.eq_in.string() + ": covers " + std::to_string(eq.frames()) +
                               " frames, features have " + std::to_string(n));
        }
        structure = tvs::build_structure(eq);
    } else {
        structure.G = Matrix::Identity(n, n);
        structure.neighborhoods = tvs::empty_neighborhoods(n);
    }

    ensure_dir(opt.output_dir);
    solver::SegmentationReport report;
    try {
        report = solver::run(X, structure.G, structure.neighborhoods, opt.solver);
    } catch (const solver::Divergence& e) {
        const auto& partial = e.partial();
        write_trace(opt.output_dir / "trace.csv", partial.trace);
        json j = report_json(partial);
        j["status"] = "diverged";
        j["error"] = e.what();
        j["config"] = solver_json(opt.solver);
        write_json(opt.output_dir / "report.json", j);
        throw;
    }

    write_int_lines(opt.output_dir / "labels.txt", report.labels);
    write_trace(opt.output_dir / "trace.csv", report.trace);
    json j = report_json(report);
    j["status"] = report.converged ? "converged" : "max_outer";
    j["frames"] = n;
    j["config"] = solver_json(opt.solver);
    write_json(opt.output_dir / "report.json", j);

    out << "K " << report.K << ", iterations " << report.iterations
        << (report.converged ? ", converged" : ", not converged") << ", objective "
        << format_number(report.final_objective.total) << '\n';
    return kOk;
}

int run_eval(const EvalOptions& opt, std::ostream& out) {
    const auto pred = read_int_lines(opt.pred);
    const auto truth = read_int_lines(opt.truth);
    if (pred.size() != truth.size()) {
        throw InvalidInput("label files differ in length: " + std::to_string(pred.size()) + " vs " +
                           std::to_string(truth.size()));
    }
    if (pred.empty()) throw InvalidInput("label files are empty");
    const auto r = metrics::evaluate(truth, pred);

    out << "acc       " << fixed6(r.acc) << '\n'
        << "nmi       " << fixed6(r.nmi) << (r.nmi_degenerate ? "  (degenerate)" : "") << '\n'
        << "precision " << fixed6(r.precision) << '\n'
        << "ari       " << fixed6(r.ari) << (r.ari_degenerate ? "  (degenerate)" : "") << '\n';

    if (!opt.output.empty()) {
        if (opt.output.has_parent_path()) ensure_dir(opt.output.parent_path());
        json mapping = json::array();
        for (std::size_t c = 0; c < r.mapping.size(); ++c) {
            mapping.push_back({{"pred", r.confusion.pred_values[c]},
                               {"truth", r.mapping[c] < 0 ? json(nullptr) : json(r.mapping[c])}});
        }
        write_json(opt.output, {{"acc", round6(r.acc)},
                                {"nmi", round6(r.nmi)},
                                {"precision", round6(r.precision)},
                                {"ari", round6(r.ari)},
                                {"nmi_degenerate", r.nmi_degenerate},
                                {"ari_degenerate", r.ari_degenerate},
                                {"frames", r.confusion.n},
                                {"mapping", mapping},
                                {"true_labels", r.confusion.true_values},
                                {"pred_labels", r.confusion.pred_values},
                                {"confusion", r.confusion.counts}});
    }
    return kOk;
}

int run_generate(const GenerateOptions& opt, std::ostream& out) {
    const auto inst = datagen::generate(opt.spec);
    ensure_dir(opt.output_dir);
    write_feature_csv(opt.output_dir / "features.csv", inst.X);
    write_int_lines(opt.output_dir / "labels.txt", inst.labels);
    write_eq(opt.output_dir / "eq.txt", inst.eq);
    const double sep = datagen::separation(inst.bases);
    write_json(opt.output_dir / "generate.json",
               {{"spec", spec_json(opt.spec)}, {"lengths", inst.lengths}, {"separation", sep}});
    out << "N " << opt.spec.N << ", K " << opt.spec.K << ", separation " << format_number(sep) << '\n';
    return kOk;
}

int run_simulate(const SimulateOptions& opt, std::ostream& out) {
    opt.spec.validate();
    if (!opt.boundary_only) opt.solver.validate();
    if (opt.trials < 1) throw InvalidInput("trials must be positive");
    if (opt.p_values.empty()) throw InvalidInput("no flip probabilities given");
    for (double p : opt.p_values) {
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("flip probability must lie in [0, 1]");
    }

    const std::size_t np = opt.p_values.size();
    const std::size_t nt = static_cast<std::size_t>(opt.trials);
    std::vector<TrialResult> results(np * nt);

    parallel_for(results.size(), opt.workers, [&](std::size_t job) {
        const std::size_t pi = job / nt;
        const std::size_t t = job % nt;
        TrialResult& r = results[job];
        try {
            auto spec = opt.spec;
            spec.rng_seed = derive_seed(opt.spec.rng_seed, t);
            const auto inst = datagen::generate(spec);
            const auto noisy = tvs::flip_adjacency(inst.eq, opt.p_values[pi],
                                                   derive_seed(opt.spec.rng_seed, t, pi + 1));
            r.b_err = static_cast<double>(tvs::boundary_error_count(inst.eq, noisy));
            if (opt.boundary_only) return;
            auto cfg = opt.solver;
            cfg.rng_seed = derive_seed(opt.solver.rng_seed, t, pi + 1);
            const FeatureSequence X(inst.X, cfg.normalize_columns);
            const auto report = solver::run(X, tvs::build_structure(noisy), cfg);
            const auto m = metrics::evaluate(inst.labels, report.labels);
            r.acc = m.acc;
            r.nmi = m.nmi;
            r.K = report.K;
        } catch (const std::exception& e) {
            r.failed = true;
            r.error = e.what();
        }
    });

    ensure_dir(opt.output_dir);
    const double pairs = static_cast<double>(opt.spec.N - 1);
    std::ofstream csv(opt.output_dir / "simulate.csv", std::ios::trunc);
    if (!csv) throw FileError((opt.output_dir / "simulate.csv").string(), "cannot open for writing");
    csv << "p,trials,failures,b_err_mean,b_err_stderr,b_err_reference,acc_mean,acc_stderr,nmi_mean,"
           "nmi_stderr\n";

    json rows = json::array();
    out << "      p  trials  fail   B_err mean   stderr  2p(N-1)";
    if (!opt.boundary_only) out << "  Acc mean  stderr  NMI mean  stderr";
    out << '\n';
    for (std::size_t pi = 0; pi < np; ++pi) {
        std::vector<double> b, acc, nmi;
        int failures = 0;
        json trials = json::array();
        for (std::size_t t = 0; t < nt; ++t) {
            const auto& r = results[pi * nt + t];
            json tj = {{"trial", t}};
            if (r.failed) {
                ++failures;
                tj["error"] = r.error;
            } else {
                b.push_back(r.b_err);
                tj["b_err"] = r.b_err;
                if (!opt.boundary_only) {
                    acc.push_back(r.acc);
                    nmi.push_back(r.nmi);
                    tj["acc"] = r.acc;
                    tj["nmi"] = r.nmi;
                    tj["K"] = r.K;
                }
            }
            trials.push_back(tj);
        }
        const double p = opt.p_values[pi];
        const auto mb = moments(b), ma = moments(acc), mn = moments(nmi);
        const double ref = 2.0 * p * pairs;
        csv << format_number(p) << ',' << nt << ',' << failures << ',' << format_number(mb.mean) << ','
            << format_number(mb.stderr_) << ',' << format_number(ref);
        if (opt.boundary_only) {
            csv << ",,,,\n";
        } else {
            csv << ',' << format_number(ma.mean) << ',' << format_number(ma.stderr_) << ','
                << format_number(mn.mean) << ',' << format_number(mn.stderr_) << '\n';
        }

        char line[256];
        std::snprintf(line, sizeof line, "%7.4f  %6zu  %4d  %11.4f  %7.4f  %7.2f", p, nt, failures, mb.mean,
                      mb.stderr_, ref);
        out << line;
        if (!opt.boundary_only) {
            std::snprintf(line, sizeof line, "  %8.4f  %6.4f  %8.4f  %6.4f", ma.mean, ma.stderr_, mn.mean,
                          mn.stderr_);
            out << line;
        }
        out << '\n';

        json row = {{"p", p},
                    {"trials", nt},
                    {"failures", failures},
                    {"b_err_mean", mb.mean},
                    {"b_err_stderr", mb.stderr_},
                    {"b_err_reference", ref},
                    {"per_trial", trials}};
        if (!opt.boundary_only) {
            row["acc_mean"] = ma.mean;
            row["acc_stderr"] = ma.stderr_;
            row["nmi_mean"] = mn.mean;
            row["nmi_stderr"] = mn.stderr_;
        }
        rows.push_back(row);
    }
    if (!csv) throw FileError((opt.output_dir / "simulate.csv").string(), "write failed");

    json j = {{"spec", spec_json(opt.spec)}, {"boundary_only", opt.boundary_only}, {"results", rows}};
    if (!opt.boundary_only) j["solver"] = solver_json(opt.solver);
    write_json(opt.output_dir / "simulate.json", j);
    return kOk;
}

int report_error(const std::exception& e, std::ostream& err) {
    if (const auto* o = dynamic_cast<const OracleUnavailable*>(&e)) {
        err << "error: oracle unavailable at pair " << o->pair_index() << " (frames " << o->pair_index()
            << " and " << o->pair_index() + 1 << "): " << e.what() << '\n';
        return kOracleError;
    }
    if (dynamic_cast<const ProtocolError*>(&e) || dynamic_cast<const llm::TransportError*>(&e)) {
        err << "error: oracle: " << e.what() << '\n';
        return kOracleError;
    }
    if (dynamic_cast<const NumericalFailure*>(&e) || dynamic_cast<const SingularSystem*>(&e) ||
        dynamic_cast<const SelectionError*>(&e)) {
        err << "error: solver: " << e.what() << '\n';
        return kDivergence;
    }
    err << "error: " << e.what() << '\n';
    return kInputError;
}

}  // namespace tvsh::cli
