#include "app.hpp"

#include "commands.hpp"

#include "tvsh/solver.hpp"

#include <CLI11.hpp>

#include <map>
#include <ostream>

namespace tvsh::cli {

namespace {

void add_solver_options(CLI::App& cmd, SolverConfig& c, std::string& assignment, bool& no_normalize,
                        bool& no_guards) {
    cmd.add_option("--lambda-fit", c.weights.fit, "Weight of the reconstruction term")->capture_default_str();
    cmd.add_option("--lambda-sparse", c.weights.sparsity, "Weight of ||Z^T Z||_1")->capture_default_str();
    cmd.add_option("--lambda-tvs", c.weights.tvs, "Weight of ||ZG||_{2,1}")->capture_default_str();
    cmd.add_option("--lambda-cluster", c.weights.cluster, "Weight of the cluster term")->capture_default_str();
    cmd.add_option("--gamma0", c.gamma0, "Initial penalty")->capture_default_str();
    cmd.add_option("--rho", c.rho, "Penalty growth factor")->capture_default_str();
    cmd.add_option("--max-outer", c.max_outer, "Outer iteration cap")->capture_default_str();
    cmd.add_option("--tol", c.tol_rel_obj, "Relative objective change for convergence")->capture_default_str();
    cmd.add_option("--solver-seed", c.rng_seed, "Seed for k-means initialization")->capture_default_str();
    cmd.add_option("--k-min", c.k_min, "Smallest candidate K")->capture_default_str();
    cmd.add_option("--k-max", c.k_max, "Largest candidate K")->capture_default_str();
    cmd.add_option("--kmeans-iter", c.kmeans_max_iter, "k-means round cap")->capture_default_str();
    cmd.add_option("--assignment", assignment, "k-means assignment rule")
        ->check(CLI::IsMember({"neighbor", "weighted"}))
        ->capture_default_str();
    cmd.add_option("--z-prox", c.z_prox, "Proximal weight of the Z-step")->capture_default_str();
    cmd.add_flag("--no-normalize", no_normalize, "Keep raw column norms");
    cmd.add_flag("--no-guards", no_guards, "Accept every Z and Q step unconditionally");
}

void finish_solver(SolverConfig& c, const std::string& assignment, bool no_normalize, bool no_guards) {
    c.assignment = assignment == "weighted" ? AssignmentRule::WeightedResidual : AssignmentRule::NeighborResidual;
    c.normalize_columns = !no_normalize;
    if (no_guards) {
        c.guard_q_step = false;
        c.guard_z_step = false;
    }
}

void add_spec_options(CLI::App& cmd, datagen::SyntheticSpec& s, bool& oblique) {
    cmd.add_option("-N,--frames", s.N, "Number of frames")->capture_default_str();
    cmd.add_option("-K,--segments", s.K, "Number of segments")->capture_default_str();
    cmd.add_option("-D,--dim", s.D, "Ambient dimension")->capture_default_str();
    cmd.add_option("--subspace-dim", s.d, "Subspace dimension")->capture_default_str();
    cmd.add_option("--min-length", s.L_min, "Minimum segment length")->capture_default_str();
    cmd.add_option("--sigma", s.sigma, "Noise standard deviation")->capture_default_str();
    cmd.add_option("--seed", s.rng_seed, "Data seed")->capture_default_str();
    cmd.add_flag("--oblique", oblique, "Draw independent random bases instead of orthogonal ones");
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Temporal subspace clustering of frame sequences with adjacency supervision", "tvsh"};
    app.set_config("--config", "", "INI/TOML file; command-line flags take precedence");
    app.require_subcommand(1);

    TvsOptions tvs_opt;
    double timeout = tvs_opt.endpoint.timeout_s;
    auto* tvs = app.add_subcommand("tvs", "Build the adjacency sequence and TVS matrix");
    tvs->add_option("--oracle", tvs_opt.oracle, "llm, replay or flip")
        ->check(CLI::IsMember({"llm", "replay", "flip"}))
        ->capture_default_str();
    tvs->add_option("--frames-dir", tvs_opt.frames_dir, "Directory of frame images (llm)");
    tvs->add_option("--eq", tvs_opt.eq_in, "Stored sequence (replay) or ground truth (flip)");
    tvs->add_option("--p", tvs_opt.flip_p, "Flip probability (flip)")->capture_default_str();
    tvs->add_option("--seed", tvs_opt.seed, "Flip seed (flip)")->capture_default_str();
    tvs->add_option("--prompt", tvs_opt.prompt, "Prompt template")
        ->check(CLI::IsMember({"baseline", "attribute", "confidence", "step_aware", "phase_aware", "causal"}))
        ->capture_default_str();
    tvs->add_option("--base-url", tvs_opt.endpoint.base_url, "Endpoint base URL")->capture_default_str();
    tvs->add_option("--path", tvs_opt.endpoint.path, "Endpoint path")->capture_default_str();
    tvs->add_option("--model", tvs_opt.endpoint.model_name, "Model name")->capture_default_str();
    tvs->add_option("--api-key-env", tvs_opt.endpoint.api_key_env_var,
                    "Environment variable holding the API key")
        ->capture_default_str();
    tvs->add_option("--timeout", timeout, "Request timeout in seconds")->capture_default_str();
    tvs->add_option("--max-retries", tvs_opt.endpoint.max_retries, "Retries per request")->capture_default_str();
    tvs->add_option("--max-parallel", tvs_opt.endpoint.max_parallel, "Concurrent requests")->capture_default_str();
    tvs->add_option("--rps", tvs_opt.endpoint.requests_per_second, "Request rate limit, 0 for none")
        ->capture_default_str();
    tvs->add_option("--cache-dir", tvs_opt.endpoint.cache_dir, "Response cache directory");
    tvs->add_option("--response-path", tvs_opt.endpoint.response_path, "JSON pointer to the answer text")
        ->capture_default_str();
    tvs->add_option("--confidence-threshold", tvs_opt.endpoint.confidence_threshold,
                    "Minimum score for the confidence template")
        ->capture_default_str();
    tvs->add_flag("--debug", tvs_opt.endpoint.debug, "Log requests and responses to stderr");
    tvs->add_option("-o,--output-dir", tvs_opt.output_dir, "Output directory")->capture_default_str();

    SegmentOptions seg_opt;
    std::string seg_assign = "neighbor";
    bool seg_no_norm = false, seg_no_guards = false;
    auto* segment = app.add_subcommand("segment", "Segment a feature sequence");
    segment->add_option("-f,--features", seg_opt.features, "Feature CSV, one frame per row")->required();
    segment->add_option("--eq", seg_opt.eq_in, "Adjacency sequence; omitted means G = I");
    add_solver_options(*segment, seg_opt.solver, seg_assign, seg_no_norm, seg_no_guards);
    segment->add_option("-o,--output-dir", seg_opt.output_dir, "Output directory")->capture_default_str();

    EvalOptions eval_opt;
    auto* eval = app.add_subcommand("eval", "Score predicted labels against ground truth");
    eval->add_option("--pred", eval_opt.pred, "Predicted labels, one per line")->required();
    eval->add_option("--truth", eval_opt.truth, "True labels, one per line")->required();
    eval->add_option("-o,--output", eval_opt.output, "Write the result as JSON");

    SimulateOptions sim_opt;
    bool sim_oblique = false;
    std::string sim_assign = "neighbor";
    bool sim_no_norm = false, sim_no_guards = false;
    auto* simulate = app.add_subcommand("simulate", "Adjacency noise sweep on synthetic data");
    add_spec_options(*simulate, sim_opt.spec, sim_oblique);
    simulate->add_option("--p", sim_opt.p_values, "Flip probabilities")->delimiter(',')->capture_default_str();
    simulate->add_option("--trials", sim_opt.trials, "Trials per probability")->capture_default_str();
    simulate->add_option("-j,--workers", sim_opt.workers, "Worker threads")->capture_default_str();
    simulate->add_flag("--boundary-only", sim_opt.boundary_only, "Skip segmentation");
    add_solver_options(*simulate, sim_opt.solver, sim_assign, sim_no_norm, sim_no_guards);
    simulate->add_option("-o,--output-dir", sim_opt.output_dir, "Output directory")->capture_default_str();

    GenerateOptions gen_opt;
    bool gen_oblique = false;
    auto* generate = app.add_subcommand("generate", "Write a synthetic instance");
    add_spec_options(*generate, gen_opt.spec, gen_oblique);
    generate->add_option("-o,--output-dir", gen_opt.output_dir, "Output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (*tvs) {
            tvs_opt.endpoint.timeout_s = timeout;
            return run_tvs(tvs_opt, out);
        }
        if (*segment) {
            finish_solver(seg_opt.solver, seg_assign, seg_no_norm, seg_no_guards);
            return run_segment(seg_opt, out);
        }
        if (*eval) return run_eval(eval_opt, out);
        if (*simulate) {
            sim_opt.spec.orthogonal = !sim_oblique;
            finish_solver(sim_opt.solver, sim_assign, sim_no_norm, sim_no_guards);
            return run_simulate(sim_opt, out);
        }
        if (*generate) {
            gen_opt.spec.orthogonal = !gen_oblique;
            return run_generate(gen_opt, out);
        }
    } catch (const std::exception& e) {
        return report_error(e, err);
    }
    return kInputError;
}

}  // namespace tvsh::cli
