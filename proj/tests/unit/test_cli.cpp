#include <doctest.h>

#include "app.hpp"
#include "commands.hpp"
#include "io.hpp"

#include "tvsh/datagen.hpp"
#include "tvsh/errors.hpp"

#include "temp_dir.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

using namespace tvsh;
using testing::slurp;
using testing::spit;
using testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "tvsh");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> small_spec() {
    return {"-N", "60", "-K", "2", "-D", "10", "--subspace-dim", "2", "--min-length", "20", "--seed", "3"};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

TEST_CASE("tvs replay writes the expected G") {
    TempDir tmp("tvsh_cli");
    spit(tmp / "eq.txt", "1\n1\n0\n1\n");
    const auto r = invoke({"tvs", "--oracle", "replay", "--eq", (tmp / "eq.txt").string(), "-o",
                           (tmp / "out").string()});
    REQUIRE(r.code == 0);
    CHECK(slurp(tmp / "out/G.csv") ==
          "-2,1,1,0,0\n1,-2,1,0,0\n1,1,-2,0,0\n0,0,0,-1,1\n0,0,0,1,-1\n");
    CHECK(slurp(tmp / "out/eq.txt") == "1\n1\n0\n1\n");
    const auto summary = nlohmann::json::parse(slurp(tmp / "out/tvs.json"));
    CHECK(summary["N"] == 5);
    CHECK(summary["num_runs"] == 2);
    CHECK(summary["schema_version"] == cli::kSchemaVersion);

    int lines = 0;
    std::istringstream audit(slurp(tmp / "out/audit.jsonl"));
    for (std::string line; std::getline(audit, line);) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j["index"] == lines);
        CHECK(j["source"] == "file");
        ++lines;
    }
    CHECK(lines == 4);
}

TEST_CASE("tvs flip with p = 0 reproduces the truth") {
    TempDir tmp("tvsh_cli");
    spit(tmp / "truth.txt", "1\n0\n1\n1\n0\n1\n");
    const auto r = invoke({"tvs", "--oracle", "flip", "--p", "0", "--seed", "5", "--eq",
                           (tmp / "truth.txt").string(), "-o", tmp.path.string()});
    REQUIRE(r.code == 0);
    CHECK(slurp(tmp / "eq.txt") == slurp(tmp / "truth.txt"));
}

TEST_CASE("tvs with the llm oracle and no frames exits with an oracle error") {
    TempDir tmp("tvsh_cli");
    const auto r = invoke({"tvs", "--oracle", "llm", "--frames-dir", (tmp / "nothing").string(), "-o",
                           (tmp / "out").string()});
    CHECK(r.code == cli::kOracleError);
    CHECK_FALSE(fs::exists(tmp / "out/G.csv"));
    CHECK_FALSE(r.err.empty());
}

TEST_CASE("tvs with the llm oracle through a stub transport") {
    class YesTransport final : public llm::Transport {
    public:
        llm::HttpResponse post(const llm::HttpRequest&) override {
            return {200, R"({"choices":[{"message":{"content":"Yes"}}]})"};
        }
    };
    TempDir tmp("tvsh_cli");
    fs::create_directories(tmp / "frames");
    for (int i = 0; i < 3; ++i) spit(tmp / ("frames/f" + std::to_string(i) + ".png"), "img" + std::to_string(i));
    spit(tmp / "frames/notes.txt", "ignored");
    cli::TvsOptions opt;
    opt.oracle = "llm";
    opt.frames_dir = tmp / "frames";
    opt.output_dir = tmp / "out";
    opt.endpoint.retry_backoff_s = 0.0;
    opt.transport = std::make_shared<YesTransport>();
    std::ostringstream out;
    CHECK(cli::run_tvs(opt, out) == 0);
    CHECK(slurp(tmp / "out/eq.txt") == "1\n1\n");
    const auto summary = nlohmann::json::parse(slurp(tmp / "out/tvs.json"));
    CHECK(summary["network_calls"] == 2);
    CHECK(summary["N"] == 3);
}

TEST_CASE("generate, segment and eval on the standard instance") {
    TempDir tmp("tvsh_cli");
    const auto g = invoke({"generate", "--seed", "0", "-o", (tmp / "data").string()});
    REQUIRE(g.code == 0);
    const auto s = invoke({"segment", "-f", (tmp / "data/features.csv").string(), "--eq",
                           (tmp / "data/eq.txt").string(), "-o", (tmp / "seg").string()});
    REQUIRE(s.code == 0);
    const auto report = nlohmann::json::parse(slurp(tmp / "seg/report.json"));
    CHECK(report["K"] == 4);
    CHECK(report["status"] == "converged");
    const auto e = invoke({"eval", "--pred", (tmp / "seg/labels.txt").string(), "--truth",
                           (tmp / "data/labels.txt").string(), "-o", (tmp / "eval.json").string()});
    REQUIRE(e.code == 0);
    const auto ev = nlohmann::json::parse(slurp(tmp / "eval.json"));
    CHECK(ev["acc"].get<double>() >= 0.99);
    CHECK(ev["nmi"].get<double>() >= 0.99);

    std::istringstream trace(slurp(tmp / "seg/trace.csv"));
    std::string header;
    std::getline(trace, header);
    CHECK(header.rfind("iteration,fit,", 0) == 0);
    int rows = 0;
    for (std::string line; std::getline(trace, line);) ++rows;
    CHECK(rows == report["iterations"].get<int>());

    const auto one = invoke({"segment", "-f", (tmp / "data/features.csv").string(), "--eq",
                             (tmp / "data/eq.txt").string(), "--max-outer", "1", "-o", (tmp / "seg1").string()});
    REQUIRE(one.code == 0);
    CHECK(nlohmann::json::parse(slurp(tmp / "seg1/report.json"))["iterations"] == 1);
}

TEST_CASE("segment rejects a ragged feature file with its line number") {
    TempDir tmp("tvsh_cli");
    spit(tmp / "x.csv", "1,2,3\n4,5,6\n7,8\n");
    const auto r = invoke({"segment", "-f", (tmp / "x.csv").string(), "-o", tmp.path.string()});
    CHECK(r.code == cli::kInputError);
    CHECK(r.err.find("line 3") != std::string::npos);
    CHECK_FALSE(fs::exists(tmp / "labels.txt"));

    spit(tmp / "y.csv", "1,2\nfoo,3\n");
    CHECK(invoke({"segment", "-f", (tmp / "y.csv").string(), "-o", tmp.path.string()}).code == cli::kInputError);
    CHECK(invoke({"segment", "-f", (tmp / "missing.csv").string()}).code == cli::kInputError);
}

TEST_CASE("eval output") {
    TempDir tmp("tvsh_cli");
    spit(tmp / "a.txt", "0\n0\n1\n1\n2\n");
    spit(tmp / "b.txt", "5\n5\n3\n3\n9\n");
    spit(tmp / "t.txt", "0\n0\n1\n");
    spit(tmp / "p.txt", "0\n1\n1\n");

    const auto same = invoke({"eval", "--pred", (tmp / "a.txt").string(), "--truth", (tmp / "a.txt").string()});
    REQUIRE(same.code == 0);
    CHECK(same.out.find("acc       1.000000") != std::string::npos);

    const auto renamed = invoke({"eval", "--pred", (tmp / "b.txt").string(), "--truth", (tmp / "a.txt").string()});
    REQUIRE(renamed.code == 0);
    CHECK(renamed.out == same.out);

    const auto partial = invoke({"eval", "--pred", (tmp / "p.txt").string(), "--truth", (tmp / "t.txt").string(),
                                 "-o", (tmp / "e.json").string()});
    REQUIRE(partial.code == 0);
    CHECK(partial.out.find("0.666667") != std::string::npos);
    const auto j = nlohmann::json::parse(slurp(tmp / "e.json"));
    CHECK(j["acc"].get<double>() == doctest::Approx(0.666667).epsilon(1e-9));

    CHECK(invoke({"eval", "--pred", (tmp / "a.txt").string(), "--truth", (tmp / "t.txt").string()}).code ==
          cli::kInputError);
}

TEST_CASE("simulate without noise has no boundary errors") {
    TempDir tmp("tvsh_cli");
    const auto r = invoke(concat({"simulate", "--p", "0,0.1", "--trials", "2", "--boundary-only", "-o",
                                  tmp.path.string()},
                                 small_spec()));
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(tmp / "simulate.json"));
    REQUIRE(j["results"].size() == 2);
    const auto& clean = j["results"][0];
    CHECK(clean["p"].get<double>() == 0.0);
    CHECK(clean["b_err_mean"].get<double>() == 0.0);
    for (const auto& t : clean["per_trial"]) CHECK(t["b_err"].get<double>() == 0.0);
    CHECK(j["results"][1]["b_err_reference"].get<double>() == doctest::Approx(2 * 0.1 * 59));
}

TEST_CASE("simulate reruns are byte-identical across worker counts") {
    TempDir tmp("tvsh_cli");
    const auto base = concat({"simulate", "--p", "0,0.05", "--trials", "2"}, small_spec());
    REQUIRE(invoke(concat(base, {"-j", "1", "-o", (tmp / "a").string()})).code == 0);
    REQUIRE(invoke(concat(base, {"-j", "3", "-o", (tmp / "b").string()})).code == 0);
    CHECK(slurp(tmp / "a/simulate.csv") == slurp(tmp / "b/simulate.csv"));
    CHECK(slurp(tmp / "a/simulate.json") == slurp(tmp / "b/simulate.json"));
}

TEST_CASE("config file values are overridden by flags") {
    TempDir tmp("tvsh_cli");
    spit(tmp / "cfg.ini", "[generate]\nframes=80\nsegments=2\nmin-length=30\n");
    REQUIRE(invoke({"--config", (tmp / "cfg.ini").string(), "generate", "-o", (tmp / "a").string()}).code == 0);
    CHECK(cli::read_int_lines(tmp / "a/labels.txt").size() == 80);
    REQUIRE(invoke({"--config", (tmp / "cfg.ini").string(), "generate", "-N", "70", "-o", (tmp / "b").string()})
                .code == 0);
    CHECK(cli::read_int_lines(tmp / "b/labels.txt").size() == 70);
}

TEST_CASE("argument errors") {
    CHECK(invoke({}).code == cli::kInputError);
    CHECK(invoke({"bogus"}).code == cli::kInputError);
    CHECK(invoke({"--help"}).code == 0);
    CHECK(invoke({"tvs", "--oracle", "telepathy"}).code == cli::kInputError);
}

TEST_CASE("exit code mapping") {
    std::ostringstream err;
    CHECK(cli::report_error(InvalidInput("x"), err) == cli::kInputError);
    CHECK(cli::report_error(OracleUnavailable(1, "down"), err) == cli::kOracleError);
    CHECK(cli::report_error(NumericalFailure("nan", 4), err) == cli::kDivergence);
}

TEST_CASE("seed derivation") {
    CHECK(cli::derive_seed(1, 2, 3) == cli::derive_seed(1, 2, 3));
    CHECK(cli::derive_seed(1, 2, 3) != cli::derive_seed(1, 3, 2));
    CHECK(cli::derive_seed(1, 2) != cli::derive_seed(2, 2));
}
