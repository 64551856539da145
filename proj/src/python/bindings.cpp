#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tvsh/datagen.hpp"
#include "tvsh/errors.hpp"
#include "tvsh/linalg.hpp"
#include "tvsh/metrics.hpp"
#include "tvsh/solver.hpp"
#include "tvsh/tvs.hpp"

namespace py = pybind11;
using namespace tvsh;

namespace {

tvs::AdjacencySequence to_eq(const std::vector<int>& bits) {
    return tvs::AdjacencySequence::from_ints(bits, tvs::Source::File);
}

std::vector<int> from_eq(const tvs::AdjacencySequence& eq) {
    return {eq.bits().begin(), eq.bits().end()};
}

py::dict objective_dict(const ObjectiveBreakdown& o) {
    py::dict d;
    d["fit"] = o.fit;
    d["sparsity"] = o.sparsity;
    d["tvs"] = o.tvs;
    d["cluster"] = o.cluster;
    d["total"] = o.total;
    d["aug_lagrangian"] = o.aug_lagrangian;
    return d;
}

}  // namespace

PYBIND11_MODULE(_tvsh, m) {
    m.doc() = "Temporal subspace clustering with adjacency supervision";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<FileError>(m, "FileError", PyExc_OSError);
    py::register_exception<NumericalFailure>(m, "NumericalFailure", base.ptr());
    py::register_exception<SingularSystem>(m, "SingularSystem", base.ptr());
    py::register_exception<OracleUnavailable>(m, "OracleUnavailable", base.ptr());
    py::register_exception<UndefinedMetric>(m, "UndefinedMetric", base.ptr());
    py::register_exception<SelectionError>(m, "SelectionError", base.ptr());

    py::class_<SolverConfig>(m, "SolverConfig")
        .def(py::init<>())
        .def_property(
            "lambda_fit", [](const SolverConfig& c) { return c.weights.fit; },
            [](SolverConfig& c, double v) { c.weights.fit = v; })
        .def_property(
            "lambda_sparse", [](const SolverConfig& c) { return c.weights.sparsity; },
            [](SolverConfig& c, double v) { c.weights.sparsity = v; })
        .def_property(
            "lambda_tvs", [](const SolverConfig& c) { return c.weights.tvs; },
            [](SolverConfig& c, double v) { c.weights.tvs = v; })
        .def_property(
            "lambda_cluster", [](const SolverConfig& c) { return c.weights.cluster; },
            [](SolverConfig& c, double v) { c.weights.cluster = v; })
        .def_readwrite("gamma0", &SolverConfig::gamma0)
        .def_readwrite("rho", &SolverConfig::rho)
        .def_readwrite("max_outer", &SolverConfig::max_outer)
        .def_readwrite("tol_rel_obj", &SolverConfig::tol_rel_obj)
        .def_readwrite("rng_seed", &SolverConfig::rng_seed)
        .def_readwrite("k_min", &SolverConfig::k_min)
        .def_readwrite("k_max", &SolverConfig::k_max)
        .def_readwrite("normalize_columns", &SolverConfig::normalize_columns)
        .def_readwrite("kmeans_max_iter", &SolverConfig::kmeans_max_iter)
        .def_readwrite("z_prox", &SolverConfig::z_prox)
        .def_readwrite("guard_q_step", &SolverConfig::guard_q_step)
        .def_readwrite("guard_z_step", &SolverConfig::guard_z_step)
        .def("validate", &SolverConfig::validate);

    m.def(
        "generate",
        [](Index N, int K, Index D, Index d, Index L_min, double sigma, bool orthogonal, std::uint64_t seed) {
            datagen::SyntheticSpec s{N, K, D, d, L_min, sigma, orthogonal, seed};
            auto inst = datagen::generate(s);
            py::dict out;
            out["X"] = inst.X;
            out["labels"] = inst.labels;
            out["eq"] = from_eq(inst.eq);
            out["lengths"] = inst.lengths;
            out["separation"] = datagen::separation(inst.bases);
            return out;
        },
        py::arg("N") = 300, py::arg("K") = 4, py::arg("D") = 30, py::arg("d") = 3, py::arg("L_min") = 50,
        py::arg("sigma") = 0.01, py::arg("orthogonal") = true, py::arg("seed") = 0,
        "Synthetic union-of-subspaces sequence; X is D x N.");

    m.def(
        "tvs_matrix", [](const std::vector<int>& eq) { return tvs::build_structure(to_eq(eq)).G; },
        py::arg("eq"));
    m.def(
        "neighborhoods",
        [](const std::vector<int>& eq) { return tvs::build_structure(to_eq(eq)).neighborhoods; },
        py::arg("eq"));
    m.def(
        "flip_adjacency",
        [](const std::vector<int>& eq, double p, std::uint64_t seed) {
            return from_eq(tvs::flip_adjacency(to_eq(eq), p, seed));
        },
        py::arg("eq"), py::arg("p"), py::arg("seed"));
    m.def(
        "boundary_error_count",
        [](const std::vector<int>& a, const std::vector<int>& b) {
            return tvs::boundary_error_count(to_eq(a), to_eq(b));
        },
        py::arg("truth"), py::arg("noisy"));

    m.def("group_shrink", &solver::group_shrink, py::arg("P"), py::arg("radius"));
    m.def(
        "solve_sylvester",
        [](const Matrix& A, const Matrix& B, const Matrix& C) { return linalg::solve_sylvester(A, B, C); },
        py::arg("A"), py::arg("B"), py::arg("C"), "Solves A X + X B = C.");

    m.def(
        "segment",
        [](const Matrix& X, std::optional<std::vector<int>> eq, const SolverConfig& cfg) {
            const FeatureSequence seq(X, cfg.normalize_columns);
            const Index n = seq.frames();
            tvs::TvsStructure st;
            if (eq) {
                st = tvs::build_structure(to_eq(*eq));
            } else {
                st.G = Matrix::Identity(n, n);
                st.neighborhoods = tvs::empty_neighborhoods(n);
            }
            solver::SegmentationReport r;
            {
                py::gil_scoped_release release;
                r = solver::run(seq, st.G, st.neighborhoods, cfg);
            }
            py::list trace;
            for (const auto& rec : r.trace) {
                py::dict d = objective_dict(rec.objective);
                d["primal_residual"] = rec.primal_residual;
                d["gamma"] = rec.gamma;
                d["K"] = rec.K;
                d["nonmonotone"] = rec.nonmonotone;
                trace.append(d);
            }
            py::dict out;
            out["labels"] = r.labels;
            out["K"] = r.K;
            out["iterations"] = r.iterations;
            out["converged"] = r.converged;
            out["objective"] = objective_dict(r.final_objective);
            out["silhouette"] = r.silhouette;
            out["Z"] = r.embedding.Z;
            out["trace"] = trace;
            return out;
        },
        py::arg("X"), py::arg("eq") = py::none(), py::arg("config") = SolverConfig{},
        "Segments the D x N frame matrix X; without eq the TVS matrix is the identity.");

    m.def(
        "evaluate",
        [](const Labels& truth, const Labels& pred) {
            const auto r = metrics::evaluate(truth, pred);
            py::dict out;
            out["acc"] = r.acc;
            out["nmi"] = r.nmi;
            out["precision"] = r.precision;
            out["ari"] = r.ari;
            out["mapping"] = r.mapping;
            out["confusion"] = r.confusion.counts;
            return out;
        },
        py::arg("truth"), py::arg("pred"));
}
