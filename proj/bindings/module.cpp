// Python bindings: the CLI-level operations plus direct access to the main
// symbolic pipeline (parse a model, test variationality, reconstruct and
// complete Lagrangians, enumerate the invariant catalogue).

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "varboot/cli.hpp"
#include "varboot/invariant_enum.hpp"

namespace py = pybind11;
using namespace vb;

namespace {

// Model handle keeping the world alive; exposes string-level operations so
// Python never sees raw Expr internals, only the canonical printed forms.
struct PyModel {
    ModelSpec spec;

    explicit PyModel(const std::string& text) : spec(parse_model_text(text)) {}

    std::string eval(const std::string& expr) {
        return print_expr(parse_scalar_expression(spec, expr));
    }

    bool equal(const std::string& a, const std::string& b) {
        return parse_scalar_expression(spec, a).equals(parse_scalar_expression(spec, b));
    }
};

py::tuple run_args(const std::vector<std::string>& args) {
    RunResult r = run(args);
    return py::make_tuple(r.exit_code, r.text, r.json);
}

} // namespace

PYBIND11_MODULE(_varboot, m) {
    m.doc() = "symbolic engine for the inverse problem of the calculus of variations";

    m.def("run", &run_args, py::arg("args"),
          "Run a CLI command; returns (exit_code, text_report, json_report).");

    py::class_<PyModel>(m, "Model")
        .def(py::init<const std::string&>(), py::arg("text"),
             "Parse a model description (dim/field/atom/eq statements).")
        .def("eval", &PyModel::eval, py::arg("expr"),
             "Evaluate a scalar Einstein-summation expression to canonical form.")
        .def("equal", &PyModel::equal, py::arg("a"), py::arg("b"),
             "Exact symbolic equality of two scalar expressions.");

    m.def(
        "catalogue_counts",
        [](int k) {
            World w(4);
            DistortionVars dv = DistortionVars::make(&w);
            InvariantBasis B = enumerate_algebraic(dv, k);
            int dec = 0;
            for (const auto& mm : B.members) dec += mm.decomposable ? 1 : 0;
            return py::make_tuple(static_cast<int>(B.members.size()), dec, B.cert.rank);
        },
        py::arg("rank"),
        "(total, decomposable, independence_rank) of the rank-k algebraic catalogue.");
}
