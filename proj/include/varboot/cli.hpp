#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "varboot/geometry.hpp"
#include "varboot/varcalc.hpp"

namespace vb {

// One named equation from a model file: the field it varies, the free index
// names on the left-hand side, and the raw right-hand side text.
struct EquationSpec {
    std::string name;
    FieldId field = 0;
    std::vector<std::string> indices;
    std::string rhs;
};

// A parsed model file: world, declared fields and atoms, named equations.
struct ModelSpec {
    std::shared_ptr<World> world;
    std::vector<FieldId> fields;
    std::optional<FieldId> metric;
    std::map<std::string, VarId> atoms;
    std::vector<EquationSpec> equations;
    std::shared_ptr<MetricModel> geom; // present when a metric is declared
    std::string source;

    const EquationSpec* find_equation(const std::string& name) const;
};

ModelSpec parse_model_text(const std::string& text);
ModelSpec parse_model_file(const std::string& path);

// Einstein-summation expression parsing in a model context. Scalar parsing
// rejects free indices; indexed parsing binds `free` over 0..dim-1 and
// returns one Expr per assignment.
Expr parse_scalar_expression(ModelSpec& M, const std::string& text);
std::map<std::vector<int>, Expr> parse_indexed_expression(ModelSpec& M, const std::string& text,
                                                          const std::vector<std::string>& free);

// Source form of one equation (metric off-diagonal coefficients doubled) or
// of all equations in the model combined.
SourceForm equation_source_form(ModelSpec& M, const EquationSpec& eq);
SourceForm model_source_form(ModelSpec& M);

// report serialization that re-parses to an equal Expr in the same model
std::string print_expr(const Expr& e);

struct RunResult {
    int exit_code = 0;
    std::string text; // human-readable report
    std::string json; // machine-readable report, schema 1
};

// full command dispatch; args exclude the program name
RunResult run(const std::vector<std::string>& args);

} // namespace vb
