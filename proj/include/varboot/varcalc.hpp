#pragma once

#include <map>
#include <set>
#include <vector>

#include "varboot/expr.hpp"

namespace vb {

using CompKey = std::pair<FieldId, std::vector<int>>;

// A PDE system E_A dy^A ^ dx: one coefficient per independent component of
// each listed field.
struct SourceForm {
    World* w = nullptr;
    std::vector<FieldId> fields;
    std::map<CompKey, Expr> coeffs;

    Expr coeff(FieldId f, const std::vector<int>& comp) const;
    void set_coeff(FieldId f, std::vector<int> comp, Expr e);
    int order() const;
    bool is_zero() const;
    bool equals(const SourceForm& o) const;
};

struct LagrangianDensity {
    World* w = nullptr;
    Expr density;
};

// The three Helmholtz obstruction families, indexed by pairs of independent
// components (positions into `comps`). Second-derivative slots follow the
// all-pairs convention: the stored partial at an off-diagonal (mu,nu) is
// halved so that sums over all ordered pairs come out right.
struct HelmholtzTensor {
    World* w = nullptr;
    std::vector<CompKey> comps;
    std::map<std::tuple<size_t, size_t>, Expr> H0;
    std::map<std::tuple<size_t, size_t, int>, Expr> H1;
    std::map<std::tuple<size_t, size_t, int, int>, Expr> H2;

    bool all_zero() const;
};

// formal partial w.r.t. the second-jet slot (mu,nu) in all-pairs convention
Expr sym_partial2(const Expr& e, FieldId f, const std::vector<int>& comp, int mu, int nu);

// variational derivative of L w.r.t. every independent component of f
SourceForm euler_lagrange(const LagrangianDensity& L, FieldId f);
SourceForm euler_lagrange(const LagrangianDensity& L, const std::vector<FieldId>& fs);

HelmholtzTensor helmholtz(const SourceForm& E); // throws OrderTooHigh above order 2
bool is_variational(const SourceForm& E);

LagrangianDensity vainberg_tonti(const SourceForm& E, const std::set<FieldId>& vary);

struct CompletionResult {
    SourceForm completed;
    LagrangianDensity lagrangian;
    bool identity_checked = false; // Helmholtz correction identity verified (order <= 2)
};
CompletionResult variational_completion(const SourceForm& E, const std::set<FieldId>& vary);

struct BootstrapResult {
    LagrangianDensity lagrangian;  // the partial homotopy Lagrangian
    SourceForm completed_vary_eqs; // EL w.r.t. the varied fields
    SourceForm passive_eqs;        // EL w.r.t. passive fields
    // passive equations are determined only up to terms independent of the
    // varied fields; consumers must not treat them as complete
    bool passive_up_to_lambda2 = true;
};
BootstrapResult bootstrap(const SourceForm& E, const std::set<FieldId>& vary,
                          const std::set<FieldId>& passive);

bool is_trivial(const LagrangianDensity& L, const std::vector<FieldId>& fields);

// all sorted derivative multisets over 0..m-1 with the given size
std::vector<std::vector<int>> derivative_multisets(int m, int size);

} // namespace vb
