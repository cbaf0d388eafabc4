#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "varboot/errors.hpp"
#include "varboot/poly.hpp"

namespace vb {

using FieldId = uint32_t;
using FactorId = uint32_t;

enum class FieldKind { Scalar, Covector, Metric, Tensor12, General };
enum class PairSym { None, Sym, Anti };

struct FieldSpec {
    std::string name;
    FieldKind kind = FieldKind::Scalar;
    int valence = 0; // number of component slots
    // optional symmetry on one slot pair (metric: slots 0,1; tensor(1,2): 1,2)
    int sym_a = -1, sym_b = -1;
    PairSym sym = PairSym::None;
};

// Canonicalization of a component multi-index under the field symmetry.
// sign 0 means the component vanishes identically (antisymmetric diagonal).
struct CanonComp {
    std::vector<int> comp;
    int sign = 1;
};

struct VarInfo {
    enum class Kind { Jet, Atom };
    Kind kind = Kind::Jet;
    // Jet variables
    FieldId field = 0;
    std::vector<int> comp;  // canonical component
    std::vector<int> deriv; // sorted nondecreasing
    // Atoms
    std::string atom_name;
};

class Expr;

struct AtomInfo {
    std::string name;
    std::set<FieldId> depends;
    std::map<FieldId, Rat64> weights;             // chi_t scaling weights
    std::map<VarId, std::shared_ptr<Expr>> partials; // d(atom)/d(jet var)
    std::optional<Poly> relation_rhs;             // atom^2 == rhs (atom-free)
    // for function atoms f(phi): derivative chain f -> f' created on demand
    std::optional<FieldId> func_of;
    int func_order = 0; // number of primes
    std::optional<VarId> derivative_atom;
};

// Registry of fields, jet variables and atoms. Expressions reference a
// World; two Exprs may only be combined when they share one.
class World {
  public:
    explicit World(int dim, int max_order = 3) : dim_(dim), max_order_(max_order) {}

    int dim() const { return dim_; }
    int max_order() const { return max_order_; }
    void raise_max_order(int r) {
        if (r > max_order_) max_order_ = r;
    }

    FieldId add_field(FieldSpec spec);
    FieldId add_scalar_field(const std::string& name);
    FieldId add_metric_field(const std::string& name);
    // tensor of type (1,2): slots are (upper, lower, lower)
    FieldId add_tensor12_field(const std::string& name, PairSym lower_sym = PairSym::None);

    const FieldSpec& field(FieldId f) const { return fields_[f]; }
    size_t field_count() const { return fields_.size(); }
    std::optional<FieldId> find_field(const std::string& name) const;

    CanonComp canonical_component(FieldId f, const std::vector<int>& comp) const;
    // all canonical (independent) components, in deterministic order
    std::vector<std::vector<int>> independent_components(FieldId f) const;

    // Jet variable lookup/creation. deriv gets sorted; comp must be canonical.
    VarId jet_var(FieldId f, const std::vector<int>& comp, const std::vector<int>& deriv);

    // Atom registration
    VarId add_atom(const std::string& name);
    VarId add_function_atom(const std::string& name, FieldId of); // auto derivative chain
    void set_atom_weight(VarId atom, FieldId f, Rat64 w);
    void set_atom_depends(VarId atom, FieldId f);
    void set_atom_partial(VarId atom, VarId jetvar, const Expr& e);
    void set_atom_relation(VarId atom, Poly rhs);
    VarId atom_derivative(VarId atom); // creates V' from V on demand
    std::optional<VarId> find_atom(const std::string& name) const;

    const VarInfo& var(VarId v) const { return vars_[v]; }
    size_t var_count() const { return vars_.size(); }
    bool is_atom(VarId v) const { return vars_[v].kind == VarInfo::Kind::Atom; }
    bool is_relation_atom(VarId v) const {
        return is_atom(v) && atoms_.at(v).relation_rhs.has_value();
    }
    const AtomInfo& atom(VarId v) const { return atoms_.at(v); }
    AtomInfo& atom_mut(VarId v) { return atoms_.at(v); }
    int jet_order(VarId v) const {
        return vars_[v].kind == VarInfo::Kind::Jet ? static_cast<int>(vars_[v].deriv.size()) : 0;
    }

    std::string var_name(VarId v) const; // debug / report printing

    // Denominator factor interning. Factors are monic, non-constant.
    FactorId intern_factor(const Poly& p);
    const Poly& factor(FactorId f) const { return factors_[f]; }
    size_t factor_count() const { return factors_.size(); }

    // Reduce relation-atom exponents to <= 1 using atom^2 = rhs.
    Poly reduce(Poly p) const;

  private:
    int dim_;
    int max_order_;
    std::vector<FieldSpec> fields_;
    std::vector<VarInfo> vars_;
    std::map<VarId, AtomInfo> atoms_;
    std::map<std::string, VarId> atom_names_;
    // (field, comp, deriv) -> VarId
    std::map<std::tuple<FieldId, std::vector<int>, std::vector<int>>, VarId> jet_index_;
    std::vector<Poly> factors_;
    std::unordered_map<size_t, std::vector<FactorId>> factor_index_;
    mutable std::mutex mu_;
};

} // namespace vb
