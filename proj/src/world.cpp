#include "varboot/world.hpp"

#include <algorithm>
#include <cassert>

#include "varboot/expr.hpp"

namespace vb {

FieldId World::add_field(FieldSpec spec) {
    std::lock_guard<std::mutex> lk(mu_);
    fields_.push_back(std::move(spec));
    return static_cast<FieldId>(fields_.size() - 1);
}

FieldId World::add_scalar_field(const std::string& name) {
    return add_field(FieldSpec{name, FieldKind::Scalar, 0});
}

FieldId World::add_metric_field(const std::string& name) {
    FieldSpec s{name, FieldKind::Metric, 2};
    s.sym_a = 0;
    s.sym_b = 1;
    s.sym = PairSym::Sym;
    return add_field(s);
}

FieldId World::add_tensor12_field(const std::string& name, PairSym lower_sym) {
    FieldSpec s{name, FieldKind::Tensor12, 3};
    if (lower_sym != PairSym::None) {
        s.sym_a = 1;
        s.sym_b = 2;
        s.sym = lower_sym;
    }
    return add_field(s);
}

std::optional<FieldId> World::find_field(const std::string& name) const {
    for (size_t i = 0; i < fields_.size(); ++i)
        if (fields_[i].name == name) return static_cast<FieldId>(i);
    return std::nullopt;
}

CanonComp World::canonical_component(FieldId f, const std::vector<int>& comp) const {
    const FieldSpec& spec = fields_[f];
    assert(static_cast<int>(comp.size()) == spec.valence);
    CanonComp r{comp, 1};
    if (spec.sym != PairSym::None) {
        int a = spec.sym_a, b = spec.sym_b;
        if (r.comp[a] == r.comp[b] && spec.sym == PairSym::Anti) {
            r.sign = 0;
        } else if (r.comp[a] > r.comp[b]) {
            std::swap(r.comp[a], r.comp[b]);
            if (spec.sym == PairSym::Anti) r.sign = -1;
        }
    }
    return r;
}

std::vector<std::vector<int>> World::independent_components(FieldId f) const {
    const FieldSpec& spec = fields_[f];
    std::vector<std::vector<int>> out;
    std::vector<int> c(spec.valence, 0);
    while (true) {
        CanonComp cc = canonical_component(f, c);
        if (cc.sign == 1 && cc.comp == c) out.push_back(c);
        int i = spec.valence - 1;
        for (; i >= 0; --i) {
            if (++c[i] < dim_) break;
            c[i] = 0;
        }
        if (i < 0) break;
    }
    return out;
}

VarId World::jet_var(FieldId f, const std::vector<int>& comp, const std::vector<int>& deriv) {
    std::vector<int> d = deriv;
    std::sort(d.begin(), d.end());
    std::lock_guard<std::mutex> lk(mu_);
    auto key = std::make_tuple(f, comp, d);
    auto it = jet_index_.find(key);
    if (it != jet_index_.end()) return it->second;
    if (static_cast<int>(d.size()) > max_order_) max_order_ = static_cast<int>(d.size());
    VarInfo vi;
    vi.kind = VarInfo::Kind::Jet;
    vi.field = f;
    vi.comp = comp;
    vi.deriv = d;
    vars_.push_back(std::move(vi));
    VarId id = static_cast<VarId>(vars_.size() - 1);
    jet_index_.emplace(std::move(key), id);
    return id;
}

VarId World::add_atom(const std::string& name) {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = atom_names_.find(name);
    if (it != atom_names_.end()) return it->second;
    VarInfo vi;
    vi.kind = VarInfo::Kind::Atom;
    vi.atom_name = name;
    vars_.push_back(std::move(vi));
    VarId id = static_cast<VarId>(vars_.size() - 1);
    AtomInfo ai;
    ai.name = name;
    atoms_.emplace(id, std::move(ai));
    atom_names_.emplace(name, id);
    return id;
}

VarId World::add_function_atom(const std::string& name, FieldId of) {
    VarId a = add_atom(name);
    AtomInfo& ai = atoms_.at(a);
    ai.func_of = of;
    ai.depends.insert(of);
    return a;
}

void World::set_atom_weight(VarId atom, FieldId f, Rat64 w) { atoms_.at(atom).weights[f] = w; }

void World::set_atom_depends(VarId atom, FieldId f) { atoms_.at(atom).depends.insert(f); }

void World::set_atom_partial(VarId atom, VarId jetvar, const Expr& e) {
    AtomInfo& ai = atoms_.at(atom);
    ai.partials[jetvar] = std::make_shared<Expr>(e);
    ai.depends.insert(vars_[jetvar].field);
}

void World::set_atom_relation(VarId atom, Poly rhs) {
    std::vector<VarId> vs;
    rhs.collect_vars(vs);
    for (VarId v : vs) assert(!is_relation_atom(v));
    atoms_.at(atom).relation_rhs = std::move(rhs);
}

VarId World::atom_derivative(VarId atom) {
    AtomInfo& ai = atoms_.at(atom);
    if (ai.derivative_atom) return *ai.derivative_atom;
    if (!ai.func_of) throw UnknownAtomDerivative("atom '" + ai.name + "' has no derivative rule");
    VarId d = add_function_atom(ai.name + "p", *ai.func_of);
    atoms_.at(d).func_order = ai.func_order + 1;
    atoms_.at(atom).derivative_atom = d;
    return d;
}

std::optional<VarId> World::find_atom(const std::string& name) const {
    auto it = atom_names_.find(name);
    if (it == atom_names_.end()) return std::nullopt;
    return it->second;
}

std::string World::var_name(VarId v) const {
    const VarInfo& vi = vars_[v];
    if (vi.kind == VarInfo::Kind::Atom) return vi.atom_name;
    std::string s = fields_[vi.field].name;
    if (!vi.comp.empty()) {
        s += "[";
        for (size_t i = 0; i < vi.comp.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(vi.comp[i]);
        }
        s += "]";
    }
    for (int d : vi.deriv) s += "," + std::to_string(d);
    return s;
}

FactorId World::intern_factor(const Poly& p) {
    std::lock_guard<std::mutex> lk(mu_);
    size_t h = p.hash();
    auto& bucket = factor_index_[h];
    for (FactorId id : bucket)
        if (factors_[id] == p) return id;
    factors_.push_back(p);
    FactorId id = static_cast<FactorId>(factors_.size() - 1);
    bucket.push_back(id);
    return id;
}

Poly World::reduce(Poly p) const {
    bool dirty = false;
    for (const Term& t : p.terms) {
        for (uint64_t e : t.mono.v) {
            VarId v = Monomial::var_of(e);
            if (Monomial::exp_of(e) >= 2 && is_relation_atom(v)) {
                dirty = true;
                break;
            }
        }
        if (dirty) break;
    }
    if (!dirty) return p;
    std::vector<Term> out;
    for (Term& t : p.terms) {
        Monomial rest;
        rest.texp = t.mono.texp;
        Poly extra = Poly::constant(Rat(1));
        for (uint64_t e : t.mono.v) {
            VarId v = Monomial::var_of(e);
            uint32_t exp = Monomial::exp_of(e);
            if (exp >= 2 && is_relation_atom(v)) {
                const Poly& rhs = *atoms_.at(v).relation_rhs;
                for (uint32_t k = 0; k < exp / 2; ++k) extra = extra * rhs;
                if (exp % 2) rest.v.push_back(Monomial::pack(v, 1));
            } else {
                rest.v.push_back(e);
            }
        }
        Poly piece = extra.times_term(rest, t.coef);
        for (Term& pt : piece.terms) out.push_back(std::move(pt));
    }
    return Poly::from_terms(std::move(out));
}

} // namespace vb
