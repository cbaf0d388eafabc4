#include "varboot/varcalc.hpp"

#include <algorithm>
#include <deque>

namespace vb {

Expr SourceForm::coeff(FieldId f, const std::vector<int>& comp) const {
    auto it = coeffs.find({f, comp});
    return it == coeffs.end() ? Expr(w) : it->second;
}

void SourceForm::set_coeff(FieldId f, std::vector<int> comp, Expr e) {
    if (std::find(fields.begin(), fields.end(), f) == fields.end()) fields.push_back(f);
    coeffs[{f, std::move(comp)}] = std::move(e);
}

int SourceForm::order() const {
    int o = 0;
    for (const auto& [k, e] : coeffs) o = std::max(o, e.order());
    return o;
}

bool SourceForm::is_zero() const {
    for (const auto& [k, e] : coeffs)
        if (!e.is_zero()) return false;
    return true;
}

bool SourceForm::equals(const SourceForm& o) const {
    std::set<CompKey> keys;
    for (const auto& [k, e] : coeffs) keys.insert(k);
    for (const auto& [k, e] : o.coeffs) keys.insert(k);
    for (const auto& k : keys)
        if (!coeff(k.first, k.second).equals(o.coeff(k.first, k.second))) return false;
    return true;
}

bool HelmholtzTensor::all_zero() const { return H0.empty() && H1.empty() && H2.empty(); }

Expr sym_partial2(const Expr& e, FieldId f, const std::vector<int>& comp, int mu, int nu) {
    World* w = e.world();
    Expr p = e.partial_derivative(w->jet_var(f, comp, {mu, nu}));
    if (mu != nu) p = p.times(Rat(1, 2));
    return p;
}

std::vector<std::vector<int>> derivative_multisets(int m, int size) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    std::function<void(int)> rec = [&](int start) {
        if (static_cast<int>(cur.size()) == size) {
            out.push_back(cur);
            return;
        }
        for (int i = start; i < m; ++i) {
            cur.push_back(i);
            rec(i);
            cur.pop_back();
        }
    };
    rec(0);
    return out;
}

namespace {

// Rational densities blow up when every intermediate of the Euler-Lagrange
// sum is put over a canonical denominator: each quotient-rule step forces a
// full lift product and a cancellation pass. The ledger below keeps every
// intermediate as a plain numerator filed under its own denominator key and
// only combines the classes once per component, with the streamed
// divide_linear_combo doing the single lift-and-cancel.
using DenKey = std::vector<std::pair<FactorId, uint32_t>>;
using Ledger = std::map<DenKey, Poly>;

DenKey key_mul(const DenKey& a, const DenKey& b) {
    DenKey r = a;
    for (const auto& [f, e] : b) {
        auto it = std::lower_bound(r.begin(), r.end(), std::make_pair(f, 0u));
        if (it == r.end() || it->first != f)
            r.insert(it, {f, e});
        else
            it->second += e;
    }
    return r;
}

void ledger_add(World* w, Ledger& led, const DenKey& k, Poly p) {
    p = w->reduce(std::move(p));
    if (p.is_zero()) return;
    auto it = led.find(k);
    if (it == led.end())
        led.emplace(k, std::move(p));
    else {
        it->second = it->second + p;
        if (it->second.is_zero()) led.erase(it);
    }
}

// single-pass polynomial derivation: direct monomial calculus for variables
// whose image is one term, deferred selection products for the rest
Ledger poly_derive(World* w, const Poly& P, const std::function<Expr(VarId)>& dvar) {
    Ledger out;
    std::map<VarId, const Expr*> cache;
    std::deque<Expr> held; // stable addresses
    std::map<VarId, std::vector<Term>> selections; // vars with non-monomial images
    std::vector<Term> direct;
    auto image = [&](VarId v) -> const Expr* {
        auto it = cache.find(v);
        if (it != cache.end()) return it->second;
        held.push_back(dvar(v));
        return cache.emplace(v, &held.back()).first->second;
    };
    for (const Term& t : P.terms) {
        for (size_t i = 0; i < t.mono.v.size(); ++i) {
            VarId v = Monomial::var_of(t.mono.v[i]);
            uint32_t ex = Monomial::exp_of(t.mono.v[i]);
            const Expr* dv = image(v);
            if (dv->is_zero()) continue;
            Monomial base = t.mono;
            if (ex == 1)
                base.v.erase(base.v.begin() + static_cast<long>(i));
            else
                base.v[i] = Monomial::pack(v, ex - 1);
            Term sel{std::move(base), t.coef * static_cast<long>(ex)};
            if (dv->is_polynomial() && dv->num().size() == 1) {
                const Term& s = dv->num().terms[0];
                direct.push_back({sel.mono.times(s.mono), sel.coef * s.coef});
            } else {
                selections[v].push_back(std::move(sel));
            }
        }
    }
    ledger_add(w, out, {}, Poly::from_terms(std::move(direct)));
    for (auto& [v, sel] : selections) {
        const Expr* dv = cache.at(v);
        Poly prod = Poly::from_terms(std::move(sel)) * dv->num();
        ledger_add(w, out, dv->den(), std::move(prod));
    }
    return out;
}

Ledger ledger_derive(World* w, const Ledger& led, const std::function<Expr(VarId)>& dvar) {
    Ledger out;
    for (const auto& [key, Q] : led) {
        for (auto& [k2, P2] : poly_derive(w, Q, dvar))
            ledger_add(w, out, key_mul(key, k2), std::move(P2));
        for (const auto& [f, e] : key) {
            Ledger df = poly_derive(w, w->factor(f), dvar);
            if (df.empty()) continue;
            DenKey lifted = key_mul(key, {{f, 1}});
            for (auto& [k2, P2] : df)
                ledger_add(w, out, key_mul(lifted, k2),
                           (Q * P2).times_rat(Rat(-static_cast<long>(e))));
        }
    }
    return out;
}

Expr ledger_combine(World* w, const Ledger& led) {
    if (led.empty()) return Expr(w);
    DenKey dmax;
    for (const auto& [key, Q] : led) dmax = [&] {
        DenKey r = dmax;
        for (const auto& [f, e] : key) {
            auto it = std::lower_bound(r.begin(), r.end(), std::make_pair(f, 0u));
            if (it == r.end() || it->first != f)
                r.insert(it, {f, e});
            else
                it->second = std::max(it->second, e);
        }
        return r;
    }();
    std::vector<Poly> mults;
    std::vector<ComboPiece> pieces;
    mults.reserve(led.size());
    for (const auto& [key, Q] : led) {
        Poly m = Poly::constant(Rat(1));
        for (const auto& [f, e] : dmax) {
            uint32_t have = 0;
            for (const auto& [g, x] : key)
                if (g == f) have = x;
            for (uint32_t k = have; k < e; ++k) m = m * w->factor(f);
        }
        mults.push_back(std::move(m));
    }
    size_t i = 0;
    for (const auto& [key, Q] : led) pieces.push_back({&Q, &mults[i++]});
    // combine and cancel in one streamed pass where possible
    Poly num;
    DenKey den = dmax;
    bool combined = false;
    for (auto& [f, e] : den) {
        if (e == 0) continue;
        if (auto q = divide_linear_combo(pieces, w->factor(f))) {
            num = std::move(*q);
            --e;
            combined = true;
            break;
        }
    }
    if (!combined) num = combine_linear(pieces);
    Expr res = Expr::from_poly(w, std::move(num));
    for (const auto& [f, e] : den) {
        if (e == 0) continue;
        Expr inv = Expr::constant(w, Rat(1)) / Expr::from_poly(w, w->factor(f));
        res = res * inv.pow(static_cast<long>(e));
    }
    return res;
}

std::function<Expr(VarId)> partial_rule(World* w, VarId target) {
    return [w, target](VarId v) -> Expr {
        if (v == target) return Expr::constant(w, Rat(1));
        if (!w->is_atom(v)) return Expr(w);
        const AtomInfo& ai = w->atom(v);
        auto it = ai.partials.find(target);
        if (it != ai.partials.end()) return *it->second;
        if (!ai.partials.empty()) return Expr(w);
        const VarInfo& ti = w->var(target);
        if (ai.func_of && ti.kind == VarInfo::Kind::Jet && ti.field == *ai.func_of &&
            ti.deriv.empty())
            return Expr::variable(w, w->atom_derivative(v));
        return Expr(w);
    };
}

std::function<Expr(VarId)> total_rule(World* w, int mu) {
    return [w, mu](VarId v) -> Expr {
        const VarInfo& vi = w->var(v);
        if (vi.kind == VarInfo::Kind::Jet) {
            std::vector<int> d = vi.deriv;
            d.push_back(mu);
            return Expr::variable(w, w->jet_var(vi.field, vi.comp, d));
        }
        const AtomInfo& ai = w->atom(v);
        if (!ai.partials.empty()) {
            Expr sum(w);
            for (const auto& [pv, pe] : ai.partials) {
                const VarInfo& pvi = w->var(pv);
                std::vector<int> d = pvi.deriv;
                d.push_back(mu);
                sum += *pe * Expr::variable(w, w->jet_var(pvi.field, pvi.comp, d));
            }
            return sum;
        }
        if (ai.func_of) {
            VarId da = w->atom_derivative(v);
            return Expr::variable(w, da) * Expr::variable(w, w->jet_var(*ai.func_of, {}, {mu}));
        }
        if (ai.depends.empty()) return Expr(w);
        throw UnknownAtomDerivative("no derivative rule for atom '" + ai.name + "'");
    };
}

} // namespace

SourceForm euler_lagrange(const LagrangianDensity& L, FieldId f) {
    World* w = L.w;
    SourceForm E;
    E.w = w;
    E.fields.push_back(f);
    int ord = std::max(L.density.order_of_field(f), 0);
    bool fast = !L.density.den().empty();
    Ledger base;
    if (fast) base.emplace(L.density.den(), L.density.num());
    for (const auto& comp : w->independent_components(f)) {
        if (fast) {
            Ledger total;
            for (int k = 0; k <= ord; ++k) {
                for (const auto& J : derivative_multisets(w->dim(), k)) {
                    Ledger p = ledger_derive(w, base, partial_rule(w, w->jet_var(f, comp, J)));
                    for (int mu : J) p = ledger_derive(w, p, total_rule(w, mu));
                    for (auto& [key, Q] : p)
                        ledger_add(w, total, key, k % 2 ? -std::move(Q) : std::move(Q));
                }
            }
            E.coeffs[{f, comp}] = ledger_combine(w, total);
            continue;
        }
        Expr sum(w);
        for (int k = 0; k <= ord; ++k) {
            for (const auto& J : derivative_multisets(w->dim(), k)) {
                Expr p = L.density.partial_derivative(w->jet_var(f, comp, J));
                if (p.is_zero()) continue;
                for (int mu : J) p = p.total_derivative(mu);
                sum += (k % 2 ? p.times(Rat(-1)) : p);
            }
        }
        E.coeffs[{f, comp}] = std::move(sum);
    }
    return E;
}

SourceForm euler_lagrange(const LagrangianDensity& L, const std::vector<FieldId>& fs) {
    SourceForm E;
    E.w = L.w;
    for (FieldId f : fs) {
        SourceForm part = euler_lagrange(L, f);
        E.fields.push_back(f);
        for (auto& [k, e] : part.coeffs) E.coeffs[k] = std::move(e);
    }
    return E;
}

HelmholtzTensor helmholtz(const SourceForm& E) {
    World* w = E.w;
    if (E.order() > 2) throw OrderTooHigh("Helmholtz conditions are implemented for order <= 2");
    int m = w->dim();
    HelmholtzTensor H;
    H.w = w;
    for (FieldId f : E.fields)
        for (const auto& comp : w->independent_components(f)) H.comps.push_back({f, comp});
    size_t n = H.comps.size();

    // partial tables: P0[i][j], P1[i][j][mu], P2[i][j][mu][nu] (all-pairs convention)
    auto Ei = [&](size_t i) { return E.coeff(H.comps[i].first, H.comps[i].second); };
    std::vector<std::vector<Expr>> P0(n, std::vector<Expr>(n));
    std::vector<std::vector<std::vector<Expr>>> P1(
        n, std::vector<std::vector<Expr>>(n, std::vector<Expr>(static_cast<size_t>(m))));
    std::vector<std::vector<std::vector<std::vector<Expr>>>> P2(
        n, std::vector<std::vector<std::vector<Expr>>>(
               n, std::vector<std::vector<Expr>>(static_cast<size_t>(m),
                                                 std::vector<Expr>(static_cast<size_t>(m)))));
    for (size_t i = 0; i < n; ++i) {
        Expr e = Ei(i);
        for (size_t j = 0; j < n; ++j) {
            const auto& [f, comp] = H.comps[j];
            P0[i][j] = e.partial_derivative(w->jet_var(f, comp, {}));
            for (int mu = 0; mu < m; ++mu) {
                P1[i][j][mu] = e.partial_derivative(w->jet_var(f, comp, {mu}));
                for (int nu = mu; nu < m; ++nu) {
                    Expr p = sym_partial2(e, f, comp, mu, nu);
                    P2[i][j][mu][nu] = p;
                    if (nu != mu) P2[i][j][nu][mu] = p;
                }
            }
        }
    }
    // The derivative sums run through the denominator ledger so rational
    // coefficients (curvature densities) never pay per-step lift products;
    // each output entry is combined exactly once.
    auto add_expr = [&](Ledger& led, const Expr& e, const Rat& c) {
        if (e.is_zero()) return;
        ledger_add(w, led, e.den(), e.num().times_rat(c));
    };
    auto derive_into = [&](Ledger& led, const Ledger& src, int mu, const Rat& c) {
        for (auto& [k2, q] : ledger_derive(w, src, total_rule(w, mu)))
            ledger_add(w, led, k2, q.times_rat(c));
    };
    for (size_t a = 0; a < n; ++a) {
        for (size_t b = 0; b < n; ++b) {
            for (int mu = 0; mu < m; ++mu)
                for (int nu = 0; nu < m; ++nu) {
                    Expr h2 = P2[a][b][mu][nu] - P2[b][a][mu][nu];
                    if (!h2.is_zero()) H.H2[{a, b, mu, nu}] = std::move(h2);
                }
            // l1[mu] = sum_nu d_nu P2[b][a][mu][nu], kept as a ledger
            std::vector<Ledger> l1(static_cast<size_t>(m));
            Ledger lh0;
            add_expr(lh0, P0[a][b], Rat(1));
            add_expr(lh0, P0[b][a], Rat(-1));
            for (int mu = 0; mu < m; ++mu) {
                for (int nu = 0; nu < m; ++nu) {
                    const Expr& p = P2[b][a][mu][nu];
                    if (p.is_zero()) continue;
                    Ledger basel;
                    basel.emplace(p.den(), p.num());
                    derive_into(l1[static_cast<size_t>(mu)], basel, nu, Rat(1));
                }
                Ledger lh1;
                add_expr(lh1, P1[a][b][mu], Rat(1));
                add_expr(lh1, P1[b][a][mu], Rat(1));
                for (const auto& [k2, q] : l1[static_cast<size_t>(mu)])
                    ledger_add(w, lh1, k2, q.times_rat(Rat(-2)));
                Expr h1 = ledger_combine(w, lh1);
                if (!h1.is_zero()) H.H1[{a, b, mu}] = std::move(h1);

                const Expr& p1 = P1[b][a][mu];
                if (!p1.is_zero()) {
                    Ledger basel;
                    basel.emplace(p1.den(), p1.num());
                    derive_into(lh0, basel, mu, Rat(1));
                }
                derive_into(lh0, l1[static_cast<size_t>(mu)], mu, Rat(-1));
            }
            Expr h0 = ledger_combine(w, lh0);
            if (!h0.is_zero()) H.H0[{a, b}] = std::move(h0);
        }
    }
    return H;
}

bool is_variational(const SourceForm& E) { return helmholtz(E).all_zero(); }

LagrangianDensity vainberg_tonti(const SourceForm& E, const std::set<FieldId>& vary) {
    World* w = E.w;
    Expr L(w);
    for (const auto& [key, e] : E.coeffs) {
        if (!vary.count(key.first)) continue;
        Expr integ = e.scale_fields(vary).integrate_homotopy();
        L += Expr::variable(w, w->jet_var(key.first, key.second, {})) * integ;
    }
    return {w, std::move(L)};
}

CompletionResult variational_completion(const SourceForm& E, const std::set<FieldId>& vary) {
    World* w = E.w;
    CompletionResult r;
    r.lagrangian = vainberg_tonti(E, vary);
    std::vector<FieldId> vf;
    for (FieldId f : E.fields)
        if (vary.count(f)) vf.push_back(f);
    r.completed = euler_lagrange(r.lagrangian, vf);
    // The correction identity cross-check needs the full Helmholtz table,
    // whose cost is roughly one Euler-Lagrange run per equation. Verify it
    // whenever that is affordable; identity_checked reports honestly.
    size_t work = 0;
    for (const auto& [k, e] : E.coeffs)
        if (vary.count(k.first)) work += e.num().size();
    if (E.order() <= 2 && work <= 20000) {
        // delta L / delta y^B == E_B - int [y^A H_BA + y^A_mu H^mu_BA
        //                                 + y^A_{mu nu} H^{mu nu}_BA] o chi_t dt
        SourceForm Ev;
        Ev.w = w;
        Ev.fields = vf;
        for (const auto& [k, e] : E.coeffs)
            if (vary.count(k.first)) Ev.coeffs[k] = e;
        HelmholtzTensor H = helmholtz(Ev);
        int m = w->dim();
        for (size_t b = 0; b < H.comps.size(); ++b) {
            Expr corr(w);
            for (size_t a = 0; a < H.comps.size(); ++a) {
                const auto& [f, comp] = H.comps[a];
                auto h0 = H.H0.find({b, a});
                if (h0 != H.H0.end())
                    corr += Expr::variable(w, w->jet_var(f, comp, {})) * h0->second;
                for (int mu = 0; mu < m; ++mu) {
                    auto h1 = H.H1.find({b, a, mu});
                    if (h1 != H.H1.end())
                        corr += Expr::variable(w, w->jet_var(f, comp, {mu})) * h1->second;
                    for (int nu = 0; nu < m; ++nu) {
                        auto h2 = H.H2.find({b, a, mu, nu});
                        if (h2 != H.H2.end())
                            corr += Expr::variable(w, w->jet_var(f, comp, {mu, nu})) * h2->second;
                    }
                }
            }
            Expr expect = Ev.coeff(H.comps[b].first, H.comps[b].second) -
                          corr.scale_fields(vary).integrate_homotopy();
            Expr got = r.completed.coeff(H.comps[b].first, H.comps[b].second);
            if (!got.equals(expect))
                throw MathError("variational completion failed its internal correction identity");
        }
        r.identity_checked = true;
    }
    return r;
}

BootstrapResult bootstrap(const SourceForm& E, const std::set<FieldId>& vary,
                          const std::set<FieldId>& passive) {
    BootstrapResult r;
    r.lagrangian = vainberg_tonti(E, vary);
    std::vector<FieldId> vf(vary.begin(), vary.end());
    std::vector<FieldId> pf(passive.begin(), passive.end());
    r.completed_vary_eqs = euler_lagrange(r.lagrangian, vf);
    r.passive_eqs = euler_lagrange(r.lagrangian, pf);
    r.passive_up_to_lambda2 = true;
    return r;
}

bool is_trivial(const LagrangianDensity& L, const std::vector<FieldId>& fields) {
    for (FieldId f : fields)
        if (!euler_lagrange(L, f).is_zero()) return false;
    return true;
}

} // namespace vb
