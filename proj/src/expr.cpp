#include "varboot/expr.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace vb {

ExtVal ExtVal::rational(const Rat& r) {
    ExtVal v;
    if (r != 0) v.c[0] = r;
    return v;
}

bool ExtVal::is_rational() const {
    return c.empty() || (c.size() == 1 && c.begin()->first == 0);
}

Rat ExtVal::rat() const {
    assert(is_rational());
    return c.empty() ? Rat(0) : c.begin()->second;
}

// ---------------------------------------------------------------- basics

Expr Expr::constant(World* w, const Rat& c) {
    Expr e(w);
    e.num_ = Poly::constant(c);
    return e;
}

Expr Expr::variable(World* w, VarId v) {
    Expr e(w);
    e.num_ = Poly::variable(v);
    return e;
}

Expr Expr::from_poly(World* w, Poly p) {
    Expr e(w);
    e.num_ = w->reduce(std::move(p));
    return e;
}

Poly Expr::den_poly() const {
    Poly d = Poly::constant(Rat(1));
    for (const auto& [f, e] : den_)
        for (uint32_t k = 0; k < e; ++k) d = d * w_->factor(f);
    return d;
}

static void merge_den(std::vector<std::pair<FactorId, uint32_t>>& into,
                      const std::vector<std::pair<FactorId, uint32_t>>& other) {
    std::vector<std::pair<FactorId, uint32_t>> out;
    out.reserve(into.size() + other.size());
    size_t i = 0, j = 0;
    while (i < into.size() && j < other.size()) {
        if (into[i].first < other[j].first)
            out.push_back(into[i++]);
        else if (other[j].first < into[i].first)
            out.push_back(other[j++]);
        else {
            out.emplace_back(into[i].first, into[i].second + other[j].second);
            ++i, ++j;
        }
    }
    for (; i < into.size(); ++i) out.push_back(into[i]);
    for (; j < other.size(); ++j) out.push_back(other[j]);
    into = std::move(out);
}

void Expr::push_den_poly(Poly p, uint32_t mult) {
    if (mult == 0) return;
    if (p.is_zero()) throw MathError("division by zero");
    // strip the minimal t exponent into the numerator
    Rat64 tmin = p.terms[0].mono.texp;
    for (const Term& t : p.terms)
        if (t.mono.texp < tmin) tmin = t.mono.texp;
    if (!tmin.is_zero()) {
        p = p.shift_texp(-tmin);
        num_ = num_.shift_texp(-(Rat64(static_cast<int64_t>(mult)) * tmin));
    }
    // strip monomial content into separate single-variable factors
    Monomial content = p.terms[0].mono;
    content.texp = Rat64(0);
    for (size_t i = 1; i < p.terms.size() && !content.v.empty(); ++i) {
        const Monomial& m = p.terms[i].mono;
        decltype(content.v) g;
        size_t a = 0, b = 0;
        while (a < content.v.size() && b < m.v.size()) {
            VarId va = Monomial::var_of(content.v[a]), vb = Monomial::var_of(m.v[b]);
            if (va < vb)
                ++a;
            else if (vb < va)
                ++b;
            else {
                g.push_back(Monomial::pack(
                    va, std::min(Monomial::exp_of(content.v[a]), Monomial::exp_of(m.v[b]))));
                ++a, ++b;
            }
        }
        content.v = std::move(g);
    }
    std::vector<std::pair<FactorId, uint32_t>> add;
    if (!content.v.empty()) {
        Monomial cm = content;
        for (uint64_t e : content.v) {
            VarId v = Monomial::var_of(e);
            uint32_t ex = Monomial::exp_of(e);
            add.emplace_back(w_->intern_factor(Poly::variable(v)), ex * mult);
        }
        auto q = p.divided_by(Poly::monomial(cm, Rat(1)));
        p = std::move(*q);
    }
    if (p.is_constant()) {
        Rat c = p.is_zero() ? Rat(0) : p.terms[0].coef;
        assert(c != 0);
        Rat inv = Rat(1) / c;
        Rat f(1);
        for (uint32_t k = 0; k < mult; ++k) f *= inv;
        num_ = num_.times_rat(f);
    } else {
        const Rat& lc = p.lead().coef;
        if (lc != 1) {
            Rat inv = Rat(1) / lc;
            p = p.times_rat(inv);
            Rat f(1);
            for (uint32_t k = 0; k < mult; ++k) f *= inv;
            num_ = num_.times_rat(f);
        }
        // peel off factors already known to the world, so a product of known
        // factors (e.g. det*det) splits instead of interning as a new opaque
        // irreducible; monic/monic quotients stay monic
        size_t known = w_->factor_count();
        for (FactorId f = 0; f < known && !p.is_constant(); ++f) {
            const Poly& fp = w_->factor(f);
            if (fp.size() < 2 || fp.size() > p.size()) continue;
            uint32_t cnt = 0;
            while (!p.is_constant()) {
                auto q = p.divided_by(fp);
                if (!q) break;
                p = std::move(*q);
                ++cnt;
            }
            if (cnt) add.emplace_back(f, cnt * mult);
        }
        if (!p.is_constant()) add.emplace_back(w_->intern_factor(p), mult);
    }
    std::sort(add.begin(), add.end());
    // duplicate factor ids inside `add` (content var equal to interned var twice) can't occur
    merge_den(den_, add);
}

void Expr::cancel() {
    if (num_.is_zero()) {
        den_.clear();
        return;
    }
    for (size_t i = 0; i < den_.size();) {
        const Poly& f = w_->factor(den_[i].first);
        while (den_[i].second > 0) {
            auto q = num_.divided_by(f);
            if (!q) break;
            num_ = std::move(*q);
            --den_[i].second;
        }
        if (den_[i].second == 0)
            den_.erase(den_.begin() + static_cast<long>(i));
        else
            ++i;
    }
}

void Expr::align(const Expr& a, const Expr& b, Poly& na, Poly& nb,
                 std::vector<std::pair<FactorId, uint32_t>>& den) {
    den = a.den_;
    for (const auto& [f, e] : b.den_) {
        auto it = std::lower_bound(den.begin(), den.end(), std::make_pair(f, 0u));
        if (it == den.end() || it->first != f)
            den.insert(it, {f, e});
        else
            it->second = std::max(it->second, e);
    }
    na = a.num_;
    nb = b.num_;
    for (const auto& [f, e] : den) {
        uint32_t ea = 0, eb = 0;
        for (const auto& [g, x] : a.den_)
            if (g == f) ea = x;
        for (const auto& [g, x] : b.den_)
            if (g == f) eb = x;
        const Poly& fp = a.w_->factor(f);
        for (uint32_t k = ea; k < e; ++k) na = na * fp;
        for (uint32_t k = eb; k < e; ++k) nb = nb * fp;
    }
}

// ------------------------------------------------------------- arithmetic

Expr operator+(const Expr& a, const Expr& b) {
    if (!a.w_) return b;
    if (!b.w_) return a;
    assert(a.w_ == b.w_);
    if (a.is_zero() && a.den_.empty()) return b;
    if (b.is_zero() && b.den_.empty()) return a;
    Expr r(a.w_);
    Poly na, nb;
    Expr::align(a, b, na, nb, r.den_);
    r.num_ = na + nb;
    r.cancel();
    return r;
}

Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }

Expr Expr::operator-() const {
    Expr r = *this;
    r.num_ = -r.num_;
    return r;
}

Expr operator*(const Expr& a, const Expr& b) {
    if (!a.w_) return a;
    if (!b.w_) return b;
    assert(a.w_ == b.w_);
    Expr r(a.w_);
    if (a.is_zero() || b.is_zero()) return r;
    r.num_ = a.w_->reduce(a.num_ * b.num_);
    r.den_ = a.den_;
    merge_den(r.den_, b.den_);
    r.cancel();
    return r;
}

Expr Expr::inverse(const Expr& b) {
    if (b.is_zero()) throw MathError("division by zero");
    World* w = b.w_;
    Poly N = b.num_; // future denominator; relation atoms get rationalized away
    Poly M = Poly::constant(Rat(1));
    while (true) {
        std::vector<VarId> vs;
        N.collect_vars(vs);
        VarId rel = 0;
        bool found = false;
        for (VarId v : vs)
            if (w->is_relation_atom(v)) {
                rel = v;
                found = true;
                break;
            }
        if (!found) break;
        Poly A, B; // N = A + B*rel
        {
            std::vector<Term> at, bt;
            Monomial relm;
            relm.v.push_back(Monomial::pack(rel, 1));
            for (const Term& t : N.terms) {
                if (t.mono.exponent(rel) > 0) {
                    auto m = t.mono.divided_by(relm);
                    bt.push_back({*m, t.coef});
                } else {
                    at.push_back(t);
                }
            }
            A = Poly::from_terms(std::move(at));
            B = Poly::from_terms(std::move(bt));
        }
        Poly conj = A - B * Poly::variable(rel);
        M = M * conj;
        const Poly& rhs = *w->atom(rel).relation_rhs;
        N = w->reduce(A * A - rhs * (B * B));
        if (N.is_zero()) throw MathError("division by zero (conjugate vanished)");
    }
    for (const auto& [f, e] : b.den_)
        for (uint32_t k = 0; k < e; ++k) M = M * w->factor(f);
    Expr r(w);
    r.num_ = w->reduce(std::move(M));
    r.push_den_poly(std::move(N));
    r.cancel();
    return r;
}

Expr operator/(const Expr& a, const Expr& b) { return a * Expr::inverse(b); }

Expr Expr::pow(long e) const {
    if (e < 0) return inverse(*this).pow(-e);
    Expr r = Expr::constant(w_, Rat(1));
    Expr base = *this;
    unsigned long n = static_cast<unsigned long>(e);
    while (n) {
        if (n & 1) r = r * base;
        base = (n >>= 1) ? base * base : base;
    }
    return r;
}

Expr Expr::times(const Rat& c) const {
    Expr r = *this;
    r.num_ = r.num_.times_rat(c);
    if (r.num_.is_zero()) r.den_.clear();
    return r;
}

// ------------------------------------------------------------ inspection

std::vector<VarId> Expr::vars() const {
    std::vector<VarId> vs;
    num_.collect_vars(vs);
    for (const auto& [f, e] : den_) w_->factor(f).collect_vars(vs);
    std::sort(vs.begin(), vs.end());
    vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
    return vs;
}

int Expr::order() const {
    int o = 0;
    for (VarId v : vars()) {
        if (w_->is_atom(v)) {
            for (const auto& [pv, pe] : w_->atom(v).partials) o = std::max(o, w_->jet_order(pv));
        } else {
            o = std::max(o, w_->jet_order(v));
        }
    }
    return o;
}

int Expr::order_of_field(FieldId f) const {
    int o = -1;
    for (VarId v : vars()) {
        if (w_->is_atom(v)) {
            const AtomInfo& ai = w_->atom(v);
            if (!ai.depends.count(f)) continue;
            o = std::max(o, 0);
            for (const auto& [pv, pe] : ai.partials)
                if (w_->var(pv).field == f) o = std::max(o, w_->jet_order(pv));
        } else if (w_->var(v).field == f) {
            o = std::max(o, w_->jet_order(v));
        }
    }
    return o;
}

bool Expr::depends_on_field(FieldId f) const {
    for (VarId v : vars()) {
        if (w_->is_atom(v)) {
            if (w_->atom(v).depends.count(f)) return true;
        } else if (w_->var(v).field == f) {
            return true;
        }
    }
    return false;
}

bool Expr::has_t() const {
    if (num_.has_texp()) return true;
    for (const auto& [f, e] : den_)
        if (w_->factor(f).has_texp()) return true;
    return false;
}

// ------------------------------------------------------------ derivation

Expr Expr::derive(const std::function<Expr(VarId)>& dvar) const {
    World* w = w_;
    auto d_poly = [&](const Poly& P) -> Expr {
        std::vector<VarId> vs;
        P.collect_vars(vs);
        std::vector<Term> acc;
        Expr extra(w);
        for (VarId v : vs) {
            Expr dv = dvar(v);
            if (dv.is_zero()) continue;
            Monomial vm;
            vm.v.push_back(Monomial::pack(v, 1));
            std::vector<Term> pt;
            for (const Term& t : P.terms) {
                uint32_t e = t.mono.exponent(v);
                if (!e) continue;
                auto m = t.mono.divided_by(vm);
                pt.push_back({*m, t.coef * static_cast<long>(e)});
            }
            Poly dP = Poly::from_terms(std::move(pt));
            if (dP.is_zero()) continue;
            if (dv.is_polynomial() && dv.num_.size() == 1) {
                const Term& s = dv.num_.terms[0];
                Poly prod = dP.times_term(s.mono, s.coef);
                for (Term& t : prod.terms) acc.push_back(std::move(t));
            } else {
                extra += Expr::from_poly(w, std::move(dP)) * dv;
            }
        }
        return Expr::from_poly(w, Poly::from_terms(std::move(acc))) + extra;
    };
    Expr dN = d_poly(num_);
    if (den_.empty()) return dN;
    Expr invD(w);
    invD.num_ = Poly::constant(Rat(1));
    invD.den_ = den_;
    Expr result = dN * invD;
    Expr base(w);
    base.num_ = num_;
    base.den_ = den_;
    for (const auto& [f, e] : den_) {
        Expr df = d_poly(w->factor(f));
        if (df.is_zero()) continue;
        Expr invf(w);
        invf.num_ = Poly::constant(Rat(static_cast<long>(e)));
        invf.den_ = {{f, 1}};
        result -= base * invf * df;
    }
    return result;
}

Expr Expr::total_derivative(int mu) const {
    World* w = w_;
    return derive([w, mu](VarId v) -> Expr {
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
    });
}

Expr Expr::partial_derivative(VarId target) const {
    World* w = w_;
    return derive([w, target](VarId v) -> Expr {
        if (v == target) return Expr::constant(w, Rat(1));
        if (!w->is_atom(v)) return Expr(w);
        const AtomInfo& ai = w->atom(v);
        auto it = ai.partials.find(target);
        if (it != ai.partials.end()) return *it->second;
        if (!ai.partials.empty()) return Expr(w); // table lists all nonzero partials
        const VarInfo& ti = w->var(target);
        if (ai.func_of) {
            if (ti.kind == VarInfo::Kind::Jet && ti.field == *ai.func_of && ti.deriv.empty())
                return Expr::variable(w, w->atom_derivative(v));
            return Expr(w);
        }
        if (ti.kind == VarInfo::Kind::Jet && ai.depends.count(ti.field))
            throw UnknownAtomDerivative("no derivative rule for atom '" + ai.name + "'");
        return Expr(w);
    });
}

// ------------------------------------------------------- homotopy scaling

Expr Expr::scale_fields(const std::set<FieldId>& fields) const {
    World* w = w_;
    auto scale_poly = [&](const Poly& P) -> Poly {
        std::vector<Term> ts(P.terms.begin(), P.terms.end());
        for (Term& t : ts) {
            Rat64 wsum(0);
            for (uint64_t e : t.mono.v) {
                VarId v = Monomial::var_of(e);
                int64_t ex = Monomial::exp_of(e);
                const VarInfo& vi = w->var(v);
                if (vi.kind == VarInfo::Kind::Jet) {
                    if (fields.count(vi.field)) wsum = wsum + Rat64(ex);
                } else {
                    const AtomInfo& ai = w->atom(v);
                    for (FieldId f : ai.depends) {
                        if (!fields.count(f)) continue;
                        auto it = ai.weights.find(f);
                        if (it == ai.weights.end())
                            throw MissingWeight("atom '" + ai.name +
                                                "' has no scaling weight for field '" +
                                                w->field(f).name + "'");
                        wsum = wsum + ex * it->second;
                    }
                }
            }
            t.mono.texp = t.mono.texp + wsum;
        }
        return Poly::from_terms(std::move(ts));
    };
    Expr r(w);
    r.num_ = scale_poly(num_);
    for (const auto& [f, e] : den_) r.push_den_poly(scale_poly(w->factor(f)), e);
    r.cancel();
    return r;
}

Expr Expr::integrate_homotopy() const {
    for (const auto& [f, e] : den_)
        if (w_->factor(f).has_texp())
            throw NonLaurentIntegrand("denominator depends on the homotopy parameter");
    std::vector<Term> ts;
    ts.reserve(num_.terms.size());
    for (const Term& t : num_.terms) {
        Rat64 wexp = t.mono.texp;
        if (wexp <= Rat64(-1))
            throw DivergentHomotopy("t exponent " + wexp.str() +
                                    " makes the homotopy integral divergent");
        Rat64 w1 = wexp + Rat64(1);
        Rat f = Rat(static_cast<long>(w1.den)) / Rat(static_cast<long>(w1.num));
        Monomial m = t.mono;
        m.texp = Rat64(0);
        ts.push_back({std::move(m), t.coef * f});
    }
    Expr r(w_);
    r.num_ = Poly::from_terms(std::move(ts));
    r.den_ = den_;
    r.cancel();
    return r;
}

Expr Expr::at_t_one() const {
    auto strip = [](const Poly& P) {
        std::vector<Term> ts(P.terms.begin(), P.terms.end());
        for (Term& t : ts) t.mono.texp = Rat64(0);
        return Poly::from_terms(std::move(ts));
    };
    Expr r(w_);
    r.num_ = strip(num_);
    for (const auto& [f, e] : den_) r.push_den_poly(strip(w_->factor(f)), e);
    r.cancel();
    return r;
}

// ----------------------------------------------------------- substitution

Expr Expr::substitute(const std::map<VarId, Expr>& sub) const {
    auto sub_poly = [&](const Poly& P) -> Expr {
        std::vector<Term> keep;
        Expr out(w_);
        for (const Term& t : P.terms) {
            Monomial m;
            m.texp = t.mono.texp;
            Expr prod = Expr::constant(w_, t.coef);
            bool any = false;
            for (uint64_t e : t.mono.v) {
                VarId v = Monomial::var_of(e);
                auto it = sub.find(v);
                if (it == sub.end()) {
                    m.v.push_back(e);
                } else {
                    any = true;
                    prod *= it->second.pow(static_cast<long>(Monomial::exp_of(e)));
                }
            }
            if (!any)
                keep.push_back(t);
            else
                out += prod * Expr::from_poly(w_, Poly::monomial(m, Rat(1)));
        }
        return out + Expr::from_poly(w_, Poly::from_terms(std::move(keep)));
    };
    Expr r = sub_poly(num_);
    for (const auto& [f, e] : den_) {
        Expr fs = sub_poly(w_->factor(f));
        for (uint32_t k = 0; k < e; ++k) r = r / fs;
    }
    return r;
}

// ------------------------------------------------------------- evaluation

static Rat rat_pow(const Rat& b, uint32_t e) {
    Rat r(1);
    for (uint32_t k = 0; k < e; ++k) r *= b;
    return r;
}

ExtVal Expr::eval(const std::map<VarId, Rat>& point) const {
    auto plain_value = [&](VarId v) -> Rat {
        auto it = point.find(v);
        if (it == point.end())
            throw MathError("no value for variable '" + w_->var_name(v) +
                            "' at the evaluation point");
        return it->second;
    };
    auto eval_plain_poly = [&](const Poly& P) -> Rat {
        Rat r(0);
        for (const Term& t : P.terms) {
            if (!t.mono.texp.is_zero())
                throw MathError("expression still depends on the homotopy parameter");
            Rat c = t.coef;
            for (uint64_t e : t.mono.v)
                c *= rat_pow(plain_value(Monomial::var_of(e)), Monomial::exp_of(e));
            r += c;
        }
        return r;
    };
    std::map<VarId, uint32_t> bit;
    std::map<uint32_t, Rat> discs;
    for (VarId v : vars())
        if (w_->is_relation_atom(v) && !bit.count(v)) {
            uint32_t b = static_cast<uint32_t>(bit.size());
            bit[v] = b;
            discs[b] = eval_plain_poly(*w_->atom(v).relation_rhs);
        }
    std::map<uint32_t, Rat> acc;
    for (const Term& t : num_.terms) {
        if (!t.mono.texp.is_zero())
            throw MathError("expression still depends on the homotopy parameter");
        Rat c = t.coef;
        uint32_t mask = 0;
        for (uint64_t e : t.mono.v) {
            VarId v = Monomial::var_of(e);
            uint32_t ex = Monomial::exp_of(e);
            if (w_->is_relation_atom(v)) {
                assert(ex == 1);
                uint32_t b = bit.at(v);
                if (discs.at(b) == 0) {
                    c = 0;
                    break;
                }
                mask |= 1u << b;
            } else {
                c *= rat_pow(plain_value(v), ex);
            }
        }
        if (c != 0) acc[mask] += c;
    }
    Rat dv(1);
    for (const auto& [f, e] : den_) dv *= rat_pow(eval_plain_poly(w_->factor(f)), e);
    if (dv == 0) throw MathError("denominator vanishes at the evaluation point");
    ExtVal r;
    for (auto& [m, c] : acc) {
        c /= dv;
        if (c != 0) r.c[m] = std::move(c);
    }
    for (const auto& [m, c] : r.c)
        for (const auto& [b, d] : discs)
            if (m & (1u << b)) r.disc[b] = d;
    return r;
}

// --------------------------------------------------------------- printing

static void poly_str(const World* w, const Poly& P, std::ostringstream& os) {
    if (P.is_zero()) {
        os << "0";
        return;
    }
    bool first = true;
    for (const Term& t : P.terms) {
        Rat c = t.coef;
        if (first) {
            if (c < 0) {
                os << "-";
                c = -c;
            }
        } else {
            if (c < 0) {
                os << " - ";
                c = -c;
            } else {
                os << " + ";
            }
        }
        first = false;
        bool printed = false;
        if (c != 1 || t.mono.is_one()) {
            os << c.get_str();
            printed = true;
        }
        if (!t.mono.texp.is_zero()) {
            if (printed) os << "*";
            os << "t^" << t.mono.texp.str();
            printed = true;
        }
        for (uint64_t e : t.mono.v) {
            if (printed) os << "*";
            os << w->var_name(Monomial::var_of(e));
            if (Monomial::exp_of(e) > 1) os << "^" << Monomial::exp_of(e);
            printed = true;
        }
    }
}

std::string Expr::str() const {
    std::ostringstream os;
    if (!w_) return "0";
    if (den_.empty()) {
        poly_str(w_, num_, os);
        return os.str();
    }
    os << "(";
    poly_str(w_, num_, os);
    os << ") / (";
    bool first = true;
    for (const auto& [f, e] : den_) {
        if (!first) os << " * ";
        first = false;
        os << "(";
        poly_str(w_, w_->factor(f), os);
        os << ")";
        if (e > 1) os << "^" << e;
    }
    os << ")";
    return os.str();
}

} // namespace vb
