#include "varboot/invariant_enum.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <functional>
#include <map>
#include <set>

namespace vb {

std::vector<DegreeProfile> admissible_profiles() {
    std::vector<DegreeProfile> out;
    for (int d3 = 0; d3 <= 1; ++d3)
        for (int d2 = 0; d2 <= 1; ++d2)
            for (int d1 = 0; d1 <= 2; ++d1)
                for (int d0 = 0; d0 <= 4; ++d0) {
                    DegreeProfile p{d0, d1, d2, d3};
                    if (p.admissible()) out.push_back(p);
                }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::pair<int, int>> dh_filtered_profiles() {
    return {{4, 0}, {2, 1}, {0, 2}};
}

int ContractionPattern::rank() const {
    int k = 0;
    for (const PatternFactor& f : factors)
        for (int b = 0; b < 2; ++b)
            if (f.slot[b] == kWedgeSlot) ++k;
    return k;
}

bool ContractionPattern::connected() const {
    int n = static_cast<int>(factors.size());
    if (n <= 1) return true;
    std::vector<int> root(n);
    for (int i = 0; i < n; ++i) root[i] = i;
    std::function<int(int)> find = [&](int x) { return root[x] == x ? x : root[x] = find(root[x]); };
    for (int i = 0; i < n; ++i)
        for (int b = 0; b < 2; ++b)
            if (factors[i].slot[b] >= 0) root[find(i)] = find(factors[i].slot[b]);
    for (int i = 1; i < n; ++i)
        if (find(i) != find(0)) return false;
    return true;
}

std::vector<int> ContractionPattern::shape() const {
    std::vector<int> s;
    for (const PatternFactor& f : factors)
        s.push_back((f.slot[0] == kWedgeSlot ? 1 : 0) + (f.slot[1] == kWedgeSlot ? 1 : 0));
    std::sort(s.rbegin(), s.rend());
    return s;
}

std::pair<std::vector<int>, int> ContractionPattern::canonical() const {
    int n = static_cast<int>(factors.size());
    // wedge label of each (factor, slot) position in lex order
    std::vector<std::array<int, 2>> lab(n, {-1, -1});
    int next = 0;
    for (int i = 0; i < n; ++i)
        for (int b = 0; b < 2; ++b)
            if (factors[i].slot[b] == kWedgeSlot) lab[i][b] = next++;

    std::vector<int> best;
    int best_sign = 1;
    bool zero = false;

    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::vector<int> inv(n), enc, labels;
    do {
        for (int j = 0; j < n; ++j) inv[perm[j]] = j;
        for (int mask = 0; mask < (1 << n); ++mask) {
            int sign = 1;
            enc.clear();
            labels.clear();
            for (int j = 0; j < n; ++j) {
                int old = perm[j];
                const PatternFactor& of = factors[old];
                int order[2] = {0, 1};
                if (mask & (1 << j)) {
                    std::swap(order[0], order[1]);
                    if (of.kind == FactorKind::T) sign = -sign;
                }
                enc.push_back(of.kind == FactorKind::T ? 0 : 1);
                for (int b = 0; b < 2; ++b) {
                    int s = of.slot[order[b]];
                    if (s == kWedgeSlot) {
                        enc.push_back(1000);
                        labels.push_back(lab[old][order[b]]);
                    } else {
                        enc.push_back(inv[s]);
                    }
                }
            }
            for (size_t a = 0; a < labels.size(); ++a)
                for (size_t b = a + 1; b < labels.size(); ++b)
                    if (labels[a] > labels[b]) sign = -sign;
            if (best.empty() || enc < best) {
                best = enc;
                best_sign = sign;
                zero = false;
            } else if (enc == best && sign != best_sign) {
                zero = true;
            }
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return {best, zero ? 0 : best_sign};
}

ContractionPattern ContractionPattern::wedge(const ContractionPattern& a,
                                             const ContractionPattern& b) {
    ContractionPattern r = a;
    int off = static_cast<int>(a.factors.size());
    for (PatternFactor f : b.factors) {
        for (int s = 0; s < 2; ++s)
            if (f.slot[s] >= 0) f.slot[s] += off;
        r.factors.push_back(f);
    }
    return r;
}

DistortionVars DistortionVars::make(World* w) {
    if (w->dim() != 4) throw DimensionMismatch("distortion catalogue requires dimension 4");
    DistortionVars dv;
    dv.w = w;
    dv.T = w->add_tensor12_field("T", PairSym::Anti);
    dv.Q = w->add_tensor12_field("Q", PairSym::Sym);
    return dv;
}

HorizontalForm instantiate(const DistortionVars& dv, const ContractionPattern& p) {
    World* w = dv.w;
    int n = static_cast<int>(p.factors.size());
    int k = p.rank();
    auto table = [&](FieldId f) {
        std::vector<std::pair<VarId, int>> t(64, {0, 0});
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                for (int c = 0; c < 4; ++c) {
                    CanonComp cc = w->canonical_component(f, {a, b, c});
                    if (cc.sign != 0)
                        t[a * 16 + b * 4 + c] = {w->jet_var(f, cc.comp, {}), cc.sign};
                }
        return t;
    };
    auto tT = table(dv.T), tQ = table(dv.Q);
    // wedge label per (factor, slot)
    std::vector<std::array<int, 2>> lab(n, {-1, -1});
    int next = 0;
    for (int i = 0; i < n; ++i)
        for (int b = 0; b < 2; ++b)
            if (p.factors[i].slot[b] == kWedgeSlot) lab[i][b] = next++;

    std::map<std::vector<int>, std::vector<Term>> acc;
    std::vector<int> mu(n, 0), tau(k, 0), st;
    std::vector<VarId> vars(n);
    while (true) {
        std::fill(tau.begin(), tau.end(), 0);
        while (true) {
            int seen = 0;
            bool distinct = true;
            for (int v : tau) {
                if (seen & (1 << v)) {
                    distinct = false;
                    break;
                }
                seen |= 1 << v;
            }
            if (distinct) {
                int sgn = 1;
                for (int i = 0; i < n && sgn; ++i) {
                    const PatternFactor& f = p.factors[i];
                    int b0 = f.slot[0] == kWedgeSlot ? tau[lab[i][0]] : mu[f.slot[0]];
                    int c0 = f.slot[1] == kWedgeSlot ? tau[lab[i][1]] : mu[f.slot[1]];
                    auto& e = (f.kind == FactorKind::T ? tT : tQ)[mu[i] * 16 + b0 * 4 + c0];
                    sgn *= e.second;
                    vars[i] = e.first;
                }
                if (sgn) {
                    st = tau;
                    sgn *= sort_sign(st);
                    std::sort(vars.begin(), vars.end());
                    Monomial mo;
                    for (int i = 0; i < n;) {
                        int j = i;
                        while (j < n && vars[j] == vars[i]) ++j;
                        mo.v.push_back(Monomial::pack(vars[i], static_cast<uint32_t>(j - i)));
                        i = j;
                    }
                    acc[st].push_back({std::move(mo), Rat(sgn)});
                }
            }
            int d = k - 1;
            while (d >= 0 && tau[d] == 3) tau[d--] = 0;
            if (d < 0) break;
            ++tau[d];
        }
        int d = n - 1;
        while (d >= 0 && mu[d] == 3) mu[d--] = 0;
        if (d < 0) break;
        ++mu[d];
    }
    HorizontalForm F(w, k);
    for (auto& [key, terms] : acc)
        F.add_term(key, Expr::from_poly(w, Poly::from_terms(std::move(terms))));
    return F;
}

std::vector<ContractionPattern> enumerate_patterns(int k, bool useT, bool useQ) {
    std::vector<FactorKind> kinds;
    if (useT) kinds.push_back(FactorKind::T);
    if (useQ) kinds.push_back(FactorKind::Q);
    int n = k;
    std::vector<ContractionPattern> out;
    std::set<std::vector<int>> seen;
    std::vector<int> ka(n, 0), pos(n, 0);
    std::function<void(int, int, ContractionPattern&)> place = [&](int j, int used,
                                                                   ContractionPattern& pat) {
        if (j == n) {
            auto [enc, sign] = pat.canonical();
            if (sign == 0) return;
            if (seen.insert(enc).second) out.push_back(pat);
            return;
        }
        for (int s = 0; s < 2 * n; ++s) {
            if (used & (1 << s)) continue;
            pat.factors[s / 2].slot[s % 2] = j;
            place(j + 1, used | (1 << s), pat);
            pat.factors[s / 2].slot[s % 2] = kWedgeSlot;
        }
    };
    while (true) {
        ContractionPattern pat;
        pat.factors.assign(static_cast<size_t>(n), PatternFactor{});
        for (int i = 0; i < n; ++i) pat.factors[i].kind = kinds[ka[i]];
        place(0, 0, pat);
        int d = n - 1;
        while (d >= 0 && ka[d] == static_cast<int>(kinds.size()) - 1) ka[d--] = 0;
        if (d < 0) break;
        ++ka[d];
    }
    return out;
}

namespace {

constexpr uint64_t kP = 2305843009213693951ull; // 2^61 - 1

uint64_t mulmod(uint64_t a, uint64_t b) {
    return static_cast<uint64_t>(static_cast<unsigned __int128>(a) * b % kP);
}

uint64_t powmod(uint64_t a, uint64_t e) {
    uint64_t r = 1;
    while (e) {
        if (e & 1) r = mulmod(r, a);
        a = mulmod(a, a);
        e >>= 1;
    }
    return r;
}

uint64_t rat_mod(const Rat& c) {
    uint64_t n = mpz_fdiv_ui(c.get_num_mpz_t(), kP);
    uint64_t d = mpz_fdiv_ui(c.get_den_mpz_t(), kP);
    if (d == 0) throw MathError("sample denominator hit the field characteristic");
    return mulmod(n, powmod(d, kP - 2));
}

uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// deterministic per-(seed, sample, variable) evaluation point
uint64_t sample_value(uint64_t seed, size_t s, VarId v) {
    return splitmix(seed ^ splitmix(s * 0x100000001b3ull + v)) % kP;
}

uint64_t eval_poly_mod(const Poly& p, uint64_t seed, size_t s) {
    uint64_t acc = 0;
    for (const Term& t : p.terms) {
        if (!t.mono.texp.is_zero()) throw MathError("homotopy parameter in evaluation sample");
        uint64_t v = rat_mod(t.coef);
        for (uint64_t e : t.mono.v)
            v = mulmod(v, powmod(sample_value(seed, s, Monomial::var_of(e)),
                                 Monomial::exp_of(e)));
        acc = (acc + v) % kP;
    }
    return acc;
}

std::vector<std::vector<int>> increasing_tuples(int m, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> t;
    std::function<void(int)> rec = [&](int start) {
        if (static_cast<int>(t.size()) == k) {
            out.push_back(t);
            return;
        }
        for (int i = start; i < m; ++i) {
            t.push_back(i);
            rec(i + 1);
            t.pop_back();
        }
    };
    rec(0);
    return out;
}

// incremental echelon basis over the prime field for greedy independence
struct Echelon {
    std::vector<std::vector<uint64_t>> rows;
    std::vector<size_t> pivots;

    // reduces r in place; returns true (and keeps r) if it extends the span
    bool add(std::vector<uint64_t> r) {
        for (size_t i = 0; i < rows.size(); ++i) {
            uint64_t c = r[pivots[i]];
            if (c == 0) continue;
            for (size_t j = 0; j < r.size(); ++j) {
                uint64_t s = r[j] + kP - mulmod(c, rows[i][j]);
                r[j] = s >= kP ? s - kP : s;
            }
        }
        size_t piv = r.size();
        for (size_t j = 0; j < r.size(); ++j)
            if (r[j] != 0) {
                piv = j;
                break;
            }
        if (piv == r.size()) return false;
        uint64_t inv = powmod(r[piv], kP - 2);
        for (size_t j = 0; j < r.size(); ++j) r[j] = mulmod(r[j], inv);
        rows.push_back(std::move(r));
        pivots.push_back(piv);
        return true;
    }
};

std::vector<uint64_t> form_row(const HorizontalForm& f, int k, uint64_t seed, size_t nsamples) {
    static const std::vector<std::vector<std::vector<int>>> tuples_by_k = [] {
        std::vector<std::vector<std::vector<int>>> v;
        for (int kk = 0; kk <= 4; ++kk) v.push_back(increasing_tuples(4, kk));
        return v;
    }();
    const auto& tuples = tuples_by_k[static_cast<size_t>(k)];
    std::vector<uint64_t> row;
    row.reserve(nsamples * tuples.size());
    for (size_t s = 0; s < nsamples; ++s)
        for (const auto& t : tuples) {
            Expr c = f.coeff(t);
            if (!c.is_polynomial())
                throw MathError("invariant form coefficient is not polynomial");
            row.push_back(eval_poly_mod(c.num(), seed, s));
        }
    return row;
}

int batch_rank(const std::vector<HorizontalForm>& forms, int k, uint64_t seed, size_t nsamples) {
    Echelon e;
    int r = 0;
    for (const auto& f : forms)
        if (e.add(form_row(f, k, seed, nsamples))) ++r;
    return r;
}

// One scalar evaluation per sample: random antisymmetric T and symmetric Q
// component tables plus one random vector per wedge argument, contracted per
// the pattern with the arguments kept in order (multilinear, not wedged).
std::vector<uint64_t> pattern_row(const ContractionPattern& p, uint64_t seed, size_t nsamples) {
    int n = static_cast<int>(p.factors.size());
    int k = p.rank();
    std::vector<std::array<int, 2>> lab(static_cast<size_t>(n), {-1, -1});
    int next = 0;
    for (int i = 0; i < n; ++i)
        for (int b = 0; b < 2; ++b)
            if (p.factors[i].slot[b] == kWedgeSlot) lab[static_cast<size_t>(i)][b] = next++;
    std::vector<uint64_t> row(nsamples);
    for (size_t s = 0; s < nsamples; ++s) {
        uint64_t tv[64], qv[64];
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                for (int c = b; c < 4; ++c) {
                    uint64_t rT = sample_value(seed, s, static_cast<VarId>(a * 16 + b * 4 + c));
                    uint64_t rQ =
                        sample_value(seed, s, static_cast<VarId>(64 + a * 16 + b * 4 + c));
                    tv[a * 16 + b * 4 + c] = b == c ? 0 : rT;
                    tv[a * 16 + c * 4 + b] = b == c ? 0 : (rT ? kP - rT : 0);
                    qv[a * 16 + b * 4 + c] = rQ;
                    qv[a * 16 + c * 4 + b] = rQ;
                }
        uint64_t vec[4][4];
        for (int l = 0; l < k; ++l)
            for (int c = 0; c < 4; ++c)
                vec[l][c] = sample_value(seed, s, static_cast<VarId>(128 + l * 4 + c));
        uint64_t acc = 0;
        std::vector<int> mu(static_cast<size_t>(n), 0);
        while (true) {
            uint64_t prod = 1;
            for (int i = 0; i < n && prod; ++i) {
                const PatternFactor& f = p.factors[static_cast<size_t>(i)];
                const uint64_t* tab = f.kind == FactorKind::T ? tv : qv;
                int base = mu[static_cast<size_t>(i)] * 16;
                uint64_t v = 0;
                bool w0 = f.slot[0] == kWedgeSlot, w1 = f.slot[1] == kWedgeSlot;
                if (!w0 && !w1) {
                    v = tab[base + mu[static_cast<size_t>(f.slot[0])] * 4 +
                            mu[static_cast<size_t>(f.slot[1])]];
                } else if (w0 && !w1) {
                    int c = mu[static_cast<size_t>(f.slot[1])];
                    for (int b = 0; b < 4; ++b)
                        v = (v + mulmod(tab[base + b * 4 + c],
                                        vec[lab[static_cast<size_t>(i)][0]][b])) %
                            kP;
                } else if (!w0 && w1) {
                    int b = mu[static_cast<size_t>(f.slot[0])];
                    for (int c = 0; c < 4; ++c)
                        v = (v + mulmod(tab[base + b * 4 + c],
                                        vec[lab[static_cast<size_t>(i)][1]][c])) %
                            kP;
                } else {
                    for (int b = 0; b < 4; ++b)
                        for (int c = 0; c < 4; ++c)
                            v = (v + mulmod(tab[base + b * 4 + c],
                                            mulmod(vec[lab[static_cast<size_t>(i)][0]][b],
                                                   vec[lab[static_cast<size_t>(i)][1]][c]))) %
                                kP;
                }
                prod = mulmod(prod, v);
            }
            acc = (acc + prod) % kP;
            int d = n - 1;
            while (d >= 0 && mu[static_cast<size_t>(d)] == 3) mu[static_cast<size_t>(d--)] = 0;
            if (d < 0) break;
            ++mu[static_cast<size_t>(d)];
        }
        row[s] = acc;
    }
    return row;
}

int batch_rank(const std::vector<ContractionPattern>& pats, uint64_t seed, size_t nsamples) {
    Echelon e;
    int r = 0;
    for (const auto& p : pats)
        if (e.add(pattern_row(p, seed, nsamples))) ++r;
    return r;
}

} // namespace

int independence_rank(const std::vector<HorizontalForm>& forms, uint64_t seed,
                      IndependenceCertificate* cert) {
    if (forms.empty()) {
        if (cert) *cert = {seed, 0, 0};
        return 0;
    }
    int k = forms.front().degree();
    for (const auto& f : forms)
        if (f.degree() != k) throw DegreeMismatch("independence rank needs forms of equal rank");
    size_t nsamples = 2 * forms.size() + 8;
    for (int attempt = 0; attempt < 5; ++attempt) {
        uint64_t s1 = seed + static_cast<uint64_t>(attempt) * 0x51ed2701u;
        uint64_t s2 = s1 ^ 0xabcdef9876543210ull;
        int r1 = batch_rank(forms, k, s1, nsamples);
        int r2 = batch_rank(forms, k, s2, nsamples);
        if (r1 == r2) {
            if (cert) *cert = {s1, nsamples, r1};
            return r1;
        }
    }
    throw RankUnstable("independence rank disagreed across sample batches");
}

int independence_rank(const std::vector<ContractionPattern>& patterns, uint64_t seed,
                      IndependenceCertificate* cert) {
    if (patterns.empty()) {
        if (cert) *cert = {seed, 0, 0};
        return 0;
    }
    int k = patterns.front().rank();
    for (const auto& p : patterns)
        if (p.rank() != k)
            throw DegreeMismatch("independence rank needs patterns of equal rank");
    size_t nsamples = 2 * patterns.size() + 8;
    for (int attempt = 0; attempt < 5; ++attempt) {
        uint64_t s1 = seed + static_cast<uint64_t>(attempt) * 0x51ed2701u;
        uint64_t s2 = s1 ^ 0xabcdef9876543210ull;
        int r1 = batch_rank(patterns, s1, nsamples);
        int r2 = batch_rank(patterns, s2, nsamples);
        if (r1 == r2) {
            if (cert) *cert = {s1, nsamples, r1};
            return r1;
        }
    }
    throw RankUnstable("independence rank disagreed across sample batches");
}

bool proportional_forms(const HorizontalForm& a, const HorizontalForm& b) {
    if (a.degree() != b.degree()) return false;
    std::set<std::vector<int>> keys;
    for (const auto& [t, c] : a.coeffs()) keys.insert(t);
    for (const auto& [t, c] : b.coeffs()) keys.insert(t);
    // the ratio, when it exists, is a rational constant: read it off the
    // leading terms of the first nonzero coefficient pair
    Rat ratio;
    bool have = false;
    for (const auto& t : keys) {
        Expr x = a.coeff(t), y = b.coeff(t);
        bool zx = x.is_zero(), zy = y.is_zero();
        if (zx != zy) return false;
        if (zx || have) continue;
        if (!x.is_polynomial() || !y.is_polynomial())
            throw MathError("proportionality check expects polynomial coefficients");
        const Term &lx = x.num().lead(), &ly = y.num().lead();
        if (!(lx.mono == ly.mono)) return false;
        ratio = lx.coef / ly.coef;
        have = true;
    }
    if (!have) return true; // both zero
    Expr c = Expr::constant(a.world(), ratio);
    for (const auto& t : keys)
        if (!(a.coeff(t) - b.coeff(t) * c).is_zero()) return false;
    return true;
}

namespace {

std::string pattern_label(const ContractionPattern& p) {
    std::string s;
    for (const PatternFactor& f : p.factors) {
        s += f.kind == FactorKind::T ? 'T' : 'Q';
        s += '[';
        for (int b = 0; b < 2; ++b) {
            if (b) s += ',';
            if (f.slot[b] == kWedgeSlot)
                s += 't';
            else
                s += static_cast<char>('0' + f.slot[b]);
        }
        s += ']';
    }
    return s;
}

constexpr uint64_t kGreedySeed = 0xC0FFEE01ull;
constexpr size_t kGreedySamples = 170;

} // namespace

InvariantBasis enumerate_algebraic(const DistortionVars& dv, int k, bool useT, bool useQ,
                                   uint64_t seed) {
    InvariantBasis B;
    B.k = k;
    std::vector<ContractionPattern> pats = enumerate_patterns(k, useT, useQ);
    // disconnected patterns are the decomposable members; list them first
    std::stable_partition(pats.begin(), pats.end(),
                          [](const ContractionPattern& p) { return !p.connected(); });
    // single-wedge contraction cycles with the same factor-kind multiset give
    // forms lying in each other's span, so only one per multiset is kept; all
    // other classes are members, independent at the multilinear level even
    // when wedge-linearly related
    std::set<std::vector<int>> cycle_kinds_seen;
    for (const ContractionPattern& p : pats) {
        std::vector<int> sh = p.shape();
        bool cycle = p.connected() &&
                     std::all_of(sh.begin(), sh.end(), [](int s) { return s == 1; });
        if (cycle) {
            std::vector<int> kinds;
            for (const PatternFactor& f : p.factors)
                kinds.push_back(f.kind == FactorKind::T ? 0 : 1);
            std::sort(kinds.begin(), kinds.end());
            if (!cycle_kinds_seen.insert(kinds).second) continue;
        }
        HorizontalForm f = instantiate(dv, p);
        if (f.is_zero()) continue;
        B.members.push_back({p, std::move(f), !p.connected(), pattern_label(p)});
    }
    std::vector<ContractionPattern> ps;
    for (const auto& m : B.members) ps.push_back(m.pattern);
    int r = independence_rank(ps, seed, &B.cert);
    if (r != static_cast<int>(B.members.size()))
        throw MathError("invariant basis failed its own independence certificate");
    return B;
}

FirstOrderCatalogue enumerate_first_order(const DistortionVars& dv, bool useT, bool useQ) {
    World* w = dv.w;
    InvariantBasis B1 = enumerate_algebraic(dv, 1, useT, useQ);
    InvariantBasis B2 = enumerate_algebraic(dv, 2, useT, useQ);
    InvariantBasis B3 = enumerate_algebraic(dv, 3, useT, useQ);
    FirstOrderCatalogue C;
    std::map<std::vector<uint64_t>, size_t> rows_seen;
    auto push = [&](HorizontalForm f, std::string label, int family) {
        if (f.is_zero()) return;
        std::vector<uint64_t> row = form_row(f, 4, kGreedySeed, kGreedySamples);
        size_t lead = row.size();
        for (size_t j = 0; j < row.size(); ++j)
            if (row[j] != 0) {
                lead = j;
                break;
            }
        if (lead < row.size()) {
            uint64_t inv = powmod(row[lead], kP - 2);
            for (uint64_t& x : row) x = mulmod(x, inv);
            auto it = rows_seen.find(row);
            if (it != rows_seen.end() && proportional_forms(f, C.terms[it->second].form)) return;
            if (it == rows_seen.end()) rows_seen.emplace(std::move(row), C.terms.size());
        }
        C.terms.push_back({std::move(label), std::move(f), family, false, -1});
    };
    std::vector<HorizontalForm> d1;
    for (const auto& m : B1.members) d1.push_back(d_H(m.form));
    for (size_t i = 0; i < B1.members.size(); ++i)
        for (size_t j = i; j < B1.members.size(); ++j)
            push(wedge(d1[i], d1[j]),
                 "dH(" + B1.members[i].label + ")^dH(" + B1.members[j].label + ")", 0);
    // terms with a decomposable factor under d_H split by the Leibniz rule
    // into terms already listed, so only indecomposable members go under d_H
    for (size_t i = 0; i < B1.members.size(); ++i)
        for (const auto& m2 : B2.members)
            push(wedge(d1[i], m2.form), "dH(" + B1.members[i].label + ")^" + m2.label, 1);
    for (const auto& m1 : B1.members)
        for (const auto& m2 : B2.members) {
            if (m2.decomposable) continue;
            push(wedge(m1.form, d_H(m2.form)), m1.label + "^dH(" + m2.label + ")", 1);
        }
    for (const auto& m3 : B3.members) {
        if (m3.decomposable) continue;
        push(d_H(m3.form), "dH(" + m3.label + ")", 2);
    }

    std::vector<FieldId> fields{dv.T, dv.Q};
    std::vector<SourceForm> classes;
    for (auto& t : C.terms) {
        LagrangianDensity L{w, density_of(t.form)};
        SourceForm el = euler_lagrange(L, fields);
        t.trivial = el.is_zero();
        if (t.trivial) continue;
        int cls = -1;
        for (size_t c = 0; c < classes.size(); ++c)
            if (el.equals(classes[c])) {
                cls = static_cast<int>(c);
                break;
            }
        if (cls < 0) {
            cls = static_cast<int>(classes.size());
            classes.push_back(std::move(el));
        }
        t.el_class = cls;
    }
    C.nontrivial_classes = static_cast<int>(classes.size());
    return C;
}

std::pair<int, int> q_only_sector(const DistortionVars& dv) {
    InvariantBasis B = enumerate_algebraic(dv, 4, false, true);
    FirstOrderCatalogue C = enumerate_first_order(dv, false, true);
    return {static_cast<int>(B.members.size()), C.nontrivial_classes};
}

std::pair<int, int> t_only_sector(const DistortionVars& dv) {
    InvariantBasis B = enumerate_algebraic(dv, 4, true, false);
    FirstOrderCatalogue C = enumerate_first_order(dv, true, false);
    return {static_cast<int>(B.members.size()), C.nontrivial_classes};
}

namespace {

// exact inverse of a 4x4 rational matrix; false when singular
bool invert4(std::vector<std::vector<Rat>> A, std::vector<std::vector<Rat>>& inv, Rat& det) {
    int n = 4;
    inv.assign(4, std::vector<Rat>(4, Rat(0)));
    for (int i = 0; i < n; ++i) inv[i][i] = 1;
    det = 1;
    for (int col = 0; col < n; ++col) {
        int piv = -1;
        for (int r = col; r < n; ++r)
            if (A[r][col] != 0) {
                piv = r;
                break;
            }
        if (piv < 0) return false;
        if (piv != col) {
            std::swap(A[piv], A[col]);
            std::swap(inv[piv], inv[col]);
            det = -det;
        }
        Rat d = A[col][col];
        det *= d;
        for (int j = 0; j < n; ++j) {
            A[col][j] /= d;
            inv[col][j] /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col || A[r][col] == 0) continue;
            Rat f = A[r][col];
            for (int j = 0; j < n; ++j) {
                A[r][j] -= f * A[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    return true;
}

Rat eval_rat(const Expr& e, const std::map<VarId, Rat>& pt) {
    ExtVal v = e.eval(pt);
    if (!v.is_rational()) throw MathError("nonrational value in equivariance check");
    return v.rat();
}

} // namespace

bool equivariance_check_form(const DistortionVars& dv, const HorizontalForm& f, int trials,
                             uint64_t seed) {
    World* w = dv.w;
    int k = f.degree();
    bool first_order = false;
    for (const auto& [tup, c] : f.coeffs())
        for (VarId v : c.vars()) {
            const VarInfo& vi = w->var(v);
            if (vi.kind != VarInfo::Kind::Jet || (vi.field != dv.T && vi.field != dv.Q))
                throw MathError("equivariance check expects pure distortion forms");
            if (vi.deriv.size() > 1) throw MathError("equivariance check is limited to order 1");
            if (vi.deriv.size() == 1) first_order = true;
        }
    auto tuples = increasing_tuples(4, k);
    uint64_t state = seed;
    auto rnd = [&](int span) {
        state = splitmix(state);
        return static_cast<long>(state % (2 * static_cast<uint64_t>(span) + 1)) - span;
    };
    for (int trial = 0; trial < trials; ++trial) {
        std::vector<std::vector<Rat>> A(4, std::vector<Rat>(4)), Ai;
        Rat det;
        do {
            for (auto& row : A)
                for (Rat& x : row) x = Rat(rnd(3));
        } while (!invert4(A, Ai, det));

        std::map<VarId, Rat> pt, pt2;
        for (FieldId fd : {dv.T, dv.Q}) {
            // random values on the canonical components, full arrays for both
            Rat val[4][4][4], dval[4][4][4][4];
            for (const auto& comp : w->independent_components(fd)) {
                pt[w->jet_var(fd, comp, {})] = Rat(rnd(5));
                if (first_order)
                    for (int s = 0; s < 4; ++s) pt[w->jet_var(fd, comp, {s})] = Rat(rnd(5));
            }
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    for (int c = 0; c < 4; ++c) {
                        CanonComp cc = w->canonical_component(fd, {a, b, c});
                        val[a][b][c] = 0;
                        for (int s = 0; s < 4; ++s) dval[a][b][c][s] = 0;
                        if (cc.sign == 0) continue;
                        val[a][b][c] = Rat(cc.sign) * pt[w->jet_var(fd, cc.comp, {})];
                        if (first_order)
                            for (int s = 0; s < 4; ++s)
                                dval[a][b][c][s] =
                                    Rat(cc.sign) * pt[w->jet_var(fd, cc.comp, {s})];
                    }
            // tensorial transform: upper slot with A, lower slots (and the
            // derivative index, for constant A) with A^{-1}
            for (const auto& comp : w->independent_components(fd)) {
                Rat acc(0);
                std::vector<Rat> dacc(4, Rat(0));
                for (int al = 0; al < 4; ++al)
                    for (int be = 0; be < 4; ++be)
                        for (int ga = 0; ga < 4; ++ga) {
                            Rat fac = A[comp[0]][al] * Ai[be][comp[1]] * Ai[ga][comp[2]];
                            if (fac == 0) continue;
                            acc += fac * val[al][be][ga];
                            if (first_order)
                                for (int s = 0; s < 4; ++s)
                                    for (int de = 0; de < 4; ++de)
                                        dacc[static_cast<size_t>(s)] +=
                                            fac * Ai[de][s] * dval[al][be][ga][de];
                        }
                pt2[w->jet_var(fd, comp, {})] = acc;
                if (first_order)
                    for (int s = 0; s < 4; ++s) pt2[w->jet_var(fd, comp, {s})] = dacc[s];
            }
        }
        std::map<std::vector<int>, Rat> ev;
        for (const auto& t : tuples) ev[t] = eval_rat(f.coeff(t), pt);
        for (const auto& nu : tuples) {
            Rat lhs = eval_rat(f.coeff(nu), pt2);
            Rat rhs(0);
            std::vector<int> mu(static_cast<size_t>(k), 0);
            while (true) {
                std::vector<int> st = mu;
                int sg = sort_sign(st);
                if (sg != 0) {
                    Rat fac(sg);
                    for (int i = 0; i < k; ++i) fac *= Ai[mu[i]][nu[i]];
                    if (fac != 0) rhs += fac * ev[st];
                }
                int d = k - 1;
                while (d >= 0 && mu[d] == 3) mu[d--] = 0;
                if (d < 0) break;
                ++mu[d];
            }
            if (lhs != rhs) return false;
        }
    }
    return true;
}

bool equivariance_check(const DistortionVars& dv, const ContractionPattern& p, int trials,
                        uint64_t seed) {
    return equivariance_check_form(dv, instantiate(dv, p), trials, seed);
}

} // namespace vb
