#include "varboot/poly.hpp"

#include <algorithm>
#include <unordered_map>

namespace vb {

Monomial Monomial::times(const Monomial& o) const {
    Monomial r;
    r.texp = texp + o.texp;
    r.v.reserve(v.size() + o.v.size());
    size_t i = 0, j = 0;
    while (i < v.size() && j < o.v.size()) {
        VarId a = var_of(v[i]), b = var_of(o.v[j]);
        if (a < b)
            r.v.push_back(v[i++]);
        else if (b < a)
            r.v.push_back(o.v[j++]);
        else {
            r.v.push_back(pack(a, exp_of(v[i]) + exp_of(o.v[j])));
            ++i, ++j;
        }
    }
    for (; i < v.size(); ++i) r.v.push_back(v[i]);
    for (; j < o.v.size(); ++j) r.v.push_back(o.v[j]);
    return r;
}

std::optional<Monomial> Monomial::divided_by(const Monomial& o) const {
    Monomial r;
    r.texp = texp - o.texp;
    size_t i = 0, j = 0;
    while (j < o.v.size()) {
        if (i >= v.size()) return std::nullopt;
        VarId a = var_of(v[i]), b = var_of(o.v[j]);
        if (a < b) {
            r.v.push_back(v[i++]);
        } else if (a > b) {
            return std::nullopt;
        } else {
            uint32_t ea = exp_of(v[i]), eb = exp_of(o.v[j]);
            if (ea < eb) return std::nullopt;
            if (ea > eb) r.v.push_back(pack(a, ea - eb));
            ++i, ++j;
        }
    }
    for (; i < v.size(); ++i) r.v.push_back(v[i]);
    return r;
}

Poly Poly::constant(const Rat& c) {
    Poly p;
    if (c != 0) p.terms.push_back({Monomial{}, c});
    return p;
}

Poly Poly::variable(VarId v, uint32_t exp) {
    Poly p;
    Monomial m;
    if (exp > 0) m.v.push_back(Monomial::pack(v, exp));
    p.terms.push_back({m, Rat(1)});
    return p;
}

Poly Poly::monomial(Monomial m, const Rat& c) {
    Poly p;
    if (c != 0) p.terms.push_back({std::move(m), c});
    return p;
}

int Poly::degree() const {
    int d = -1;
    for (const Term& t : terms) d = std::max(d, t.mono.degree());
    return d;
}

Poly Poly::operator-() const {
    Poly r = *this;
    for (Term& t : r.terms) t.coef = -t.coef;
    return r;
}

static bool term_desc(const Term& a, const Term& b) { return b.mono < a.mono; }

Poly operator+(const Poly& a, const Poly& b) {
    Poly r;
    r.terms.reserve(a.terms.size() + b.terms.size());
    size_t i = 0, j = 0;
    while (i < a.terms.size() && j < b.terms.size()) {
        const Term& ta = a.terms[i];
        const Term& tb = b.terms[j];
        if (tb.mono < ta.mono) {
            r.terms.push_back(ta);
            ++i;
        } else if (ta.mono < tb.mono) {
            r.terms.push_back(tb);
            ++j;
        } else {
            Rat c = ta.coef + tb.coef;
            if (c != 0) r.terms.push_back({ta.mono, c});
            ++i, ++j;
        }
    }
    for (; i < a.terms.size(); ++i) r.terms.push_back(a.terms[i]);
    for (; j < b.terms.size(); ++j) r.terms.push_back(b.terms[j]);
    return r;
}

Poly operator-(const Poly& a, const Poly& b) { return a + (-b); }

Poly operator*(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return Poly();
    if (b.terms.size() == 1) return a.times_term(b.terms[0].mono, b.terms[0].coef);
    if (a.terms.size() == 1) return b.times_term(a.terms[0].mono, a.terms[0].coef);
    std::unordered_map<Monomial, Rat, MonomialHash> acc;
    acc.reserve(a.terms.size() * 2);
    const Poly& big = a.terms.size() >= b.terms.size() ? a : b;
    const Poly& small = a.terms.size() >= b.terms.size() ? b : a;
    for (const Term& tb : small.terms)
        for (const Term& ta : big.terms) acc[ta.mono.times(tb.mono)] += ta.coef * tb.coef;
    Poly r;
    r.terms.reserve(acc.size());
    for (auto& [m, c] : acc)
        if (c != 0) r.terms.push_back({m, std::move(c)});
    std::sort(r.terms.begin(), r.terms.end(), term_desc);
    return r;
}

Poly Poly::times_term(const Monomial& m, const Rat& c) const {
    if (c == 0) return Poly();
    Poly r;
    r.terms.reserve(terms.size());
    for (const Term& t : terms) r.terms.push_back({t.mono.times(m), t.coef * c});
    if (!m.v.empty()) std::sort(r.terms.begin(), r.terms.end(), term_desc);
    return r;
}

Poly Poly::times_rat(const Rat& c) const {
    if (c == 0) return Poly();
    Poly r;
    r.terms.reserve(terms.size());
    for (const Term& t : terms) r.terms.push_back({t.mono, t.coef * c});
    return r;
}

std::optional<Poly> Poly::divided_by(const Poly& d) const {
    if (d.is_zero()) return std::nullopt;
    if (d.is_one()) return *this;
    if (d.terms.size() == 1) {
        const Term& dt = d.terms[0];
        Poly q;
        q.terms.reserve(terms.size());
        for (const Term& t : terms) {
            auto m = t.mono.divided_by(dt.mono);
            if (!m) return std::nullopt;
            q.terms.push_back({*m, t.coef / dt.coef});
        }
        std::sort(q.terms.begin(), q.terms.end(), term_desc);
        return q;
    }
    // Heap-streamed exact division: the remainder is never materialized.
    // Each divisor tail term runs a pointer through the quotient built so
    // far; a max-heap merges those product streams against the dividend, so
    // the cost is (|dividend| + |q|*|d|) heap steps instead of remainder
    // rebuilds.
    const Term& dl = d.lead();
    if (terms.empty()) return Poly();
    // exact quotients also divide at the trailing monomials; reject cheaply
    if (!terms.front().mono.divided_by(dl.mono) ||
        !terms.back().mono.divided_by(d.terms.back().mono))
        return std::nullopt;
    size_t m = d.terms.size();
    struct Stream {
        Monomial mono;
        size_t j, k;
    };
    auto stream_less = [](const Stream& a, const Stream& b) { return a.mono < b.mono; };
    std::vector<Stream> heap; // max-heap on mono
    std::vector<size_t> dormant(m, 0); // streams waiting for quotient term k
    for (size_t j = 1; j < m; ++j) dormant[j] = 1;
    size_t ndormant = m - 1; // all tail streams start at k = 0
    std::vector<Term> quo;
    size_t i = 0;
    while (i < terms.size() || !heap.empty()) {
        // current remainder lead
        const Monomial* M = i < terms.size() ? &terms[i].mono : nullptr;
        if (!heap.empty() && (!M || *M < heap.front().mono)) M = &heap.front().mono;
        Monomial lead = *M;
        Rat c(0);
        if (i < terms.size() && terms[i].mono == lead) {
            c = terms[i].coef;
            ++i;
        }
        while (!heap.empty() && heap.front().mono == lead) {
            std::pop_heap(heap.begin(), heap.end(), stream_less);
            Stream s = std::move(heap.back());
            heap.pop_back();
            c -= quo[s.k].coef * d.terms[s.j].coef;
            ++s.k;
            if (s.k < quo.size()) {
                s.mono = quo[s.k].mono.times(d.terms[s.j].mono);
                heap.push_back(std::move(s));
                std::push_heap(heap.begin(), heap.end(), stream_less);
            } else {
                dormant[s.j] = 1;
                ++ndormant;
            }
        }
        if (c == 0) continue;
        auto qm = lead.divided_by(dl.mono);
        if (!qm) return std::nullopt;
        quo.push_back({std::move(*qm), c / dl.coef});
        if (ndormant) {
            size_t k = quo.size() - 1;
            for (size_t j = 1; j < m; ++j)
                if (dormant[j]) {
                    dormant[j] = 0;
                    heap.push_back({quo[k].mono.times(d.terms[j].mono), j, k});
                    std::push_heap(heap.begin(), heap.end(), stream_less);
                }
            ndormant = 0;
        }
    }
    Poly q;
    q.terms = std::move(quo);
    return q;
}

namespace {

// cursor into one piece*mult_term product stream; products of a sorted poly
// by a single term stay sorted, so a heap over cursors yields the combined
// expansion in order without materializing it
struct ComboCursor {
    Monomial mono;
    uint32_t piece = 0, mterm = 0;
    size_t pos = 0;
};

struct ComboHeap {
    std::vector<ComboCursor> h;
    const std::vector<ComboPiece>* pieces;

    explicit ComboHeap(const std::vector<ComboPiece>& ps) : pieces(&ps) {
        for (uint32_t i = 0; i < ps.size(); ++i) {
            if (ps[i].piece->is_zero() || ps[i].mult->is_zero()) continue;
            for (uint32_t j = 0; j < ps[i].mult->terms.size(); ++j)
                push({ps[i].piece->terms[0].mono.times(ps[i].mult->terms[j].mono), i, j, 0});
        }
    }
    static bool less(const ComboCursor& a, const ComboCursor& b) { return a.mono < b.mono; }
    bool empty() const { return h.empty(); }
    const Monomial& top() const { return h.front().mono; }
    void push(ComboCursor c) {
        h.push_back(std::move(c));
        std::push_heap(h.begin(), h.end(), less);
    }
    // pop every cursor matching the heap lead, accumulate coefficients
    void drain(const Monomial& lead, Rat& c) {
        while (!h.empty() && h.front().mono == lead) {
            std::pop_heap(h.begin(), h.end(), less);
            ComboCursor cur = std::move(h.back());
            h.pop_back();
            const ComboPiece& p = (*pieces)[cur.piece];
            c += p.piece->terms[cur.pos].coef * p.mult->terms[cur.mterm].coef;
            if (++cur.pos < p.piece->terms.size()) {
                cur.mono = p.piece->terms[cur.pos].mono.times(p.mult->terms[cur.mterm].mono);
                push(std::move(cur));
            }
        }
    }
};

} // namespace

Poly combine_linear(const std::vector<ComboPiece>& pieces) {
    ComboHeap dividend(pieces);
    Poly out;
    while (!dividend.empty()) {
        Monomial lead = dividend.top();
        Rat c(0);
        dividend.drain(lead, c);
        if (c != 0) out.terms.push_back({std::move(lead), std::move(c)});
    }
    return out;
}

std::optional<Poly> divide_linear_combo(const std::vector<ComboPiece>& pieces, const Poly& d) {
    if (d.is_zero()) return std::nullopt;
    if (d.is_one()) return combine_linear(pieces);
    ComboHeap dividend(pieces);
    const Term& dl = d.lead();
    size_t m = d.terms.size();
    struct Stream {
        Monomial mono;
        size_t j, k;
    };
    auto stream_less = [](const Stream& a, const Stream& b) { return a.mono < b.mono; };
    std::vector<Stream> heap;
    std::vector<size_t> dormant(m, 0);
    for (size_t j = 1; j < m; ++j) dormant[j] = 1;
    size_t ndormant = m - 1;
    std::vector<Term> quo;
    while (!dividend.empty() || !heap.empty()) {
        const Monomial* M = dividend.empty() ? nullptr : &dividend.top();
        if (!heap.empty() && (!M || *M < heap.front().mono)) M = &heap.front().mono;
        Monomial lead = *M;
        Rat c(0);
        dividend.drain(lead, c);
        while (!heap.empty() && heap.front().mono == lead) {
            std::pop_heap(heap.begin(), heap.end(), stream_less);
            Stream s = std::move(heap.back());
            heap.pop_back();
            c -= quo[s.k].coef * d.terms[s.j].coef;
            ++s.k;
            if (s.k < quo.size()) {
                s.mono = quo[s.k].mono.times(d.terms[s.j].mono);
                heap.push_back(std::move(s));
                std::push_heap(heap.begin(), heap.end(), stream_less);
            } else {
                dormant[s.j] = 1;
                ++ndormant;
            }
        }
        if (c == 0) continue;
        auto qm = lead.divided_by(dl.mono);
        if (!qm) return std::nullopt;
        quo.push_back({std::move(*qm), c / dl.coef});
        if (ndormant) {
            size_t k = quo.size() - 1;
            for (size_t j = 1; j < m; ++j)
                if (dormant[j]) {
                    dormant[j] = 0;
                    heap.push_back({quo[k].mono.times(d.terms[j].mono), j, k});
                    std::push_heap(heap.begin(), heap.end(), stream_less);
                }
            ndormant = 0;
        }
    }
    Poly q;
    q.terms = std::move(quo);
    return q;
}

void Geobucket::add(Poly p) {
    if (p.is_zero()) return;
    size_t i = 0;
    while (true) {
        if (i >= b.size()) {
            b.push_back(std::move(p));
            off.push_back(0);
            return;
        }
        size_t live = b[i].terms.size() - off[i];
        if (live == 0) {
            if (p.terms.size() <= (size_t{4} << i)) {
                b[i] = std::move(p);
                off[i] = 0;
                return;
            }
            ++i;
            continue;
        }
        if (p.terms.size() <= (size_t{4} << i)) {
            Poly slice;
            slice.terms.assign(b[i].terms.begin() + static_cast<long>(off[i]), b[i].terms.end());
            p = p + slice;
            b[i] = Poly();
            off[i] = 0;
            if (p.terms.size() <= (size_t{4} << i)) {
                b[i] = std::move(p);
                return;
            }
        }
        ++i;
    }
}

std::optional<Term> Geobucket::pop_lead() {
    while (true) {
        const Monomial* best = nullptr;
        for (size_t i = 0; i < b.size(); ++i)
            if (off[i] < b[i].terms.size()) {
                const Monomial& m = b[i].terms[off[i]].mono;
                if (!best || *best < m) best = &m;
            }
        if (!best) return std::nullopt;
        Monomial m = *best;
        Rat c(0);
        for (size_t i = 0; i < b.size(); ++i)
            if (off[i] < b[i].terms.size() && b[i].terms[off[i]].mono == m) {
                c += b[i].terms[off[i]].coef;
                ++off[i];
            }
        if (c != 0) return Term{std::move(m), std::move(c)};
    }
}

Poly Poly::shift_texp(Rat64 s) const {
    Poly r = *this;
    for (Term& t : r.terms) t.mono.texp = t.mono.texp + s;
    return r;
}

std::optional<Rat64> Poly::uniform_texp() const {
    if (terms.empty()) return Rat64(0);
    Rat64 s = terms[0].mono.texp;
    for (const Term& t : terms)
        if (t.mono.texp != s) return std::nullopt;
    return s;
}

bool Poly::has_texp() const {
    for (const Term& t : terms)
        if (!t.mono.texp.is_zero()) return true;
    return false;
}

bool Poly::depends_on(VarId v) const {
    for (const Term& t : terms)
        if (t.mono.exponent(v) > 0) return true;
    return false;
}

void Poly::collect_vars(std::vector<VarId>& out) const {
    for (const Term& t : terms)
        for (uint64_t e : t.mono.v) out.push_back(Monomial::var_of(e));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
}

bool operator==(const Poly& a, const Poly& b) {
    if (a.terms.size() != b.terms.size()) return false;
    for (size_t i = 0; i < a.terms.size(); ++i)
        if (!(a.terms[i].mono == b.terms[i].mono) || a.terms[i].coef != b.terms[i].coef) return false;
    return true;
}

size_t Poly::hash() const {
    size_t h = terms.size();
    for (const Term& t : terms) {
        h ^= t.mono.hash() + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        h ^= std::hash<long>()(mpz_get_si(t.coef.get_num_mpz_t()));
    }
    return h;
}

Poly Poly::from_terms(std::vector<Term> ts) {
    std::sort(ts.begin(), ts.end(), term_desc);
    Poly r;
    r.terms.reserve(ts.size());
    for (Term& t : ts) {
        if (!r.terms.empty() && r.terms.back().mono == t.mono)
            r.terms.back().coef += t.coef;
        else
            r.terms.push_back(std::move(t));
        if (!r.terms.empty() && r.terms.back().coef == 0) r.terms.pop_back();
    }
    return r;
}

} // namespace vb
