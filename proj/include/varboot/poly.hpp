#pragma once

#include <boost/container/small_vector.hpp>
#include <cstdint>
#include <functional>
#include <gmpxx.h>
#include <optional>
#include <vector>

#include "varboot/smallrat.hpp"

namespace vb {

using Rat = mpq_class;
using VarId = uint32_t;

// A power product of engine variables, plus an exponent of the reserved
// homotopy parameter t (rational, to accommodate t^{m/2} weights).
struct Monomial {
    // (var << 32) | exp, sorted ascending by var, exp > 0
    boost::container::small_vector<uint64_t, 6> v;
    Rat64 texp;

    static VarId var_of(uint64_t e) { return static_cast<VarId>(e >> 32); }
    static uint32_t exp_of(uint64_t e) { return static_cast<uint32_t>(e & 0xffffffffu); }
    static uint64_t pack(VarId var, uint32_t exp) { return (static_cast<uint64_t>(var) << 32) | exp; }

    int degree() const {
        int d = 0;
        for (uint64_t e : v) d += static_cast<int>(exp_of(e));
        return d;
    }

    uint32_t exponent(VarId var) const {
        for (uint64_t e : v)
            if (var_of(e) == var) return exp_of(e);
        return 0;
    }

    bool is_one() const { return v.empty() && texp.is_zero(); }

    Monomial times(const Monomial& o) const;
    // this / o; nullopt if not divisible
    std::optional<Monomial> divided_by(const Monomial& o) const;

    friend bool operator==(const Monomial& a, const Monomial& b) { return a.texp == b.texp && a.v == b.v; }

    // graded lex order (a proper term order, so lead-term division works):
    // total degree first, then t exponent, then lex with lower VarId more
    // significant and higher exponent larger
    friend bool operator<(const Monomial& a, const Monomial& b) {
        int da = a.degree(), db = b.degree();
        if (da != db) return da < db;
        if (a.texp != b.texp) return a.texp < b.texp;
        size_t i = 0, j = 0;
        while (i < a.v.size() && j < b.v.size()) {
            VarId va = var_of(a.v[i]), vb = var_of(b.v[j]);
            if (va < vb) return false;
            if (vb < va) return true;
            uint32_t ea = exp_of(a.v[i]), eb = exp_of(b.v[j]);
            if (ea != eb) return ea < eb;
            ++i, ++j;
        }
        return j < b.v.size();
    }

    size_t hash() const {
        size_t h = 1469598103934665603ull;
        auto mix = [&h](uint64_t x) {
            h ^= x;
            h *= 1099511628211ull;
        };
        for (uint64_t e : v) mix(e);
        mix(static_cast<uint64_t>(texp.num) * 31 + static_cast<uint64_t>(texp.den));
        return h;
    }
};

struct MonomialHash {
    size_t operator()(const Monomial& m) const { return m.hash(); }
};

struct Term {
    Monomial mono;
    Rat coef;
};

// Sparse multivariate polynomial with exact rational coefficients.
// Terms are kept sorted in descending monomial order with no zero
// coefficients, so equal polynomials have identical representations.
class Poly {
  public:
    std::vector<Term> terms; // descending, coef != 0

    Poly() = default;
    static Poly zero() { return Poly(); }
    static Poly constant(const Rat& c);
    static Poly variable(VarId v, uint32_t exp = 1);
    static Poly monomial(Monomial m, const Rat& c);

    bool is_zero() const { return terms.empty(); }
    bool is_constant() const { return terms.empty() || (terms.size() == 1 && terms[0].mono.is_one()); }
    bool is_one() const { return terms.size() == 1 && terms[0].mono.is_one() && terms[0].coef == 1; }
    size_t size() const { return terms.size(); }
    int degree() const;

    const Term& lead() const { return terms.front(); }

    Poly operator-() const;
    friend Poly operator+(const Poly& a, const Poly& b);
    friend Poly operator-(const Poly& a, const Poly& b);
    friend Poly operator*(const Poly& a, const Poly& b);
    Poly times_term(const Monomial& m, const Rat& c) const;
    Poly times_rat(const Rat& c) const;

    // Exact division; nullopt when the division does not come out even.
    std::optional<Poly> divided_by(const Poly& d) const;

    // Multiply every term's t-exponent shift: t^s * this
    Poly shift_texp(Rat64 s) const;
    // True if every term carries the same t exponent (returned); zero poly -> 0.
    std::optional<Rat64> uniform_texp() const;
    bool has_texp() const;

    bool depends_on(VarId v) const;
    void collect_vars(std::vector<VarId>& out) const; // sorted unique, appended

    friend bool operator==(const Poly& a, const Poly& b);

    size_t hash() const;

    // Build from unsorted term list (merges duplicates, drops zeros).
    static Poly from_terms(std::vector<Term> ts);
};

// One addend of a lazily evaluated linear combination sum_i piece_i * mult_i.
struct ComboPiece {
    const Poly* piece;
    const Poly* mult;
};

// sum_i piece_i * mult_i, streamed through a merge heap so the expanded
// products are never held in memory at once.
Poly combine_linear(const std::vector<ComboPiece>& pieces);

// Exact division of sum_i piece_i * mult_i by d under the same streaming
// scheme; nullopt when the division does not come out even.
std::optional<Poly> divide_linear_combo(const std::vector<ComboPiece>& pieces, const Poly& d);

struct PolyHash {
    size_t operator()(const Poly& p) const { return p.hash(); }
};

// Bucketed polynomial accumulator for additions of mixed sizes; keeps the
// cost of repeated small updates to a large running remainder logarithmic.
struct Geobucket {
    std::vector<Poly> b;     // bucket i holds at most 4<<i live terms
    std::vector<size_t> off; // consumed prefix per bucket
    void add(Poly p);
    // extract the current leading term (combining across buckets)
    std::optional<Term> pop_lead();
};

} // namespace vb
