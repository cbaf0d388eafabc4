#pragma once

#include <functional>
#include <map>
#include <set>
#include <vector>

#include "varboot/world.hpp"

namespace vb {

// Value in the multiquadratic extension Q(sqrt(d1), sqrt(d2), ...) used for
// exact point evaluation in the presence of relation atoms. Keyed by a
// bitmask over the (few) relation atoms present at the evaluation point.
struct ExtVal {
    std::map<uint32_t, Rat> c;    // bitmask -> coefficient, no zeros
    std::map<uint32_t, Rat> disc; // bit index -> discriminant value (sqrt argument)
    static ExtVal rational(const Rat& r);
    bool is_zero() const { return c.empty(); }
    bool is_rational() const;
    Rat rat() const; // requires is_rational()
    friend bool operator==(const ExtVal& a, const ExtVal& b) {
        return a.c == b.c && a.disc == b.disc;
    }
};

// Exact rational expression in jet variables and atoms: a reduced
// numerator polynomial over a factored, relation-atom-free denominator.
class Expr {
  public:
    Expr() : w_(nullptr) {}
    explicit Expr(World* w) : w_(w) {} // zero

    static Expr constant(World* w, const Rat& c);
    static Expr from_int(World* w, long n) { return constant(w, Rat(n)); }
    static Expr variable(World* w, VarId v);
    static Expr from_poly(World* w, Poly p); // reduces relations

    World* world() const { return w_; }
    const Poly& num() const { return num_; }
    const std::vector<std::pair<FactorId, uint32_t>>& den() const { return den_; }
    bool is_zero() const { return num_.is_zero(); }
    bool is_polynomial() const { return den_.empty(); }
    Poly den_poly() const; // expanded denominator

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    Expr operator-() const;
    Expr& operator+=(const Expr& o) { return *this = *this + o; }
    Expr& operator-=(const Expr& o) { return *this = *this - o; }
    Expr& operator*=(const Expr& o) { return *this = *this * o; }
    Expr pow(long e) const;
    Expr times(const Rat& c) const;

    friend bool operator==(const Expr& a, const Expr& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }

    // structural equality of canonical forms is the semantic equality test
    bool equals(const Expr& o) const { return (*this - o).is_zero(); }

    // maximal jet order of any variable appearing (atoms contribute through
    // the orders of the jet variables they depend on)
    int order() const;
    int order_of_field(FieldId f) const;
    std::vector<VarId> vars() const;
    bool depends_on_field(FieldId f) const;
    bool has_t() const;

    // --- jet-calculus operations ---
    Expr total_derivative(int mu) const;
    Expr partial_derivative(VarId v) const;
    Expr scale_fields(const std::set<FieldId>& fields) const;
    Expr integrate_homotopy() const;
    // substitute jet variables by expressions (vars not in the map are kept);
    // atoms depending on substituted fields are not rewritten.
    Expr substitute(const std::map<VarId, Expr>& sub) const;
    // set the homotopy parameter t to 1 (drops all t exponents)
    Expr at_t_one() const;

    // exact evaluation; relation atoms take the value sqrt(rhs(point)),
    // other atoms must be given a value in the point map
    ExtVal eval(const std::map<VarId, Rat>& point) const;

    std::string str() const; // debug form

  private:
    World* w_;
    Poly num_;
    std::vector<std::pair<FactorId, uint32_t>> den_; // sorted by FactorId

    void push_den_poly(Poly p, uint32_t mult = 1); // factor, intern, multiply into den_
    void cancel();
    static Expr inverse(const Expr& b); // rationalizes relation atoms out of b's numerator
    // generic derivation: quotient + chain rule given the action on variables
    Expr derive(const std::function<Expr(VarId)>& dvar) const;
    static void align(const Expr& a, const Expr& b, Poly& na, Poly& nb,
                      std::vector<std::pair<FactorId, uint32_t>>& den);
    friend class World;
};

} // namespace vb
