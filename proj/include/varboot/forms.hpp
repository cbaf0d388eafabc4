#pragma once

#include <map>
#include <vector>

#include "varboot/expr.hpp"

namespace vb {

// Horizontal differential form of degree k over the base differentials
// dx^0..dx^{m-1}. Coefficients are stored only at strictly increasing index
// tuples; access at permuted tuples picks up the permutation sign.
class HorizontalForm {
  public:
    HorizontalForm() : w_(nullptr), degree_(0) {}
    HorizontalForm(World* w, int degree) : w_(w), degree_(degree) {}

    static HorizontalForm zero(World* w, int degree) { return HorizontalForm(w, degree); }
    // the basis form dx^tau
    static HorizontalForm dx(World* w, int tau);
    // degree-0 form from a scalar coefficient
    static HorizontalForm scalar(World* w, Expr e);

    World* world() const { return w_; }
    int degree() const { return degree_; }
    bool is_zero() const;

    // add c * dx^{tau_1} ^ ... ^ dx^{tau_k} for an arbitrary tuple (signed)
    void add_term(std::vector<int> tau, const Expr& c);
    // coefficient at an arbitrary tuple, with sign; zero Expr if absent
    Expr coeff(std::vector<int> tau) const;
    const std::map<std::vector<int>, Expr>& coeffs() const { return coeffs_; }

    friend HorizontalForm operator+(const HorizontalForm& a, const HorizontalForm& b);
    friend HorizontalForm operator-(const HorizontalForm& a, const HorizontalForm& b);
    HorizontalForm operator-() const;
    HorizontalForm times(const Expr& c) const;
    HorizontalForm& operator+=(const HorizontalForm& o) { return *this = *this + o; }

    bool equals(const HorizontalForm& o) const;

  private:
    World* w_;
    int degree_;
    std::map<std::vector<int>, Expr> coeffs_; // strictly increasing tuples, nonzero
    void prune();
    friend HorizontalForm wedge(const HorizontalForm& a, const HorizontalForm& b);
    friend HorizontalForm d_H(const HorizontalForm& a);
};

HorizontalForm wedge(const HorizontalForm& a, const HorizontalForm& b);
HorizontalForm d_H(const HorizontalForm& a);

// the single coefficient of a top-degree form relative to dx^0^...^dx^{m-1}
Expr density_of(const HorizontalForm& a);

// sign of the permutation sorting tau; 0 if tau has repeats. Sorts tau.
int sort_sign(std::vector<int>& tau);

} // namespace vb
