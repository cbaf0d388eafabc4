#pragma once

#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "varboot/varcalc.hpp"

namespace vb {

// Formal Levi-Civita geometry of a metric field: determinant, the square
// root-of-determinant atom, inverse metric, Christoffel symbols and the
// curvature ladder. All derived tensors are built lazily and cached.
class MetricModel {
  public:
    MetricModel(World* w, FieldId g);

    World* world() const { return w_; }
    FieldId field() const { return g_; }
    int dim() const { return w_->dim(); }

    VarId s_atom() const { return s_; }
    Expr s() const { return Expr::variable(w_, s_); } // sqrt|det g|
    const Poly& det_poly() const { return det_; }
    Expr det() const { return Expr::from_poly(w_, det_); }

    Expr g_lower(int mu, int nu) const;
    Expr g_lower(int mu, int nu, int deriv) const; // first derivative g_{mu nu, rho}
    Expr g_upper(int mu, int nu) const;            // adj/det

    Expr christoffel(int mu, int nu, int rho); // upper, lower, lower
    Expr riemann(int mu, int nu, int rho, int sigma);
    Expr ricci(int nu, int sigma);
    Expr ricci_scalar();
    Expr einstein_lower(int mu, int nu);
    Expr einstein_upper(int mu, int nu);
    Expr ricci_upper(int mu, int nu);

    // covariant derivative: positions is a string over {'u','l'}, one char
    // per slot of T; the result takes the new (leading) lower index first
    std::function<Expr(int, const std::vector<int>&)>
    covariant_derivative(std::function<Expr(const std::vector<int>&)> T, std::string positions);

    Expr dalembertian(FieldId scalar); // g^{mu nu} covariant second derivative

  private:
    World* w_;
    FieldId g_;
    Poly det_;
    std::vector<std::vector<Poly>> adj_; // adjugate (cofactor transpose)
    VarId s_;
    std::vector<Expr> gamma_, riem_, ric_, ricu_, einu_;
    Expr rs_;
    bool have_gamma_ = false, have_riem_ = false, have_ric_ = false, have_rs_ = false,
         have_ricu_ = false;
    std::mutex mu_;
    void build_gamma();
    void build_riem();
    void build_ric();
    void build_ricu();
};

// Scalar matter sector: a scalar field with an opaque potential atom V(phi)
// (derivative chain V -> Vp -> ...) and a symbolic coupling constant kappa.
struct ScalarMatter {
    FieldId phi;
    VarId V;
    VarId kappa;
    static ScalarMatter make(World* w, const std::string& phi_name = "phi");
};

// The metric equations of the Einstein-Klein-Gordon system, as a source form
// over the independent metric components (off-diagonal coefficients doubled),
// plus the scalar-field stress tensor.
SourceForm ekg_source_form(MetricModel& M, const ScalarMatter& S);
Expr ekg_stress_lower(MetricModel& M, const ScalarMatter& S, int mu, int nu);

// Distortion tensor split: L is a tensor(1,2) field with no lower symmetry.
struct DistortionField {
    World* w = nullptr;
    FieldId L;
    Expr component(int a, int b, int c) const;
    Expr Q(int a, int b, int c) const; // symmetric part
    Expr T(int a, int b, int c) const; // antisymmetric part
};

} // namespace vb
