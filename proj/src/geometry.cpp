#include "varboot/geometry.hpp"

#include <cassert>

namespace vb {

static Poly matrix_det(const std::vector<std::vector<Poly>>& M) {
    size_t n = M.size();
    if (n == 1) return M[0][0];
    Poly d;
    for (size_t j = 0; j < n; ++j) {
        std::vector<std::vector<Poly>> minor;
        minor.reserve(n - 1);
        for (size_t r = 1; r < n; ++r) {
            std::vector<Poly> row;
            row.reserve(n - 1);
            for (size_t c = 0; c < n; ++c)
                if (c != j) row.push_back(M[r][c]);
            minor.push_back(std::move(row));
        }
        Poly term = M[0][j] * matrix_det(minor);
        d = (j % 2) ? d - term : d + term;
    }
    return d;
}

MetricModel::MetricModel(World* w, FieldId g) : w_(w), g_(g) {
    int m = w->dim();
    std::vector<std::vector<Poly>> M(static_cast<size_t>(m), std::vector<Poly>(static_cast<size_t>(m)));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            M[i][j] = Poly::variable(w->jet_var(g, {std::min(i, j), std::max(i, j)}, {}));
    det_ = matrix_det(M);
    adj_.assign(static_cast<size_t>(m), std::vector<Poly>(static_cast<size_t>(m)));
    if (m == 1) {
        adj_[0][0] = Poly::constant(Rat(1));
    } else {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                std::vector<std::vector<Poly>> minor;
                for (int r = 0; r < m; ++r) {
                    if (r == j) continue;
                    std::vector<Poly> row;
                    for (int c = 0; c < m; ++c)
                        if (c != i) row.push_back(M[r][c]);
                    minor.push_back(std::move(row));
                }
                Poly cof = matrix_det(minor);
                adj_[i][j] = ((i + j) % 2) ? -cof : cof;
            }
    }
    std::string sname = "sqrt_det_" + w->field(g).name;
    if (auto existing = w->find_atom(sname)) {
        s_ = *existing;
        return;
    }
    s_ = w->add_atom(sname);
    w->set_atom_relation(s_, det_);
    w->set_atom_weight(s_, g, Rat64(m, 2));
    Expr sE = Expr::variable(w, s_);
    Expr two_det = Expr::from_poly(w, det_).times(Rat(2));
    for (int mu = 0; mu < m; ++mu)
        for (int nu = mu; nu < m; ++nu) {
            Rat fac = (mu == nu) ? Rat(1) : Rat(2);
            Expr p = Expr::from_poly(w, adj_[mu][nu]).times(fac) * sE / two_det;
            w->set_atom_partial(s_, w->jet_var(g, {mu, nu}, {}), p);
        }
}

Expr MetricModel::g_lower(int mu, int nu) const {
    return Expr::variable(w_, w_->jet_var(g_, {std::min(mu, nu), std::max(mu, nu)}, {}));
}

Expr MetricModel::g_lower(int mu, int nu, int rho) const {
    return Expr::variable(w_, w_->jet_var(g_, {std::min(mu, nu), std::max(mu, nu)}, {rho}));
}

Expr MetricModel::g_upper(int mu, int nu) const {
    return Expr::from_poly(w_, adj_[mu][nu]) / Expr::from_poly(w_, det_);
}

void MetricModel::build_gamma() {
    if (have_gamma_) return;
    int m = dim();
    gamma_.assign(static_cast<size_t>(m * m * m), Expr(w_));
    Expr inv2det = Expr::constant(w_, Rat(1)) / Expr::from_poly(w_, det_).times(Rat(2));
    for (int mu = 0; mu < m; ++mu)
        for (int nu = 0; nu < m; ++nu)
            for (int rho = nu; rho < m; ++rho) {
                Expr sum(w_);
                for (int al = 0; al < m; ++al) {
                    Expr br = g_lower(al, nu, rho) + g_lower(al, rho, nu) - g_lower(nu, rho, al);
                    sum += Expr::from_poly(w_, adj_[mu][al]) * br;
                }
                Expr ga = sum * inv2det;
                gamma_[static_cast<size_t>((mu * m + nu) * m + rho)] = ga;
                gamma_[static_cast<size_t>((mu * m + rho) * m + nu)] = ga;
            }
    have_gamma_ = true;
}

Expr MetricModel::christoffel(int mu, int nu, int rho) {
    std::lock_guard<std::mutex> lk(mu_);
    build_gamma();
    int m = dim();
    return gamma_[static_cast<size_t>((mu * m + nu) * m + rho)];
}

void MetricModel::build_riem() {
    if (have_riem_) return;
    build_gamma();
    int m = dim();
    riem_.assign(static_cast<size_t>(m * m * m * m), Expr(w_));
    auto G = [&](int a, int b, int c) -> const Expr& {
        return gamma_[static_cast<size_t>((a * m + b) * m + c)];
    };
    for (int mu = 0; mu < m; ++mu)
        for (int nu = 0; nu < m; ++nu)
            for (int rho = 0; rho < m; ++rho)
                for (int sg = rho + 1; sg < m; ++sg) {
                    Expr r = G(mu, nu, sg).total_derivative(rho) -
                             G(mu, nu, rho).total_derivative(sg);
                    for (int la = 0; la < m; ++la)
                        r += G(mu, rho, la) * G(la, nu, sg) - G(mu, sg, la) * G(la, nu, rho);
                    riem_[static_cast<size_t>(((mu * m + nu) * m + rho) * m + sg)] = r;
                    riem_[static_cast<size_t>(((mu * m + nu) * m + sg) * m + rho)] = -r;
                }
    have_riem_ = true;
}

Expr MetricModel::riemann(int mu, int nu, int rho, int sg) {
    std::lock_guard<std::mutex> lk(mu_);
    build_riem();
    int m = dim();
    return riem_[static_cast<size_t>(((mu * m + nu) * m + rho) * m + sg)];
}

void MetricModel::build_ric() {
    if (have_ric_) return;
    build_riem();
    int m = dim();
    ric_.assign(static_cast<size_t>(m * m), Expr(w_));
    for (int nu = 0; nu < m; ++nu)
        for (int sg = nu; sg < m; ++sg) {
            Expr r(w_);
            for (int mu = 0; mu < m; ++mu)
                r += riem_[static_cast<size_t>(((mu * m + nu) * m + mu) * m + sg)];
            ric_[static_cast<size_t>(nu * m + sg)] = r;
            ric_[static_cast<size_t>(sg * m + nu)] = r;
        }
    have_ric_ = true;
}

Expr MetricModel::ricci(int nu, int sg) {
    std::lock_guard<std::mutex> lk(mu_);
    build_ric();
    return ric_[static_cast<size_t>(nu * dim() + sg)];
}

Expr MetricModel::ricci_scalar() {
    std::lock_guard<std::mutex> lk(mu_);
    build_ric();
    if (!have_rs_) {
        int m = dim();
        Expr r(w_);
        for (int nu = 0; nu < m; ++nu)
            for (int sg = 0; sg < m; ++sg)
                r += Expr::from_poly(w_, adj_[nu][sg]) * ric_[static_cast<size_t>(nu * m + sg)];
        rs_ = r / Expr::from_poly(w_, det_);
        have_rs_ = true;
    }
    return rs_;
}

Expr MetricModel::einstein_lower(int mu, int nu) {
    Expr half_r = ricci_scalar().times(Rat(1, 2));
    return ricci(mu, nu) - half_r * g_lower(mu, nu);
}

void MetricModel::build_ricu() {
    if (have_ricu_) return;
    build_ric();
    int m = dim();
    // contract one index at a time and reuse the inner contraction
    std::vector<Expr> B(static_cast<size_t>(m * m), Expr(w_));
    for (int nu = 0; nu < m; ++nu)
        for (int al = 0; al < m; ++al) {
            Expr s(w_);
            for (int be = 0; be < m; ++be)
                s += Expr::from_poly(w_, adj_[nu][be]) * ric_[static_cast<size_t>(al * m + be)];
            B[static_cast<size_t>(nu * m + al)] = s;
        }
    Expr detx = Expr::from_poly(w_, det_);
    // the trace of B is R * det, so the Einstein tensor shares this ladder
    Expr half_trB(w_);
    for (int al = 0; al < m; ++al) half_trB += B[static_cast<size_t>(al * m + al)];
    half_trB = half_trB.times(Rat(1, 2));
    if (!have_rs_) {
        rs_ = (half_trB + half_trB) / Expr::from_poly(w_, det_);
        have_rs_ = true;
    }
    ricu_.assign(static_cast<size_t>(m * m), Expr(w_));
    einu_.assign(static_cast<size_t>(m * m), Expr(w_));
    for (int mu = 0; mu < m; ++mu)
        for (int nu = mu; nu < m; ++nu) {
            Expr r(w_);
            for (int al = 0; al < m; ++al)
                r += Expr::from_poly(w_, adj_[mu][al]) * B[static_cast<size_t>(nu * m + al)];
            // divide by det twice so the denominator stays det^2 rather than
            // an opaque expanded det*det factor
            Expr e = (r - half_trB * Expr::from_poly(w_, adj_[mu][nu])) / detx / detx;
            r = r / detx / detx;
            ricu_[static_cast<size_t>(mu * m + nu)] = r;
            ricu_[static_cast<size_t>(nu * m + mu)] = r;
            einu_[static_cast<size_t>(mu * m + nu)] = e;
            einu_[static_cast<size_t>(nu * m + mu)] = std::move(e);
        }
    have_ricu_ = true;
}

Expr MetricModel::ricci_upper(int mu, int nu) {
    std::lock_guard<std::mutex> lk(mu_);
    build_ricu();
    return ricu_[static_cast<size_t>(mu * dim() + nu)];
}

Expr MetricModel::einstein_upper(int mu, int nu) {
    std::lock_guard<std::mutex> lk(mu_);
    build_ricu();
    return einu_[static_cast<size_t>(mu * dim() + nu)];
}

std::function<Expr(int, const std::vector<int>&)>
MetricModel::covariant_derivative(std::function<Expr(const std::vector<int>&)> T,
                                  std::string positions) {
    christoffel(0, 0, 0); // force the cache
    return [this, T = std::move(T), positions = std::move(positions)](
               int mu, const std::vector<int>& comp) -> Expr {
        assert(comp.size() == positions.size());
        int m = dim();
        Expr r = T(comp).total_derivative(mu);
        for (size_t slot = 0; slot < positions.size(); ++slot) {
            for (int la = 0; la < m; ++la) {
                std::vector<int> c = comp;
                c[slot] = la;
                if (positions[slot] == 'u')
                    r += christoffel(comp[slot], mu, la) * T(c);
                else
                    r -= christoffel(la, mu, comp[slot]) * T(c);
            }
        }
        return r;
    };
}

Expr MetricModel::dalembertian(FieldId scalar) {
    int m = dim();
    Expr r(w_);
    for (int mu = 0; mu < m; ++mu)
        for (int nu = 0; nu < m; ++nu) {
            Expr second = Expr::variable(w_, w_->jet_var(scalar, {}, {mu, nu}));
            for (int la = 0; la < m; ++la)
                second -= christoffel(la, mu, nu) * Expr::variable(w_, w_->jet_var(scalar, {}, {la}));
            r += g_upper(mu, nu) * second;
        }
    return r;
}

ScalarMatter ScalarMatter::make(World* w, const std::string& phi_name) {
    ScalarMatter s;
    s.phi = w->add_scalar_field(phi_name);
    s.V = w->add_function_atom("V", s.phi);
    s.kappa = w->add_atom("kappa");
    return s;
}

Expr ekg_stress_lower(MetricModel& M, const ScalarMatter& S, int mu, int nu) {
    World* w = M.world();
    int m = M.dim();
    auto dphi = [&](int a) { return Expr::variable(w, w->jet_var(S.phi, {}, {a})); };
    Expr kin(w);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) kin += M.g_upper(a, b) * dphi(a) * dphi(b);
    return dphi(mu) * dphi(nu) - (kin.times(Rat(1, 2)) + Expr::variable(w, S.V)) * M.g_lower(mu, nu);
}

SourceForm ekg_source_form(MetricModel& M, const ScalarMatter& S) {
    World* w = M.world();
    int m = M.dim();
    auto dphi = [&](int a) { return Expr::variable(w, w->jet_var(S.phi, {}, {a})); };
    Expr kin(w);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) kin += M.g_upper(a, b) * dphi(a) * dphi(b);
    Expr inv_kappa = Expr::constant(w, Rat(1)) / Expr::variable(w, S.kappa);
    SourceForm E;
    E.w = w;
    E.fields.push_back(M.field());
    for (int mu = 0; mu < m; ++mu)
        for (int nu = mu; nu < m; ++nu) {
            Expr phiup_mu(w), phiup_nu(w);
            for (int a = 0; a < m; ++a) {
                phiup_mu += M.g_upper(mu, a) * dphi(a);
                phiup_nu += M.g_upper(nu, a) * dphi(a);
            }
            Expr core = inv_kappa * M.einstein_upper(mu, nu) - phiup_mu * phiup_nu +
                        (kin.times(Rat(1, 2)) + Expr::variable(w, S.V)) * M.g_upper(mu, nu);
            Expr e = core.times(Rat(-1, 2)) * M.s();
            // stored coefficient pairs with the independent component, so
            // off-diagonal entries carry both (mu,nu) and (nu,mu)
            if (mu != nu) e = e.times(Rat(2));
            E.coeffs[{M.field(), {mu, nu}}] = std::move(e);
        }
    return E;
}

Expr DistortionField::component(int a, int b, int c) const {
    return Expr::variable(w, w->jet_var(L, {a, b, c}, {}));
}

Expr DistortionField::Q(int a, int b, int c) const {
    return (component(a, b, c) + component(a, c, b)).times(Rat(1, 2));
}

Expr DistortionField::T(int a, int b, int c) const {
    return (component(a, b, c) - component(a, c, b)).times(Rat(1, 2));
}

} // namespace vb
