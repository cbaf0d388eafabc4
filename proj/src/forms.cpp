#include "varboot/forms.hpp"

#include <algorithm>

namespace vb {

int sort_sign(std::vector<int>& tau) {
    int sign = 1;
    for (size_t i = 0; i + 1 < tau.size(); ++i)
        for (size_t j = 0; j + 1 < tau.size() - i; ++j)
            if (tau[j] > tau[j + 1]) {
                std::swap(tau[j], tau[j + 1]);
                sign = -sign;
            }
    for (size_t i = 0; i + 1 < tau.size(); ++i)
        if (tau[i] == tau[i + 1]) return 0;
    return sign;
}

HorizontalForm HorizontalForm::dx(World* w, int tau) {
    HorizontalForm f(w, 1);
    f.add_term({tau}, Expr::constant(w, Rat(1)));
    return f;
}

HorizontalForm HorizontalForm::scalar(World* w, Expr e) {
    HorizontalForm f(w, 0);
    f.add_term({}, e);
    return f;
}

bool HorizontalForm::is_zero() const { return coeffs_.empty(); }

void HorizontalForm::add_term(std::vector<int> tau, const Expr& c) {
    if (c.is_zero()) return;
    int sign = sort_sign(tau);
    if (sign == 0) return;
    for (int t : tau)
        if (t < 0 || t >= w_->dim()) throw DimensionMismatch("form index out of range");
    Expr& slot = coeffs_.try_emplace(std::move(tau), Expr(w_)).first->second;
    slot += sign == 1 ? c : -c;
    prune();
}

Expr HorizontalForm::coeff(std::vector<int> tau) const {
    int sign = sort_sign(tau);
    if (sign == 0) return Expr(w_);
    auto it = coeffs_.find(tau);
    if (it == coeffs_.end()) return Expr(w_);
    return sign == 1 ? it->second : -it->second;
}

void HorizontalForm::prune() {
    for (auto it = coeffs_.begin(); it != coeffs_.end();) {
        if (it->second.is_zero())
            it = coeffs_.erase(it);
        else
            ++it;
    }
}

HorizontalForm operator+(const HorizontalForm& a, const HorizontalForm& b) {
    if (!a.w_) return b;
    if (!b.w_) return a;
    if (a.degree_ != b.degree_) throw DegreeMismatch("cannot add forms of different degree");
    HorizontalForm r = a;
    for (const auto& [tau, c] : b.coeffs_) {
        Expr& slot = r.coeffs_.try_emplace(tau, Expr(r.w_)).first->second;
        slot += c;
    }
    r.prune();
    return r;
}

HorizontalForm HorizontalForm::operator-() const {
    HorizontalForm r = *this;
    for (auto& [tau, c] : r.coeffs_) c = -c;
    return r;
}

HorizontalForm operator-(const HorizontalForm& a, const HorizontalForm& b) { return a + (-b); }

HorizontalForm HorizontalForm::times(const Expr& c) const {
    HorizontalForm r(w_, degree_);
    for (const auto& [tau, e] : coeffs_) {
        Expr p = e * c;
        if (!p.is_zero()) r.coeffs_.emplace(tau, std::move(p));
    }
    return r;
}

bool HorizontalForm::equals(const HorizontalForm& o) const {
    return (*this - o).is_zero();
}

HorizontalForm wedge(const HorizontalForm& a, const HorizontalForm& b) {
    if (a.w_ != b.w_ || !a.w_) throw DimensionMismatch("wedge of forms over different models");
    int m = a.w_->dim();
    HorizontalForm r(a.w_, a.degree_ + b.degree_);
    if (r.degree_ > m) return HorizontalForm(a.w_, r.degree_);
    for (const auto& [ta, ca] : a.coeffs_)
        for (const auto& [tb, cb] : b.coeffs_) {
            std::vector<int> tau = ta;
            tau.insert(tau.end(), tb.begin(), tb.end());
            r.add_term(std::move(tau), ca * cb);
        }
    return r;
}

HorizontalForm d_H(const HorizontalForm& a) {
    World* w = a.w_;
    HorizontalForm r(w, a.degree_ + 1);
    if (a.degree_ >= w->dim()) return r;
    for (const auto& [tau, c] : a.coeffs_) {
        for (int mu = 0; mu < w->dim(); ++mu) {
            std::vector<int> nt;
            nt.reserve(tau.size() + 1);
            nt.push_back(mu);
            nt.insert(nt.end(), tau.begin(), tau.end());
            r.add_term(std::move(nt), c.total_derivative(mu));
        }
    }
    return r;
}

Expr density_of(const HorizontalForm& a) {
    World* w = a.world();
    if (a.degree() != w->dim()) throw DegreeMismatch("density requires a top-degree form");
    std::vector<int> top(static_cast<size_t>(w->dim()));
    for (int i = 0; i < w->dim(); ++i) top[static_cast<size_t>(i)] = i;
    return a.coeff(top);
}

} // namespace vb
