#pragma once

#include <random>
#include <vector>

#include "varboot/expr.hpp"

namespace vbt {

// random polynomial Expr over the given variables
inline vb::Expr random_poly(vb::World& w, const std::vector<vb::VarId>& vars, std::mt19937& rng,
                            int max_terms = 4, int max_deg = 3, int coef_range = 5) {
    std::uniform_int_distribution<int> nterms(1, max_terms);
    std::uniform_int_distribution<int> deg(0, max_deg);
    std::uniform_int_distribution<size_t> pick(0, vars.size() - 1);
    std::uniform_int_distribution<int> coef(-coef_range, coef_range);
    std::vector<vb::Term> ts;
    int n = nterms(rng);
    for (int i = 0; i < n; ++i) {
        vb::Monomial m;
        int d = deg(rng);
        std::vector<uint32_t> exps;
        std::map<vb::VarId, uint32_t> e;
        for (int k = 0; k < d; ++k) e[vars[pick(rng)]]++;
        for (auto& [v, x] : e) m.v.push_back(vb::Monomial::pack(v, x));
        int c = coef(rng);
        if (c == 0) c = 1;
        ts.push_back({std::move(m), vb::Rat(c)});
    }
    return vb::Expr::from_poly(&w, vb::Poly::from_terms(std::move(ts)));
}

} // namespace vbt
