#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "varboot/expr.hpp"
#include "varboot/world.hpp"

using namespace vb;

namespace {

struct MetricWorld2 {
    World w{2};
    FieldId g;
    VarId g00, g01, g11;
    Poly det;
    VarId s;

    MetricWorld2() {
        g = w.add_metric_field("g");
        g00 = w.jet_var(g, {0, 0}, {});
        g01 = w.jet_var(g, {0, 1}, {});
        g11 = w.jet_var(g, {1, 1}, {});
        det = Poly::variable(g00) * Poly::variable(g11) - Poly::variable(g01) * Poly::variable(g01);
        s = w.add_atom("s");
        w.set_atom_relation(s, det);
        w.set_atom_weight(s, g, Rat64(1)); // dim/2
        // d s / d g_{ab} = (d det / d g_{ab}) / (2 s), rationalized via s/det
        Expr sE = Expr::variable(&w, s);
        Expr detE = Expr::from_poly(&w, det);
        auto reg = [&](VarId comp, const Poly& ddet) {
            w.set_atom_partial(s, comp, Expr::from_poly(&w, ddet) * sE / (detE * Expr::constant(&w, Rat(2))));
        };
        reg(g00, Poly::variable(g11));
        reg(g01, Poly::variable(g01).times_rat(Rat(-2)));
        reg(g11, Poly::variable(g00));
    }
};

} // namespace

TEST_CASE("polynomial arithmetic and exact division") {
    World w(1);
    FieldId y = w.add_scalar_field("y");
    VarId y0 = w.jet_var(y, {}, {});
    VarId y1 = w.jet_var(y, {}, {0});
    Poly a = Poly::variable(y0) + Poly::variable(y1);
    Poly sq = a * a;
    CHECK(sq.size() == 3);
    auto q = sq.divided_by(a);
    REQUIRE(q.has_value());
    CHECK(*q == a);
    CHECK(!sq.divided_by(Poly::variable(y0) - Poly::variable(y1)).has_value());
}

TEST_CASE("total derivative basics") {
    World w(2);
    FieldId y = w.add_scalar_field("y");
    VarId y0 = w.jet_var(y, {}, {});
    Expr e = Expr::variable(&w, y0);
    Expr d = e.total_derivative(0);
    CHECK(d.equals(Expr::variable(&w, w.jet_var(y, {}, {0}))));
    // mixed derivatives commute through index sorting
    CHECK(d.total_derivative(1).equals(e.total_derivative(1).total_derivative(0)));
    // Leibniz
    Expr f = e * e + Expr::constant(&w, Rat(3)) * e;
    Expr lhs = (f * e).total_derivative(1);
    Expr rhs = f.total_derivative(1) * e + f * e.total_derivative(1);
    CHECK(lhs.equals(rhs));
}

TEST_CASE("symmetric component canonicalization") {
    World w(3);
    FieldId g = w.add_metric_field("g");
    CHECK(w.canonical_component(g, {1, 0}).comp == std::vector<int>{0, 1});
    CHECK(w.canonical_component(g, {1, 0}).sign == 1);
    CHECK(w.independent_components(g).size() == 6);
    CHECK(w.jet_var(g, {0, 1}, {2, 0}) == w.jet_var(g, {0, 1}, {0, 2}));

    FieldId T = w.add_tensor12_field("T", PairSym::Anti);
    auto c = w.canonical_component(T, {0, 2, 1});
    CHECK(c.comp == std::vector<int>{0, 1, 2});
    CHECK(c.sign == -1);
    CHECK(w.canonical_component(T, {0, 1, 1}).sign == 0);
    CHECK(w.independent_components(T).size() == 9); // 3 upper * 3 antisym pairs
}

TEST_CASE("relation atom reduction and rational denominators") {
    MetricWorld2 m;
    World* w = &m.w;
    Expr sE = Expr::variable(w, m.s);
    Expr detE = Expr::from_poly(w, m.det);
    CHECK((sE * sE).equals(detE));
    CHECK(((Expr::constant(w, Rat(1)) + sE) * (Expr::constant(w, Rat(1)) - sE))
              .equals(Expr::constant(w, Rat(1)) - detE));
    // rationalization: 1/s == s/det
    Expr inv_s = Expr::constant(w, Rat(1)) / sE;
    CHECK(inv_s.equals(sE / detE));
    CHECK((inv_s * sE).equals(Expr::constant(w, Rat(1))));
    // cancellation
    Expr g00E = Expr::variable(w, m.g00);
    CHECK(((detE * g00E) / detE) == g00E);
    // quotient rule
    Expr q = g00E / detE;
    Expr lhs = q.total_derivative(0) * detE * detE;
    Expr rhs = g00E.total_derivative(0) * detE - g00E * detE.total_derivative(0);
    CHECK(lhs.equals(rhs));
}

TEST_CASE("atom partials drive the chain rule") {
    MetricWorld2 m;
    World* w = &m.w;
    Expr sE = Expr::variable(w, m.s);
    Expr detE = Expr::from_poly(w, m.det);
    // 2 s d_mu s == d_mu (s^2) == d_mu det
    Expr lhs = Expr::constant(w, Rat(2)) * sE * sE.total_derivative(0);
    CHECK(lhs.equals(detE.total_derivative(0)));
    // partial of a polynomial in the stored components
    Expr p = Expr::variable(w, m.g00) * Expr::variable(w, m.g00) * Expr::variable(w, m.g01);
    CHECK(p.partial_derivative(m.g00)
              .equals(Expr::constant(w, Rat(2)) * Expr::variable(w, m.g00) * Expr::variable(w, m.g01)));
    // partial of s through the declared table
    Expr expect = Expr::variable(w, m.g01).times(Rat(-1)) * sE / detE;
    CHECK(sE.partial_derivative(m.g01).equals(expect));
    // s does not depend on derivative coordinates
    VarId g00_0 = w->jet_var(m.g, {0, 0}, {0});
    CHECK(sE.partial_derivative(g00_0).is_zero());
}

TEST_CASE("function atoms build a lazy derivative chain") {
    World w(2);
    FieldId phi = w.add_scalar_field("phi");
    VarId p = w.jet_var(phi, {}, {});
    VarId V = w.add_function_atom("V", phi);
    Expr VE = Expr::variable(&w, V);
    Expr d0 = VE.total_derivative(0);
    VarId Vp = *w.find_atom("Vp");
    CHECK(d0.equals(Expr::variable(&w, Vp) * Expr::variable(&w, w.jet_var(phi, {}, {0}))));
    Expr d10 = d0.total_derivative(1);
    VarId Vpp = *w.find_atom("Vpp");
    Expr expect = Expr::variable(&w, Vpp) * Expr::variable(&w, w.jet_var(phi, {}, {0})) *
                      Expr::variable(&w, w.jet_var(phi, {}, {1})) +
                  Expr::variable(&w, Vp) * Expr::variable(&w, w.jet_var(phi, {}, {0, 1}));
    CHECK(d10.equals(expect));
    CHECK(VE.partial_derivative(p).equals(Expr::variable(&w, Vp)));
    // constants have no dependencies at all
    VarId kappa = w.add_atom("kappa");
    CHECK(Expr::variable(&w, kappa).total_derivative(0).is_zero());
}

TEST_CASE("field scaling introduces homotopy weights") {
    MetricWorld2 m;
    World* w = &m.w;
    std::set<FieldId> fg{m.g};
    Expr t1 = Expr::from_poly(w, Poly::constant(Rat(1)).shift_texp(Rat64(1)));
    // components scale linearly
    Expr g00E = Expr::variable(w, m.g00);
    CHECK(g00E.scale_fields(fg).equals(t1 * g00E));
    // s scales with its declared weight (dim/2 = 1 here)
    Expr sE = Expr::variable(w, m.s);
    CHECK(sE.scale_fields(fg).equals(t1 * sE));
    // the inverse metric scales as t^{-1}
    Expr ginv00 = Expr::variable(w, m.g11) / Expr::from_poly(w, m.det);
    Expr scaled = ginv00.scale_fields(fg);
    CHECK((scaled * t1).equals(ginv00));
    CHECK(scaled.has_t());
    CHECK(scaled.at_t_one().equals(ginv00));
    // scaling a field with an atom lacking a weight fails
    VarId a = w->add_atom("a");
    w->set_atom_depends(a, m.g);
    CHECK_THROWS_AS(Expr::variable(w, a).scale_fields(fg), MissingWeight);
}

TEST_CASE("homotopy integration over [0,1]") {
    World w(1);
    FieldId y = w.add_scalar_field("y");
    VarId y0 = w.jet_var(y, {}, {});
    auto tpow = [&](Rat64 e) { return Expr::from_poly(&w, Poly::constant(Rat(1)).shift_texp(e)); };
    CHECK(tpow(Rat64(1)).integrate_homotopy().equals(Expr::constant(&w, Rat(1, 2))));
    CHECK(tpow(Rat64(-1, 2)).integrate_homotopy().equals(Expr::constant(&w, Rat(2))));
    Expr mixed = tpow(Rat64(3)) * Expr::variable(&w, y0) + Expr::constant(&w, Rat(5));
    CHECK(mixed.integrate_homotopy().equals(
        Expr::variable(&w, y0).times(Rat(1, 4)) + Expr::constant(&w, Rat(5))));
    CHECK_THROWS_AS(tpow(Rat64(-1)).integrate_homotopy(), DivergentHomotopy);
    CHECK_THROWS_AS(tpow(Rat64(-3, 2)).integrate_homotopy(), DivergentHomotopy);
    // t trapped in a denominator is not a Laurent integrand
    Expr den = Expr::constant(&w, Rat(1)) + tpow(Rat64(1)) * Expr::variable(&w, y0);
    CHECK_THROWS_AS((Expr::constant(&w, Rat(1)) / den).integrate_homotopy(), NonLaurentIntegrand);
}

TEST_CASE("substitution and evaluation") {
    MetricWorld2 m;
    World* w = &m.w;
    Expr sE = Expr::variable(w, m.s);
    Expr detE = Expr::from_poly(w, m.det);
    std::map<VarId, Expr> flat{{m.g00, Expr::constant(w, Rat(1))},
                               {m.g01, Expr::constant(w, Rat(0))},
                               {m.g11, Expr::constant(w, Rat(4))}};
    CHECK(detE.substitute(flat).equals(Expr::constant(w, Rat(4))));
    Expr r = (Expr::variable(w, m.g00) / detE).substitute(flat);
    CHECK(r.equals(Expr::constant(w, Rat(1, 4))));

    std::map<VarId, Rat> pt{{m.g00, Rat(1)}, {m.g01, Rat(0)}, {m.g11, Rat(4)}};
    CHECK((sE * sE).eval(pt) == ExtVal::rational(Rat(4)));
    ExtVal v = (sE * Expr::variable(w, m.g00)).eval(pt);
    CHECK(v.c.size() == 1);
    CHECK(v.c.begin()->first == 1); // lives on the sqrt(det) axis
    CHECK(v.c.begin()->second == Rat(1));
    CHECK(((Expr::constant(w, Rat(1)) + sE) * (Expr::constant(w, Rat(1)) - sE)).eval(pt) ==
          ExtVal::rational(Rat(-3)));
    CHECK_THROWS_AS(sE.eval({}), MathError);
}
