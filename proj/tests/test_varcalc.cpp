#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "test_util.hpp"
#include "varboot/varcalc.hpp"

using namespace vb;

TEST_CASE("Euler-Lagrange basics") {
    World w(1);
    FieldId y = w.add_scalar_field("y");
    Expr ye = Expr::variable(&w, w.jet_var(y, {}, {}));
    Expr y0 = Expr::variable(&w, w.jet_var(y, {}, {0}));

    SourceForm E = euler_lagrange({&w, ye * ye.times(Rat(1, 2))}, y);
    CHECK(E.coeff(y, {}).equals(ye));

    // total divergence: d_0(y*y_0)
    LagrangianDensity div{&w, (ye * y0).total_derivative(0)};
    CHECK(euler_lagrange(div, y).is_zero());
    CHECK(is_trivial(div, {y}));
    CHECK(!is_trivial({&w, y0 * y0.times(Rat(1, 2))}, {y}));

    // L = y_0^2/2 -> E = -y_00
    SourceForm E2 = euler_lagrange({&w, y0 * y0.times(Rat(1, 2))}, y);
    CHECK(E2.coeff(y, {}).equals(-Expr::variable(&w, w.jet_var(y, {}, {0, 0}))));
    CHECK(is_variational(E2));
}

TEST_CASE("Helmholtz detects non-variational systems") {
    World w(1);
    FieldId y = w.add_scalar_field("y");
    SourceForm E;
    E.w = &w;
    E.set_coeff(y, {}, Expr::variable(&w, w.jet_var(y, {}, {0})));
    HelmholtzTensor H = helmholtz(E);
    CHECK(!H.all_zero());
    auto it = H.H1.find({0, 0, 0});
    REQUIRE(it != H.H1.end());
    CHECK(it->second.equals(Expr::constant(&w, Rat(2))));
    CHECK(!is_variational(E));
    // order cap
    SourceForm E3;
    E3.w = &w;
    E3.set_coeff(y, {}, Expr::variable(&w, w.jet_var(y, {}, {0, 0, 0})));
    CHECK_THROWS_AS(helmholtz(E3), OrderTooHigh);
}

TEST_CASE("Vainberg-Tonti basics") {
    World w(1);
    FieldId y = w.add_scalar_field("y");
    Expr ye = Expr::variable(&w, w.jet_var(y, {}, {}));
    SourceForm E;
    E.w = &w;
    E.set_coeff(y, {}, -ye);
    LagrangianDensity L = vainberg_tonti(E, {y});
    CHECK(L.density.equals((ye * ye).times(Rat(-1, 2))));
    // pure obstruction case: E = y_0 integrates to L = y y_0 / 2, whose EL vanishes
    SourceForm Eo;
    Eo.w = &w;
    Eo.set_coeff(y, {}, Expr::variable(&w, w.jet_var(y, {}, {0})));
    auto comp = variational_completion(Eo, {y});
    CHECK(comp.lagrangian.density.equals(
        (ye * Expr::variable(&w, w.jet_var(y, {}, {0}))).times(Rat(1, 2))));
    CHECK(comp.completed.is_zero());
    CHECK(comp.identity_checked);
}

TEST_CASE("properties: Helmholtz of EL vanishes; VT is a fixed point; linearity") {
    World w(2);
    FieldId y = w.add_scalar_field("y");
    FieldId z = w.add_scalar_field("z");
    std::vector<VarId> vars;
    for (FieldId f : {y, z}) {
        vars.push_back(w.jet_var(f, {}, {}));
        for (int mu = 0; mu < 2; ++mu) vars.push_back(w.jet_var(f, {}, {mu}));
    }
    std::mt19937 rng(4242);
    for (int trial = 0; trial < 50; ++trial) {
        LagrangianDensity L{&w, vbt::random_poly(w, vars, rng)};
        SourceForm E = euler_lagrange(L, {y, z});
        CHECK(helmholtz(E).all_zero());
        // VT fixed point
        SourceForm E2 = euler_lagrange(vainberg_tonti(E, {y, z}), {y, z});
        CHECK(E2.equals(E));
    }
    // EL of random divergences vanishes
    for (int trial = 0; trial < 50; ++trial) {
        Expr f0 = vbt::random_poly(w, vars, rng);
        Expr f1 = vbt::random_poly(w, vars, rng);
        LagrangianDensity L{&w, f0.total_derivative(0) + f1.total_derivative(1)};
        CHECK(euler_lagrange(L, {y, z}).is_zero());
    }
    // linearity
    for (int trial = 0; trial < 10; ++trial) {
        LagrangianDensity L1{&w, vbt::random_poly(w, vars, rng)};
        LagrangianDensity L2{&w, vbt::random_poly(w, vars, rng)};
        LagrangianDensity L3{&w, L1.density.times(Rat(3)) + L2.density.times(Rat(-7, 2))};
        SourceForm lhs = euler_lagrange(L3, {y, z});
        SourceForm rhs;
        rhs.w = &w;
        SourceForm e1 = euler_lagrange(L1, {y, z}), e2 = euler_lagrange(L2, {y, z});
        for (FieldId f : {y, z})
            rhs.set_coeff(f, {}, e1.coeff(f, {}).times(Rat(3)) + e2.coeff(f, {}).times(Rat(-7, 2)));
        CHECK(lhs.equals(rhs));
    }
}

TEST_CASE("correction identity holds for random order-2 source forms") {
    World w(2);
    FieldId y = w.add_scalar_field("y");
    FieldId z = w.add_scalar_field("z");
    std::vector<VarId> vars;
    for (FieldId f : {y, z}) {
        vars.push_back(w.jet_var(f, {}, {}));
        for (int mu = 0; mu < 2; ++mu) {
            vars.push_back(w.jet_var(f, {}, {mu}));
            for (int nu = mu; nu < 2; ++nu) vars.push_back(w.jet_var(f, {}, {mu, nu}));
        }
    }
    std::mt19937 rng(777);
    int done = 0;
    for (int trial = 0; done < 20; ++trial) {
        REQUIRE(trial < 200);
        SourceForm E;
        E.w = &w;
        E.set_coeff(y, {}, vbt::random_poly(w, vars, rng, 3, 2));
        E.set_coeff(z, {}, vbt::random_poly(w, vars, rng, 3, 2));
        // variational_completion verifies the correction identity internally
        // and throws if it fails
        auto r = variational_completion(E, {y, z});
        CHECK(r.identity_checked);
        ++done;
    }
}

TEST_CASE("bootstrap splits varied and passive equations") {
    World w(1);
    FieldId y = w.add_scalar_field("y");
    FieldId z = w.add_scalar_field("z");
    Expr ye = Expr::variable(&w, w.jet_var(y, {}, {}));
    Expr ze = Expr::variable(&w, w.jet_var(z, {}, {}));

    // E = -y, passive field absent
    SourceForm E1;
    E1.w = &w;
    E1.set_coeff(y, {}, -ye);
    auto r1 = bootstrap(E1, {y}, {z});
    CHECK(r1.lagrangian.density.equals((ye * ye).times(Rat(-1, 2))));
    CHECK(r1.passive_eqs.is_zero());
    CHECK(r1.passive_up_to_lambda2);

    // E = -z^2 y: lambda_1 = -z^2 y^2/2, z-equation -z y^2
    SourceForm E2;
    E2.w = &w;
    E2.set_coeff(y, {}, -(ze * ze * ye));
    auto r2 = bootstrap(E2, {y}, {z});
    CHECK(r2.lagrangian.density.equals((ze * ze * ye * ye).times(Rat(-1, 2))));
    CHECK(r2.completed_vary_eqs.coeff(y, {}).equals(-(ze * ze * ye)));
    CHECK(r2.passive_eqs.coeff(z, {}).equals(-(ze * ye * ye)));
}

TEST_CASE("bootstrap decomposition property") {
    // L = L1(y,z) + L2(z): bootstrapping the y-equations recovers the y-EL
    // exactly and the z-EL up to EL(L2)
    World w(2);
    FieldId y = w.add_scalar_field("y");
    FieldId z = w.add_scalar_field("z");
    std::vector<VarId> yzvars, zvars;
    for (FieldId f : {y, z}) {
        yzvars.push_back(w.jet_var(f, {}, {}));
        for (int mu = 0; mu < 2; ++mu) yzvars.push_back(w.jet_var(f, {}, {mu}));
    }
    zvars = {w.jet_var(z, {}, {}), w.jet_var(z, {}, {0}), w.jet_var(z, {}, {1})};
    std::mt19937 rng(31337);
    for (int trial = 0; trial < 10; ++trial) {
        // force every L1 monomial to touch y so the y-independent part is exactly L2
        LagrangianDensity L1{&w, Expr::variable(&w, w.jet_var(y, {}, {})) *
                                     vbt::random_poly(w, yzvars, rng)};
        LagrangianDensity L2{&w, vbt::random_poly(w, zvars, rng)};
        LagrangianDensity L{&w, L1.density + L2.density};
        SourceForm Ey = euler_lagrange(L, y);
        auto r = bootstrap(Ey, {y}, {z});
        CHECK(r.completed_vary_eqs.coeff(y, {}).equals(Ey.coeff(y, {})));
        Expr zgap = euler_lagrange(L, z).coeff(z, {}) - r.passive_eqs.coeff(z, {});
        CHECK(zgap.equals(euler_lagrange(L2, z).coeff(z, {})));
    }
}
