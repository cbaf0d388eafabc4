// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Each criterion is timed; the wall-time budget is printed alongside.

#include <chrono>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "varboot/geometry.hpp"
#include "varboot/invariant_enum.hpp"
#include "varboot/varcalc.hpp"

using namespace vb;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int idx, const char* what, bool ok, double secs, double budget) {
    std::printf("criterion %d (%s): %s  [%.1fs, budget %.0fs]\n", idx, what,
                ok ? "PASS" : "FAIL", secs, budget);
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

template <typename F> void run(int idx, const char* what, double budget, F body) {
    auto t0 = Clock::now();
    bool ok = false;
    try {
        ok = body();
    } catch (const std::exception& e) {
        std::printf("  exception: %s\n", e.what());
        ok = false;
    }
    double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    report(idx, what, ok && secs < budget, secs, budget);
}

// source form E^{mu nu} = R^{mu nu} sqrt|det g| over the independent metric
// components (off-diagonal entries doubled, matching the pairing convention)
SourceForm ricci_source(World& w, MetricModel& M, FieldId g) {
    SourceForm E;
    E.w = &w;
    E.fields = {g};
    for (const auto& comp : w.independent_components(g)) {
        Expr e = M.ricci_upper(comp[0], comp[1]) * M.s();
        if (comp[0] != comp[1]) e = e + e;
        E.set_coeff(g, comp, std::move(e));
    }
    return E;
}

} // namespace

int main() {
    std::setvbuf(stdout, nullptr, _IOLBF, 0);

    // ---- criteria 1 & 2 share the Einstein-Hilbert world -------------------
    {
        World w(4);
        FieldId g = w.add_metric_field("g");
        MetricModel M(&w, g);

        LagrangianDensity L1;
        run(1, "Einstein-Hilbert recovery", 60, [&] {
            SourceForm E = ricci_source(w, M, g);
            L1 = vainberg_tonti(E, {g});
            return L1.density.equals(M.ricci_scalar() * M.s());
        });

        run(2, "canonical completion", 120, [&] {
            SourceForm E = ricci_source(w, M, g);
            CompletionResult C = variational_completion(E, {g});
            for (const auto& comp : w.independent_components(g)) {
                Expr want = -(M.einstein_upper(comp[0], comp[1]) * M.s());
                if (comp[0] != comp[1]) want = want + want;
                if (!C.completed.coeff(g, comp).equals(want)) return false;
            }
            return true;
        });
    }

    // ---- criterion 3: Einstein-Klein-Gordon bootstrap ----------------------
    run(3, "EKG bootstrap", 120, [&] {
        World w(4);
        FieldId g = w.add_metric_field("g");
        MetricModel M(&w, g);
        ScalarMatter S = ScalarMatter::make(&w);
        SourceForm E = ekg_source_form(M, S);
        BootstrapResult B = bootstrap(E, {g}, {S.phi});

        // L_EKG = (R/2k - (1/2) g^{ab} phi_a phi_b - V(phi)) sqrt|det g|
        Expr kin(&w);
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                kin += M.g_upper(a, b) * Expr::variable(&w, w.jet_var(S.phi, {}, {a})) *
                       Expr::variable(&w, w.jet_var(S.phi, {}, {b}));
        Expr inv2kappa = Expr::constant(&w, Rat(1, 2)) / Expr::variable(&w, S.kappa);
        Expr lag =
            (M.ricci_scalar() * inv2kappa - kin.times(Rat(1, 2)) - Expr::variable(&w, S.V)) *
            M.s();
        if (!B.lagrangian.density.equals(lag)) return false;

        // metric equations come back exactly
        if (!B.completed_vary_eqs.equals(E)) return false;

        // phi equation equals -(box phi - V'(phi)) sqrt|det g| up to overall sign
        Expr kg = (M.dalembertian(S.phi) - Expr::variable(&w, w.atom_derivative(S.V))) * M.s();
        const Expr& got = B.passive_eqs.coeff(S.phi, {});
        return got.equals(kg) || got.equals(-kg);
    });

    // ---- criterion 4: Helmholtz soundness (property) -----------------------
    run(4, "Helmholtz soundness", 60, [&] {
        World w(2);
        FieldId y = w.add_scalar_field("y");
        FieldId z = w.add_scalar_field("z");
        std::vector<VarId> vars;
        for (FieldId f : {y, z}) {
            vars.push_back(w.jet_var(f, {}, {}));
            for (int mu = 0; mu < 2; ++mu) vars.push_back(w.jet_var(f, {}, {mu}));
        }
        std::mt19937 rng(20260823);
        // gradients always pass
        for (int i = 0; i < 50; ++i) {
            LagrangianDensity L{&w, vbt::random_poly(w, vars, rng, 5, 3)};
            SourceForm E = euler_lagrange(L, {y, z});
            if (!helmholtz(E).all_zero()) return false;
        }
        // one-term forms containing a factor of y_0 are never gradients:
        // H1[y][y][0] = 2 dE_y/dy_0 != 0 for first-order E
        for (int i = 0; i < 20; ++i) {
            Expr term = Expr::variable(&w, w.jet_var(y, {}, {0})) *
                        vbt::random_poly(w, vars, rng, 1, 2);
            SourceForm E;
            E.w = &w;
            E.fields = {y, z};
            E.set_coeff(y, {}, std::move(term));
            E.set_coeff(z, {}, Expr(&w));
            if (helmholtz(E).all_zero()) return false;
        }
        return true;
    });

    // ---- criterion 5: correction identity (property) -----------------------
    run(5, "correction identity", 120, [&] {
        World w(1);
        FieldId y = w.add_scalar_field("y");
        FieldId z = w.add_scalar_field("z");
        std::vector<VarId> vars;
        for (FieldId f : {y, z}) {
            vars.push_back(w.jet_var(f, {}, {}));
            vars.push_back(w.jet_var(f, {}, {0}));
            vars.push_back(w.jet_var(f, {}, {0, 0}));
        }
        std::mt19937 rng(555);
        for (int i = 0; i < 20; ++i) {
            SourceForm E;
            E.w = &w;
            E.fields = {y, z};
            E.set_coeff(y, {}, vbt::random_poly(w, vars, rng, 4, 2));
            E.set_coeff(z, {}, vbt::random_poly(w, vars, rng, 4, 2));
            // variational_completion throws if the identity fails to verify
            CompletionResult C = variational_completion(E, {y, z});
            if (!C.identity_checked) return false;
        }
        return true;
    });

    // ---- criteria 6-9 share the distortion world ----------------------------
    World wd(4);
    DistortionVars dv = DistortionVars::make(&wd);
    InvariantBasis B4;

    run(6, "catalogue counts", 600, [&] {
        int want[5] = {0, 2, 4, 18, 65};
        for (int k = 1; k <= 4; ++k) {
            InvariantBasis B = enumerate_algebraic(dv, k);
            if (static_cast<int>(B.members.size()) != want[k]) return false;
            if (B.cert.rank != want[k]) return false;
            if (k == 4) B4 = std::move(B);
        }
        FirstOrderCatalogue C = enumerate_first_order(dv);
        if (C.terms.size() != 29 || C.nontrivial_classes != 8) return false;
        auto [qa, qf] = q_only_sector(dv);
        return qa == 1 && qf == 0;
    });

    run(7, "structural zeros", 60, [&] {
        auto pf = [](FactorKind k, int s0, int s1) {
            PatternFactor f;
            f.kind = k;
            f.slot[0] = s0;
            f.slot[1] = s1;
            return f;
        };
        auto cycle4 = [&](std::vector<FactorKind> kinds) {
            ContractionPattern p;
            int ref[4] = {1, 2, 3, 0};
            for (size_t i = 0; i < kinds.size(); ++i)
                p.factors.push_back(pf(kinds[i], ref[i], kWedgeSlot));
            return p;
        };
        ContractionPattern lTT, lTQ;
        lTT.factors = {pf(FactorKind::T, kWedgeSlot, kWedgeSlot),
                       pf(FactorKind::T, kWedgeSlot, kWedgeSlot), pf(FactorKind::T, 0, 1),
                       pf(FactorKind::T, 2, 3)};
        lTQ = lTT;
        lTQ.factors[3].kind = FactorKind::Q;
        std::vector<ContractionPattern> zs = {
            lTT, lTQ, cycle4({FactorKind::T, FactorKind::T, FactorKind::T, FactorKind::T}),
            cycle4({FactorKind::Q, FactorKind::Q, FactorKind::Q, FactorKind::Q})};
        for (const auto& p : zs)
            if (!instantiate(dv, p).is_zero()) return false;
        return true;
    });

    run(8, "d_H calculus", 120, [&] {
        // jet variables of a few T and Q components, orders 0 and 1
        std::vector<VarId> vars;
        for (FieldId f : {dv.T, dv.Q})
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    CanonComp cc = wd.canonical_component(f, {a, 0, b});
                    if (cc.sign == 0) continue;
                    vars.push_back(wd.jet_var(f, cc.comp, {}));
                    vars.push_back(wd.jet_var(f, cc.comp, {1}));
                }
        std::mt19937 rng(88);
        std::uniform_int_distribution<int> degd(0, 2);
        for (int i = 0; i < 100; ++i) {
            int deg = degd(rng);
            HorizontalForm f(&wd, deg);
            std::vector<int> tau(static_cast<size_t>(deg));
            std::uniform_int_distribution<int> axis(0, 3);
            for (int t = 0; t < 3; ++t) {
                for (auto& x : tau) x = axis(rng);
                f.add_term(tau, vbt::random_poly(wd, vars, rng, 3, 2));
            }
            if (!d_H(d_H(f)).is_zero()) return false;
        }
        // (0,2)-profile first-order 4-forms (quadratic in the derivative of
        // the distortion) are all total divergences
        FirstOrderCatalogue C = enumerate_first_order(dv);
        for (const auto& t : C.terms) {
            if (t.family != 0) continue;
            LagrangianDensity L{&wd, density_of(t.form)};
            if (!is_trivial(L, {dv.T, dv.Q})) return false;
        }
        return true;
    });

    run(9, "equivariance", 300, [&] {
        if (B4.members.empty()) B4 = enumerate_algebraic(dv, 4);
        if (B4.members.size() != 65) return false;
        uint64_t seed = 7;
        for (const auto& m : B4.members)
            if (!equivariance_check_form(dv, m.form, 10, seed++)) return false;
        return true;
    });

    if (g_failures) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all 9 criteria PASS\n");
    return 0;
}
