#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "varboot/cli.hpp"
#include "varboot/geometry.hpp"

using namespace vb;
using json = nlohmann::json;

namespace {

ModelSpec scalar_model(int dim = 2) {
    std::string text = "dim " + std::to_string(dim) + "\nfield y scalar\n";
    return parse_model_text(text);
}

std::string write_temp(const std::string& name, const std::string& text) {
    std::string path = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") +
                       "/" + name;
    std::ofstream(path) << text;
    return path;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string repo_model(const std::string& name) {
    for (std::string base : {".", "..", "../.."}) {
        std::string p = base + "/models/" + name;
        if (std::ifstream(p).good()) return p;
    }
    return "models/" + name;
}

} // namespace

TEST_CASE("scalar expressions and derivative suffixes") {
    ModelSpec M = scalar_model();
    World& w = *M.world;
    FieldId y = *w.find_field("y");

    Expr e = parse_scalar_expression(M, "y*y,0");
    Expr want = Expr::variable(&w, w.jet_var(y, {}, {})) *
                Expr::variable(&w, w.jet_var(y, {}, {0}));
    CHECK(e.equals(want));

    Expr e2 = parse_scalar_expression(M, "y,0,1 - y,1,0");
    CHECK(e2.is_zero());

    Expr e3 = parse_scalar_expression(M, "-y^2/2 + 1/2*y*y");
    CHECK(e3.is_zero());
}

TEST_CASE("Einstein summation binds dummies per additive term") {
    std::string text = "dim 3\nfield g metric\nfield phi scalar\n";
    ModelSpec M = parse_model_text(text);
    World& w = *M.world;
    MetricModel& G = *M.geom;
    FieldId phi = *w.find_field("phi");

    Expr e = parse_scalar_expression(M, "inv(g)[mu,nu]*phi,mu*phi,nu");
    Expr want(&w);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            want += G.g_upper(a, b) * Expr::variable(&w, w.jet_var(phi, {}, {a})) *
                    Expr::variable(&w, w.jet_var(phi, {}, {b}));
    CHECK(e.equals(want));

    // same dummy name reused in separate terms
    Expr e2 = parse_scalar_expression(M, "phi,mu*phi,mu + phi,mu*phi,mu");
    Expr half(&w);
    for (int a = 0; a < 3; ++a) {
        Expr d = Expr::variable(&w, w.jet_var(phi, {}, {a}));
        half += d * d;
    }
    CHECK(e2.equals(half + half));
}

TEST_CASE("summation arity errors") {
    ModelSpec M = parse_model_text("dim 2\nfield g metric\nfield phi scalar\n");
    CHECK_THROWS_AS(parse_scalar_expression(M, "phi,mu"), IndexArityError);
    CHECK_THROWS_AS(parse_scalar_expression(M, "phi,mu*phi,mu*phi,mu"), IndexArityError);
    // dummies may not pair across parenthesized sums
    CHECK_THROWS_AS(parse_scalar_expression(M, "(phi,mu + phi)*phi,mu"), IndexArityError);
    // and may not sit under a power
    CHECK_THROWS_AS(parse_scalar_expression(M, "(phi,mu*phi,mu)^2 + (phi,mu)^2"), ParseError);
    CHECK_THROWS_AS(parse_scalar_expression(M, "g[0]"), IndexArityError);
    CHECK_THROWS_AS(parse_scalar_expression(M, "zz[0]"), UnboundIdentifier);
}

TEST_CASE("numeric indices and metric component canonicalization") {
    ModelSpec M = parse_model_text("dim 2\nfield g metric\n");
    World& w = *M.world;
    FieldId g = *w.find_field("g");
    Expr a = parse_scalar_expression(M, "g[1,0],1");
    Expr b = Expr::variable(&w, w.jet_var(g, {0, 1}, {1}));
    CHECK(a.equals(b));
}

TEST_CASE("indexed expressions evaluate componentwise") {
    ModelSpec M = parse_model_text("dim 2\nfield g metric\n");
    MetricModel& G = *M.geom;
    auto table = parse_indexed_expression(M, "inv(g)[mu,al]*g[al,nu]", {"mu", "nu"});
    for (int mu = 0; mu < 2; ++mu)
        for (int nu = 0; nu < 2; ++nu) {
            Expr want = mu == nu ? Expr::from_int(M.world.get(), 1) : Expr(M.world.get());
            CHECK(table.at({mu, nu}).equals(want));
        }
    CHECK(G.dim() == 2);
}

TEST_CASE("parsed EKG model matches the built-in source form") {
    ModelSpec M = parse_model_file(repo_model("ekg.vbt"));
    World& w = *M.world;
    REQUIRE(M.equations.size() == 1);

    SourceForm parsed = model_source_form(M);

    // rebuild the reference in the same world so variable ids line up
    MetricModel& G = *M.geom;
    ScalarMatter S;
    S.phi = *w.find_field("phi");
    S.V = *w.find_atom("V");
    S.kappa = *w.find_atom("kappa");
    SourceForm ref = ekg_source_form(G, S);
    ref.fields = parsed.fields; // reference also lists phi with zero block
    for (auto it = ref.coeffs.begin(); it != ref.coeffs.end();)
        if (it->first.first != *M.metric)
            it = ref.coeffs.erase(it);
        else
            ++it;
    CHECK(parsed.equals(ref));
}

TEST_CASE("printed expressions re-parse to equal values") {
    ModelSpec M = parse_model_text("dim 2\nfield g metric\nfield phi scalar\natom V of phi\n");
    std::mt19937_64 rng(11);
    std::vector<std::string> samples = {
        "RicciScalar(g)*sqrtdetg(g)",
        "inv(g)[mu,nu]*phi,mu*phi,nu*sqrtdetg(g) + V(phi)",
        "Einstein(g)[0,1] - Ricci(g)[0,1]",
        "g[0,0],1,1*g[1,1] - 7/3*phi*Vp(phi)",
    };
    for (const std::string& s : samples) {
        Expr e = parse_scalar_expression(M, s);
        std::string printed = print_expr(e);
        Expr back = parse_scalar_expression(M, printed);
        CHECK(back.equals(e));
    }
}

TEST_CASE("run: helmholtz and vt on a variational scalar model") {
    std::string path = write_temp("harmonic.vbt",
                                  "dim 1\nfield y scalar\neq E = y,0,0\n");
    RunResult r = run({"helmholtz", path});
    CHECK(r.exit_code == 0);
    CHECK(r.text.find("variational: yes") != std::string::npos);

    RunResult rv = run({"--format", "json", "vt", path, "--vary", "y"});
    CHECK(rv.exit_code == 0);
    json j = json::parse(rv.json);
    CHECK(j["schema"] == 1);
    // VT density of y'' is y * int_0^1 t*y'' dt = 1/2*y*y'' (no by-parts reduction)
    CHECK(j["outputs"]["density"]["text"] == "1/2*y,0,0*y");

    // deterministic output
    RunResult rv2 = run({"--format", "json", "vt", path, "--vary", "y"});
    CHECK(rv2.json == rv.json);
}

TEST_CASE("run: non-variational detection") {
    std::string path = write_temp("nonvar.vbt",
                                  "dim 1\nfield y scalar\neq E = y*y,0\n");
    RunResult r = run({"--format", "json", "helmholtz", path});
    CHECK(r.exit_code == 0);
    json j = json::parse(r.json);
    CHECK(j["outputs"]["variational"] == false);
    CHECK(j["outputs"]["nonzero_conditions"].get<int>() > 0);
}

TEST_CASE("run: el and trivial") {
    std::string path = write_temp("lag.vbt",
                                  "dim 1\nfield y scalar\neq L = 1/2*y,0*y,0\n");
    RunResult r = run({"--format", "json", "el", path, "--vary", "y"});
    CHECK(r.exit_code == 0);
    json j = json::parse(r.json);
    CHECK(j["outputs"]["equations"][0]["expr"]["text"] == "-y,0,0");

    std::string tpath = write_temp("triv.vbt",
                                   "dim 1\nfield y scalar\neq L = y,0\n");
    RunResult rt = run({"trivial", tpath});
    CHECK(rt.exit_code == 0);
    CHECK(rt.text.find("trivial: yes") != std::string::npos);
}

TEST_CASE("run: exit codes follow the error contract") {
    CHECK(run({}).exit_code == 1);
    CHECK(run({"frobnicate"}).exit_code == 1);
    CHECK(run({"vt", "/nonexistent/file.vbt", "--vary", "y"}).exit_code == 1);
    std::string bad = write_temp("bad.vbt", "dim 1\nfield y scalar\neq E = y +* y\n");
    CHECK(run({"helmholtz", bad}).exit_code == 1);
    // order-3 source forms have no Helmholtz test here: a math failure
    std::string deep = write_temp("deep.vbt", "dim 1\nfield y scalar\neq E = y,0,0,0\n");
    CHECK(run({"helmholtz", deep}).exit_code == 2);
}

TEST_CASE("run: enum-invariants summaries") {
    RunResult r = run({"--format", "json", "enum-invariants", "--rank", "2"});
    REQUIRE(r.exit_code == 0);
    json j = json::parse(r.json);
    CHECK(j["outputs"]["count"] == 4);
    CHECK(j["outputs"]["decomposable"] == 1);
    CHECK(j["certificates"]["independence"]["rank"] == 4);

    RunResult rq = run({"enum-invariants", "--q-only"});
    CHECK(rq.exit_code == 0);
    CHECK(rq.text.find("1 algebraic, 0 nontrivial") != std::string::npos);
}

TEST_CASE("VARBOOT_THREADS changes nothing but wall time") {
    std::string path = repo_model("ricci.vbt");
    ModelSpec M1 = parse_model_file(path);
    SourceForm E1 = model_source_form(M1);
    setenv("VARBOOT_THREADS", "4", 1);
    ModelSpec M2 = parse_model_file(path);
    SourceForm E2 = model_source_form(M2);
    unsetenv("VARBOOT_THREADS");
    REQUIRE(E1.coeffs.size() == E2.coeffs.size());
    auto i1 = E1.coeffs.begin();
    auto i2 = E2.coeffs.begin();
    for (; i1 != E1.coeffs.end(); ++i1, ++i2) {
        CHECK(i1->first == i2->first);
        CHECK(i1->second == i2->second);
    }
}

TEST_CASE("ricci model equation is the Ricci density") {
    ModelSpec M = parse_model_file(repo_model("ricci.vbt"));
    World& w = *M.world;
    MetricModel& G = *M.geom;
    SourceForm E = model_source_form(M);
    for (const auto& comp : w.independent_components(*M.metric)) {
        Expr want = G.ricci_upper(comp[0], comp[1]) * G.s();
        if (comp[0] != comp[1]) want = want + want;
        CHECK(E.coeff(*M.metric, comp).equals(want));
    }
}
