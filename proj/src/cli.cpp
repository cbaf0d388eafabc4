#include "varboot/cli.hpp"

#include <atomic>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "varboot/invariant_enum.hpp"

namespace vb {

namespace {

using json = nlohmann::ordered_json;

int thread_cap() {
    const char* s = std::getenv("VARBOOT_THREADS");
    if (!s) return 1;
    int n = std::atoi(s);
    return n > 0 ? n : 1;
}

// index-parallel map; sequential unless VARBOOT_THREADS raises the cap
void parallel_for(size_t n, const std::function<void(size_t)>& f) {
    size_t T = std::min(static_cast<size_t>(thread_cap()), n);
    if (T <= 1) {
        for (size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    for (size_t t = 0; t < T; ++t)
        pool.emplace_back([&] {
            size_t i;
            while ((i = next.fetch_add(1)) < n) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

// ---------------------------------------------------------------- lexer ---

struct Tok {
    enum Kind { Ident, Int, Sym, End } kind = End;
    std::string text;
    size_t pos = 0;
};

std::vector<Tok> lex(const std::string& s) {
    std::vector<Tok> out;
    size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t j = i;
            while (j < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_'))
                ++j;
            out.push_back({Tok::Ident, s.substr(i, j - i), i});
            i = j;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t j = i;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            out.push_back({Tok::Int, s.substr(i, j - i), i});
            i = j;
        } else if (std::string("+-*/^()[],=").find(c) != std::string::npos) {
            out.push_back({Tok::Sym, std::string(1, c), i});
            ++i;
        } else {
            throw ParseError(std::string("unexpected character '") + c + "'", i);
        }
    }
    out.push_back({Tok::End, "", s.size()});
    return out;
}

// ------------------------------------------------------------------ AST ---

struct Node {
    enum Kind { Num, Var, Call, Add, Mul, Neg, Pow } kind = Num;
    Rat value;
    std::string name;              // Var / Call
    std::vector<std::string> args; // Call arguments (identifiers)
    std::vector<std::string> idx;  // bracketed indices (names or digits)
    std::vector<std::string> der;  // comma-derivative indices
    std::vector<Node> ch;
    std::vector<int> op; // Add: +1/-1 per child; Mul: 0 = multiply, 1 = divide
    long exp = 1;        // Pow
    size_t pos = 0;
};

struct ExprParser {
    const std::vector<Tok>& t;
    size_t p = 0;
    explicit ExprParser(const std::vector<Tok>& toks) : t(toks) {}

    const Tok& cur() const { return t[p]; }
    bool sym(const char* s) const { return cur().kind == Tok::Sym && cur().text == s; }
    void expect(const char* s) {
        if (!sym(s)) throw ParseError(std::string("expected '") + s + "'", cur().pos);
        ++p;
    }

    Node parse_all() {
        Node n = parse_expr();
        if (cur().kind != Tok::End) throw ParseError("trailing input", cur().pos);
        return n;
    }

    Node parse_expr() {
        Node sum;
        sum.kind = Node::Add;
        sum.pos = cur().pos;
        sum.ch.push_back(parse_term());
        sum.op.push_back(1);
        while (sym("+") || sym("-")) {
            int sg = sym("+") ? 1 : -1;
            ++p;
            sum.ch.push_back(parse_term());
            sum.op.push_back(sg);
        }
        if (sum.ch.size() == 1 && sum.op[0] == 1) return std::move(sum.ch[0]);
        return sum;
    }

    Node parse_term() {
        Node prod;
        prod.kind = Node::Mul;
        prod.pos = cur().pos;
        prod.ch.push_back(parse_unary());
        prod.op.push_back(0);
        while (sym("*") || sym("/")) {
            int d = sym("/") ? 1 : 0;
            ++p;
            prod.ch.push_back(parse_unary());
            prod.op.push_back(d);
        }
        if (prod.ch.size() == 1) return std::move(prod.ch[0]);
        return prod;
    }

    Node parse_unary() {
        if (sym("-")) {
            size_t pos = cur().pos;
            ++p;
            Node n;
            n.kind = Node::Neg;
            n.pos = pos;
            n.ch.push_back(parse_unary());
            return n;
        }
        return parse_postfix();
    }

    Node parse_postfix() {
        Node n = parse_primary();
        if (sym("^")) {
            ++p;
            bool neg = false;
            if (sym("-")) {
                neg = true;
                ++p;
            }
            if (cur().kind != Tok::Int) throw ParseError("expected integer exponent", cur().pos);
            long e = std::stol(cur().text);
            ++p;
            Node w;
            w.kind = Node::Pow;
            w.pos = n.pos;
            w.exp = neg ? -e : e;
            w.ch.push_back(std::move(n));
            return w;
        }
        return n;
    }

    std::string index_item() {
        if (cur().kind != Tok::Ident && cur().kind != Tok::Int)
            throw ParseError("expected index name or digit", cur().pos);
        std::string s = cur().text;
        ++p;
        return s;
    }

    Node parse_primary() {
        const Tok& c = cur();
        if (c.kind == Tok::Int) {
            Node n;
            n.kind = Node::Num;
            n.value = Rat(std::stol(c.text));
            n.pos = c.pos;
            ++p;
            return n;
        }
        if (sym("(")) {
            ++p;
            Node n = parse_expr();
            expect(")");
            return n;
        }
        if (c.kind != Tok::Ident) throw ParseError("expected expression", c.pos);
        Node n;
        n.kind = Node::Var;
        n.name = c.text;
        n.pos = c.pos;
        ++p;
        if (sym("(")) {
            n.kind = Node::Call;
            ++p;
            while (true) {
                if (cur().kind != Tok::Ident)
                    throw ParseError("expected identifier argument", cur().pos);
                n.args.push_back(cur().text);
                ++p;
                if (sym(",")) {
                    ++p;
                    continue;
                }
                break;
            }
            expect(")");
        }
        if (sym("[")) {
            ++p;
            n.idx.push_back(index_item());
            while (sym(",")) {
                ++p;
                n.idx.push_back(index_item());
            }
            expect("]");
        }
        // comma-derivatives: a ',' directly followed by an index item
        while (sym(",") && (t[p + 1].kind == Tok::Ident || t[p + 1].kind == Tok::Int)) {
            ++p;
            n.der.push_back(index_item());
        }
        return n;
    }
};

// ------------------------------------------------------------- evaluator ---

using IndexEnv = std::map<std::string, int>;

bool is_digits(const std::string& s) {
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return !s.empty();
}

// occurrence counts of unbound summation indices inside one product term;
// parenthesized sums must balance their own indices
void collect_indices(const Node& n, const IndexEnv& env, std::map<std::string, int>& cnt) {
    switch (n.kind) {
    case Node::Num:
        return;
    case Node::Var:
    case Node::Call:
        for (const auto& list : {n.idx, n.der})
            for (const std::string& s : list)
                if (!is_digits(s) && !env.count(s)) cnt[s]++;
        return;
    case Node::Mul:
    case Node::Neg:
        for (const Node& c : n.ch) collect_indices(c, env, cnt);
        return;
    case Node::Pow: {
        std::map<std::string, int> inner;
        collect_indices(n.ch[0], env, inner);
        if (!inner.empty())
            throw ParseError("summation index under a power", n.pos);
        return;
    }
    case Node::Add:
        for (const Node& c : n.ch) {
            std::map<std::string, int> inner;
            collect_indices(c, env, inner);
            for (const auto& [name, k] : inner)
                if (k != 2)
                    throw IndexArityError("summation index '" + name + "' appears " +
                                          std::to_string(k) + " times");
        }
        return;
    }
}

struct Evaluator {
    ModelSpec& M;
    World& w;
    explicit Evaluator(ModelSpec& m) : M(m), w(*m.world) {}

    MetricModel& geom(size_t pos) {
        if (!M.geom) throw ParseError("no metric field declared", pos);
        return *M.geom;
    }

    int resolve_index(const std::string& s, const IndexEnv& env, size_t pos) {
        if (is_digits(s)) {
            int v = std::stoi(s);
            if (v < 0 || v >= w.dim()) throw ParseError("index literal out of range", pos);
            return v;
        }
        auto it = env.find(s);
        if (it == env.end()) throw UnboundIdentifier("unbound index '" + s + "'");
        return it->second;
    }

    std::vector<int> resolve_list(const std::vector<std::string>& v, const IndexEnv& env,
                                  size_t pos) {
        std::vector<int> out;
        for (const std::string& s : v) out.push_back(resolve_index(s, env, pos));
        return out;
    }

    // function atoms resolve through the derivative chain: V, Vp, Vpp, ...
    std::optional<VarId> resolve_atom(const std::string& name) {
        if (auto a = w.find_atom(name)) return a;
        size_t primes = 0;
        std::string base = name;
        while (!base.empty() && base.back() == 'p') {
            base.pop_back();
            ++primes;
            if (auto a = w.find_atom(base)) {
                VarId v = *a;
                if (!w.atom(v).func_of) return std::nullopt;
                for (size_t i = 0; i < primes; ++i) v = w.atom_derivative(v);
                return v;
            }
        }
        return std::nullopt;
    }

    Expr eval_sum(const Node& n, const IndexEnv& env) {
        if (n.kind == Node::Add) {
            Expr acc(&w);
            for (size_t i = 0; i < n.ch.size(); ++i) {
                Expr t = eval_term(n.ch[i], env);
                acc += n.op[i] > 0 ? t : -t;
            }
            return acc;
        }
        return eval_term(n, env);
    }

    Expr eval_term(const Node& n, const IndexEnv& env) {
        std::map<std::string, int> cnt;
        collect_indices(n, env, cnt);
        std::vector<std::string> dummies;
        for (const auto& [name, k] : cnt) {
            if (k != 2)
                throw IndexArityError("summation index '" + name + "' appears " +
                                      std::to_string(k) + " times");
            dummies.push_back(name);
        }
        if (dummies.empty()) return eval_product(n, env);
        Expr acc(&w);
        std::vector<int> a(dummies.size(), 0);
        while (true) {
            IndexEnv e2 = env;
            for (size_t i = 0; i < dummies.size(); ++i) e2[dummies[i]] = a[i];
            acc += eval_product(n, e2);
            size_t d = a.size();
            while (d > 0 && a[d - 1] == w.dim() - 1) a[--d] = 0;
            if (d == 0) break;
            ++a[d - 1];
        }
        return acc;
    }

    Expr eval_product(const Node& n, const IndexEnv& env) {
        switch (n.kind) {
        case Node::Num:
            return Expr::constant(&w, n.value);
        case Node::Add:
            return eval_sum(n, env);
        case Node::Neg:
            return -eval_product(n.ch[0], env);
        case Node::Pow:
            return eval_product(n.ch[0], env).pow(n.exp);
        case Node::Mul: {
            Expr acc = Expr::constant(&w, Rat(1));
            for (size_t i = 0; i < n.ch.size(); ++i) {
                Expr f = eval_product(n.ch[i], env);
                if (n.op[i])
                    acc = acc / f;
                else
                    acc *= f;
            }
            return acc;
        }
        case Node::Var:
            return eval_var(n, env);
        case Node::Call:
            return eval_call(n, env);
        }
        throw ParseError("unreachable expression node", n.pos);
    }

    Expr eval_var(const Node& n, const IndexEnv& env) {
        if (auto fid = w.find_field(n.name)) {
            const FieldSpec& fs = w.field(*fid);
            if (static_cast<int>(n.idx.size()) != fs.valence)
                throw IndexArityError("field '" + n.name + "' takes " +
                                      std::to_string(fs.valence) + " indices, got " +
                                      std::to_string(n.idx.size()));
            std::vector<int> comp = resolve_list(n.idx, env, n.pos);
            std::vector<int> der = resolve_list(n.der, env, n.pos);
            CanonComp cc = w.canonical_component(*fid, comp);
            if (cc.sign == 0) return Expr(&w);
            Expr e = Expr::variable(&w, w.jet_var(*fid, cc.comp, der));
            return cc.sign < 0 ? -e : e;
        }
        if (auto a = resolve_atom(n.name)) {
            if (!n.idx.empty() || !n.der.empty())
                throw IndexArityError("atom '" + n.name + "' takes no indices");
            return Expr::variable(&w, *a);
        }
        throw UnboundIdentifier("unknown identifier '" + n.name + "'");
    }

    Expr eval_call(const Node& n, const IndexEnv& env) {
        if (!n.der.empty()) throw ParseError("derivative of a built-in is not supported", n.pos);
        auto need_idx = [&](size_t k) {
            if (n.idx.size() != k)
                throw IndexArityError("'" + n.name + "' takes " + std::to_string(k) +
                                      " indices, got " + std::to_string(n.idx.size()));
        };
        auto metric_arg = [&]() -> MetricModel& {
            MetricModel& G = geom(n.pos);
            if (n.args.size() < 1 || w.find_field(n.args[0]) != std::optional<FieldId>(G.field()))
                throw ParseError("'" + n.name + "' expects the metric field", n.pos);
            return G;
        };
        if (n.name == "inv") {
            MetricModel& G = metric_arg();
            need_idx(2);
            auto i = resolve_list(n.idx, env, n.pos);
            return G.g_upper(i[0], i[1]);
        }
        if (n.name == "sqrtdetg") {
            need_idx(0);
            return metric_arg().s();
        }
        if (n.name == "Ricci") {
            MetricModel& G = metric_arg();
            need_idx(2);
            auto i = resolve_list(n.idx, env, n.pos);
            return G.ricci_upper(i[0], i[1]);
        }
        if (n.name == "RicciScalar") {
            need_idx(0);
            return metric_arg().ricci_scalar();
        }
        if (n.name == "Einstein") {
            MetricModel& G = metric_arg();
            need_idx(2);
            auto i = resolve_list(n.idx, env, n.pos);
            return G.einstein_upper(i[0], i[1]);
        }
        if (n.name == "Dalembert") {
            MetricModel& G = metric_arg();
            need_idx(0);
            if (n.args.size() != 2) throw ParseError("Dalembert takes (metric, scalar)", n.pos);
            auto f = w.find_field(n.args[1]);
            if (!f) throw UnboundIdentifier("unknown field '" + n.args[1] + "'");
            return G.dalembertian(*f);
        }
        // function atom applied to its field: V(phi), Vp(phi), ...
        if (auto a = resolve_atom(n.name)) {
            need_idx(0);
            const AtomInfo& ai = w.atom(*a);
            if (n.args.size() != 1 || !ai.func_of ||
                w.find_field(n.args[0]) != std::optional<FieldId>(*ai.func_of))
                throw ParseError("'" + n.name + "' is not a function of '" +
                                     (n.args.empty() ? "" : n.args[0]) + "'",
                                 n.pos);
            return Expr::variable(&w, *a);
        }
        throw UnboundIdentifier("unknown function '" + n.name + "'");
    }
};

Node parse_text(const std::string& text) {
    std::vector<Tok> toks = lex(text);
    ExprParser P(toks);
    return P.parse_all();
}

} // namespace

// ------------------------------------------------------------ model files ---

const EquationSpec* ModelSpec::find_equation(const std::string& name) const {
    for (const auto& e : equations)
        if (e.name == name) return &e;
    return nullptr;
}

ModelSpec parse_model_text(const std::string& text) {
    ModelSpec M;
    M.source = text;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string kw;
        if (!(ls >> kw)) continue;
        auto fail = [&](const std::string& msg) { throw ParseError(msg, lineno); };
        if (kw == "dim") {
            int d = 0;
            if (!(ls >> d) || d < 1) fail("dim expects a positive integer");
            if (M.world) fail("dim must be the first statement");
            M.world = std::make_shared<World>(d);
            continue;
        }
        if (!M.world) fail("model must declare dim first");
        World& w = *M.world;
        if (kw == "field") {
            std::string name, kind;
            if (!(ls >> name >> kind)) fail("field expects a name and a kind");
            if (w.find_field(name) || w.find_atom(name)) fail("duplicate name '" + name + "'");
            FieldId f;
            if (kind == "scalar") {
                f = w.add_scalar_field(name);
            } else if (kind == "metric") {
                if (M.metric) fail("only one metric field is supported");
                f = w.add_metric_field(name);
                M.metric = f;
                M.geom = std::make_shared<MetricModel>(&w, f);
            } else {
                fail("unknown field kind '" + kind + "'");
            }
            M.fields.push_back(f);
        } else if (kw == "atom") {
            std::string name, what;
            if (!(ls >> name >> what)) fail("atom expects a name and 'const' or 'of <field>'");
            if (w.find_field(name) || w.find_atom(name)) fail("duplicate name '" + name + "'");
            if (what == "const") {
                M.atoms[name] = w.add_atom(name);
            } else if (what == "of") {
                std::string fname;
                if (!(ls >> fname)) fail("atom ... of expects a field name");
                auto f = w.find_field(fname);
                if (!f) fail("unknown field '" + fname + "'");
                M.atoms[name] = w.add_function_atom(name, *f);
            } else {
                fail("unknown atom kind '" + what + "'");
            }
        } else if (kw == "eq") {
            // eq <name>[i,j] [of <field>] = <expression>
            std::string rest;
            std::getline(ls, rest);
            size_t eqpos = rest.find('=');
            if (eqpos == std::string::npos) fail("eq expects '='");
            std::string lhs = rest.substr(0, eqpos), rhs = rest.substr(eqpos + 1);
            std::vector<Tok> lt = lex(lhs);
            size_t p = 0;
            if (lt[p].kind != Tok::Ident) fail("eq expects a name");
            EquationSpec eq;
            eq.name = lt[p++].text;
            if (lt[p].kind == Tok::Sym && lt[p].text == "[") {
                ++p;
                while (true) {
                    if (lt[p].kind != Tok::Ident) fail("eq index must be a name");
                    eq.indices.push_back(lt[p++].text);
                    if (lt[p].kind == Tok::Sym && lt[p].text == ",") {
                        ++p;
                        continue;
                    }
                    break;
                }
                if (!(lt[p].kind == Tok::Sym && lt[p].text == "]")) fail("eq expects ']'");
                ++p;
            }
            std::optional<FieldId> target;
            if (lt[p].kind == Tok::Ident && lt[p].text == "of") {
                ++p;
                if (lt[p].kind != Tok::Ident) fail("eq ... of expects a field name");
                target = w.find_field(lt[p].text);
                if (!target) fail("unknown field '" + lt[p].text + "'");
                ++p;
            }
            if (lt[p].kind != Tok::End) fail("unexpected input after eq header");
            if (!target) {
                if (eq.indices.size() == 2 && M.metric) {
                    target = M.metric;
                } else if (eq.indices.empty()) {
                    for (FieldId f : M.fields)
                        if (w.field(f).kind == FieldKind::Scalar) {
                            if (target) fail("ambiguous scalar equation; use 'of <field>'");
                            target = f;
                        }
                }
                if (!target) fail("cannot infer the equation's field; use 'of <field>'");
            }
            if (static_cast<int>(eq.indices.size()) != w.field(*target).valence)
                fail("equation indices do not match the field valence");
            eq.field = *target;
            eq.rhs = rhs;
            M.equations.push_back(std::move(eq));
        } else {
            fail("unknown statement '" + kw + "'");
        }
    }
    if (!M.world) throw ParseError("empty model: missing dim", 0);
    return M;
}

ModelSpec parse_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model_text(ss.str());
}

// ------------------------------------------------------------ expressions ---

Expr parse_scalar_expression(ModelSpec& M, const std::string& text) {
    Node root = parse_text(text);
    Evaluator E(M);
    return E.eval_sum(root, {});
}

std::map<std::vector<int>, Expr> parse_indexed_expression(ModelSpec& M, const std::string& text,
                                                          const std::vector<std::string>& free) {
    Node root = parse_text(text);
    Evaluator E(M);
    int m = M.world->dim();
    size_t total = 1;
    for (size_t i = 0; i < free.size(); ++i) total *= static_cast<size_t>(m);
    std::vector<std::vector<int>> keys(total);
    std::vector<Expr> vals(total);
    for (size_t r = 0; r < total; ++r) {
        std::vector<int> comp(free.size());
        size_t x = r;
        for (size_t i = free.size(); i-- > 0;) {
            comp[i] = static_cast<int>(x % m);
            x /= m;
        }
        keys[r] = std::move(comp);
    }
    parallel_for(total, [&](size_t r) {
        IndexEnv env;
        for (size_t i = 0; i < free.size(); ++i) env[free[i]] = keys[r][i];
        vals[r] = E.eval_sum(root, env);
    });
    std::map<std::vector<int>, Expr> out;
    for (size_t r = 0; r < total; ++r) out.emplace(std::move(keys[r]), std::move(vals[r]));
    return out;
}

SourceForm equation_source_form(ModelSpec& M, const EquationSpec& eq) {
    World& w = *M.world;
    auto table = parse_indexed_expression(M, eq.rhs, eq.indices);
    SourceForm E;
    E.w = &w;
    E.fields.push_back(eq.field);
    for (const auto& comp : w.independent_components(eq.field))
        E.coeffs[{eq.field, comp}] = Expr(&w);
    // fold the full table onto canonical components: symmetric off-diagonal
    // coefficients add up (the doubling convention of the source form)
    for (auto& [comp, e] : table) {
        CanonComp cc = w.canonical_component(eq.field, comp);
        if (cc.sign == 0) continue;
        Expr& slot = E.coeffs[{eq.field, cc.comp}];
        slot += cc.sign < 0 ? -e : e;
    }
    return E;
}

SourceForm model_source_form(ModelSpec& M) {
    if (M.equations.empty()) throw UsageError("model declares no equations");
    SourceForm E;
    E.w = M.world.get();
    for (const auto& eq : M.equations) {
        SourceForm one = equation_source_form(M, eq);
        for (FieldId f : one.fields)
            if (std::find(E.fields.begin(), E.fields.end(), f) == E.fields.end())
                E.fields.push_back(f);
        for (auto& [key, e] : one.coeffs) {
            auto it = E.coeffs.find(key);
            if (it == E.coeffs.end())
                E.coeffs.emplace(key, std::move(e));
            else
                it->second += e;
        }
    }
    return E;
}

// --------------------------------------------------------------- printing ---

namespace {

std::string print_poly(const World& w, const Poly& p) {
    if (p.is_zero()) return "0";
    std::string s;
    bool first = true;
    for (const Term& t : p.terms) {
        if (!t.mono.texp.is_zero())
            throw MathError("homotopy parameter left in a report expression");
        bool neg = t.coef < 0;
        if (first)
            s += neg ? "-" : "";
        else
            s += neg ? " - " : " + ";
        first = false;
        Rat a = neg ? Rat(-t.coef) : t.coef;
        std::string mono;
        for (uint64_t e : t.mono.v) {
            if (!mono.empty()) mono += "*";
            mono += w.var_name(Monomial::var_of(e));
            uint32_t x = Monomial::exp_of(e);
            if (x > 1) mono += "^" + std::to_string(x);
        }
        if (mono.empty())
            s += a.get_str();
        else if (a == 1)
            s += mono;
        else
            s += a.get_str() + "*" + mono;
    }
    return s;
}

} // namespace

std::string print_expr(const Expr& e) {
    const World& w = *e.world();
    std::string num = print_poly(w, e.num());
    if (e.is_polynomial()) return num;
    std::string den;
    for (const auto& [fid, mult] : e.den()) {
        if (!den.empty()) den += "*";
        den += "(" + print_poly(w, w.factor(fid)) + ")";
        if (mult > 1) den += "^" + std::to_string(mult);
    }
    return "(" + num + ")/(" + den + ")";
}

// ------------------------------------------------------------------- run ---

namespace {

json expr_json(const Expr& e) {
    const World& w = *e.world();
    json terms = json::array();
    for (const Term& t : e.num().terms) {
        json vars = json::array();
        for (uint64_t x : t.mono.v)
            vars.push_back({w.var_name(Monomial::var_of(x)), Monomial::exp_of(x)});
        terms.push_back({{"coef", t.coef.get_str()}, {"vars", vars}});
    }
    json j{{"text", print_expr(e)}, {"terms", terms}};
    if (!e.is_polynomial()) {
        json den = json::array();
        for (const auto& [fid, mult] : e.den())
            den.push_back({print_poly(w, w.factor(fid)), mult});
        j["den"] = den;
    }
    return j;
}

json source_form_json(const World& w, const SourceForm& E) {
    json out = json::array();
    for (const auto& [key, e] : E.coeffs)
        out.push_back({{"field", w.field(key.first).name},
                       {"component", key.second},
                       {"expr", expr_json(e)}});
    return out;
}

std::string source_form_text(const World& w, const SourceForm& E) {
    std::string s;
    for (const auto& [key, e] : E.coeffs) {
        s += "  " + w.field(key.first).name + "[";
        for (size_t i = 0; i < key.second.size(); ++i)
            s += (i ? "," : "") + std::to_string(key.second[i]);
        s += "]: " + print_expr(e) + "\n";
    }
    return s;
}

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

struct Ctx {
    std::string format = "text";
    uint64_t seed = 1;
    json report;
    std::string text;
};

std::set<FieldId> field_set(ModelSpec& M, const std::vector<std::string>& names) {
    std::set<FieldId> out;
    for (const std::string& n : names) {
        auto f = M.world->find_field(n);
        if (!f) throw UsageError("unknown field '" + n + "'");
        out.insert(*f);
    }
    return out;
}

const EquationSpec& pick_equation(const ModelSpec& M, const std::string& name) {
    if (!name.empty()) {
        const EquationSpec* e = M.find_equation(name);
        if (!e) throw UsageError("no equation named '" + name + "'");
        return *e;
    }
    if (M.equations.empty()) throw UsageError("model declares no equations");
    return M.equations.front();
}

Expr density_from_eq(ModelSpec& M, const std::string& name) {
    const EquationSpec& eq = pick_equation(M, name);
    if (!eq.indices.empty())
        throw UsageError("equation '" + eq.name + "' is not a scalar density");
    return parse_scalar_expression(M, eq.rhs);
}

json cert_json(const IndependenceCertificate& c) {
    return {{"seed", c.seed}, {"samples", c.samples}, {"rank", c.rank}};
}

} // namespace

RunResult run(const std::vector<std::string>& args) {
    Ctx ctx;
    RunResult R;
    try {
        // global flags first, then <command> <args...>
        std::vector<std::string> rest;
        for (size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--format") {
                if (++i >= args.size()) throw UsageError("--format expects text|json");
                ctx.format = args[i];
                if (ctx.format != "text" && ctx.format != "json")
                    throw UsageError("--format expects text|json");
            } else if (args[i] == "--seed") {
                if (++i >= args.size()) throw UsageError("--seed expects an integer");
                ctx.seed = std::stoull(args[i]);
            } else {
                rest.push_back(args[i]);
            }
        }
        if (rest.empty())
            throw UsageError(
                "usage: varboot [--format text|json] [--seed n] <command> [args]\n"
                "commands: helmholtz el vt complete bootstrap trivial enum-invariants");
        std::string cmd = rest[0];
        rest.erase(rest.begin());

        // per-command flags
        std::string model_path, eq_name;
        std::vector<std::string> vary, passive;
        int rank = 0;
        bool first_order = false, q_only = false, t_only = false;
        for (size_t i = 0; i < rest.size(); ++i) {
            const std::string& a = rest[i];
            auto next = [&]() -> const std::string& {
                if (++i >= rest.size()) throw UsageError("flag '" + a + "' expects a value");
                return rest[i];
            };
            if (a == "--eq")
                eq_name = next();
            else if (a == "--vary")
                vary.push_back(next());
            else if (a == "--passive")
                passive.push_back(next());
            else if (a == "--rank")
                rank = std::stoi(next());
            else if (a == "--first-order")
                first_order = true;
            else if (a == "--q-only")
                q_only = true;
            else if (a == "--t-only")
                t_only = true;
            else if (!a.empty() && a[0] == '-')
                throw UsageError("unknown flag '" + a + "'");
            else if (model_path.empty())
                model_path = a;
            else
                throw UsageError("unexpected argument '" + a + "'");
        }

        json& J = ctx.report;
        J["schema"] = 1;
        J["command"] = cmd;
        J["seed"] = ctx.seed;
        std::string& T = ctx.text;

        auto load = [&]() -> ModelSpec {
            if (model_path.empty()) throw UsageError("command '" + cmd + "' needs a model file");
            ModelSpec M = parse_model_file(model_path);
            J["model"] = {{"path", model_path},
                          {"digest", fnv1a(M.source)},
                          {"dim", M.world->dim()}};
            return M;
        };

        if (cmd == "helmholtz") {
            ModelSpec M = load();
            SourceForm E = model_source_form(M);
            HelmholtzTensor H = helmholtz(E);
            bool variational = H.all_zero();
            size_t nz = 0;
            auto count_nz = [&](const auto& m) {
                for (const auto& [k, e] : m)
                    if (!e.is_zero()) ++nz;
            };
            count_nz(H.H0);
            count_nz(H.H1);
            count_nz(H.H2);
            J["outputs"] = {{"variational", variational}, {"nonzero_conditions", nz}};
            T += std::string("variational: ") + (variational ? "yes" : "no") + "\n";
            T += "nonzero Helmholtz conditions: " + std::to_string(nz) + "\n";
        } else if (cmd == "el") {
            ModelSpec M = load();
            if (vary.empty()) throw UsageError("el needs --vary <field>");
            Expr dens = density_from_eq(M, eq_name);
            LagrangianDensity L{M.world.get(), dens};
            std::vector<FieldId> fs;
            for (FieldId f : field_set(M, vary)) fs.push_back(f);
            SourceForm E = euler_lagrange(L, fs);
            J["outputs"] = {{"equations", source_form_json(*M.world, E)}};
            T += "Euler-Lagrange equations:\n" + source_form_text(*M.world, E);
        } else if (cmd == "vt") {
            ModelSpec M = load();
            if (vary.empty()) throw UsageError("vt needs --vary <field>");
            SourceForm E = model_source_form(M);
            LagrangianDensity L = vainberg_tonti(E, field_set(M, vary));
            J["outputs"] = {{"density", expr_json(L.density)}};
            T += "Vainberg-Tonti density:\n  " + print_expr(L.density) + "\n";
        } else if (cmd == "complete") {
            ModelSpec M = load();
            if (vary.empty()) throw UsageError("complete needs --vary <field>");
            SourceForm E = model_source_form(M);
            CompletionResult C = variational_completion(E, field_set(M, vary));
            J["outputs"] = {{"density", expr_json(C.lagrangian.density)},
                            {"completed", source_form_json(*M.world, C.completed)}};
            J["certificates"] = {{"helmholtz_identity_checked", C.identity_checked}};
            T += "completed equations:\n" + source_form_text(*M.world, C.completed);
            T += "completion Lagrangian:\n  " + print_expr(C.lagrangian.density) + "\n";
        } else if (cmd == "bootstrap") {
            ModelSpec M = load();
            if (vary.empty() || passive.empty())
                throw UsageError("bootstrap needs --vary and --passive fields");
            SourceForm E = model_source_form(M);
            BootstrapResult B = bootstrap(E, field_set(M, vary), field_set(M, passive));
            J["outputs"] = {{"density", expr_json(B.lagrangian.density)},
                            {"vary_equations", source_form_json(*M.world, B.completed_vary_eqs)},
                            {"passive_equations", source_form_json(*M.world, B.passive_eqs)}};
            J["diagnostics"] = json::array();
            if (B.passive_up_to_lambda2)
                J["diagnostics"].push_back(
                    "passive equations determined only up to terms independent of the varied "
                    "fields");
            T += "bootstrap Lagrangian:\n  " + print_expr(B.lagrangian.density) + "\n";
            T += "varied-field equations:\n" + source_form_text(*M.world, B.completed_vary_eqs);
            T += "passive-field equations (up to terms independent of the varied fields):\n" +
                 source_form_text(*M.world, B.passive_eqs);
        } else if (cmd == "trivial") {
            ModelSpec M = load();
            Expr dens = density_from_eq(M, eq_name);
            LagrangianDensity L{M.world.get(), dens};
            std::vector<FieldId> fs;
            if (vary.empty())
                fs = M.fields;
            else
                for (FieldId f : field_set(M, vary)) fs.push_back(f);
            bool triv = is_trivial(L, fs);
            J["outputs"] = {{"trivial", triv}};
            T += std::string("variationally trivial: ") + (triv ? "yes" : "no") + "\n";
        } else if (cmd == "enum-invariants") {
            World w(4);
            DistortionVars dv = DistortionVars::make(&w);
            json out;
            if (q_only || t_only) {
                auto [a, f] = q_only ? q_only_sector(dv) : t_only_sector(dv);
                out["sector"] = q_only ? "Q" : "T";
                out["algebraic_count"] = a;
                out["nontrivial_first_order"] = f;
                T += std::string(q_only ? "Q" : "T") + "-only sector: " + std::to_string(a) +
                     " algebraic, " + std::to_string(f) + " nontrivial first-order\n";
            } else if (first_order) {
                FirstOrderCatalogue C = enumerate_first_order(dv);
                int fam[3] = {0, 0, 0};
                json terms = json::array();
                for (const auto& t : C.terms) {
                    fam[t.family]++;
                    terms.push_back({{"label", t.label},
                                     {"family", t.family},
                                     {"trivial", t.trivial},
                                     {"el_class", t.el_class}});
                }
                out["count"] = C.terms.size();
                out["families"] = {fam[0], fam[1], fam[2]};
                out["nontrivial_el_classes"] = C.nontrivial_classes;
                out["terms"] = terms;
                T += "first-order terms: " + std::to_string(C.terms.size()) + " (" +
                     std::to_string(fam[0]) + " + " + std::to_string(fam[1]) + " + " +
                     std::to_string(fam[2]) + "), nontrivial EL classes: " +
                     std::to_string(C.nontrivial_classes) + "\n";
            } else if (rank > 0) {
                InvariantBasis B = enumerate_algebraic(dv, rank, true, true, ctx.seed);
                int dec = 0;
                json members = json::array();
                for (const auto& m : B.members) {
                    if (m.decomposable) ++dec;
                    members.push_back({{"label", m.label}, {"decomposable", m.decomposable}});
                }
                out["rank"] = rank;
                out["count"] = B.members.size();
                out["decomposable"] = dec;
                out["members"] = members;
                J["certificates"] = {{"independence", cert_json(B.cert)}};
                T += "rank " + std::to_string(rank) + ": " +
                     std::to_string(B.members.size()) + " members (" + std::to_string(dec) +
                     " decomposable)\n";
            } else {
                json counts = json::array();
                for (int k = 1; k <= 4; ++k) {
                    InvariantBasis B = enumerate_algebraic(dv, k, true, true, ctx.seed);
                    counts.push_back(B.members.size());
                    T += "rank " + std::to_string(k) + ": " +
                         std::to_string(B.members.size()) + " members\n";
                }
                out["counts"] = counts;
            }
            J["outputs"] = std::move(out);
        } else {
            throw UsageError("unknown command '" + cmd + "'");
        }
        R.exit_code = 0;
    } catch (const UsageError& e) {
        ctx.report["error"] = e.what();
        ctx.text = std::string("error: ") + e.what() + "\n";
        R.exit_code = 1;
    } catch (const MathError& e) {
        ctx.report["error"] = e.what();
        ctx.text = std::string("math error: ") + e.what() + "\n";
        R.exit_code = 2;
    }
    R.json = ctx.report.dump(2);
    R.text = ctx.format == "json" ? R.json : ctx.text;
    return R;
}

} // namespace vb
