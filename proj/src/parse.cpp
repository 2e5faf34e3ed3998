#include "apxsym/parse.hpp"

#include "apxsym/error.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

namespace apxsym {

namespace {

struct Token {
    enum class Type { Ident, Number, Punct, End };
    Type type = Type::End;
    std::string text;
    int line = 1;
    int col = 1;
};

std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](char c) {
        if (c == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    };
    while (i < text.size()) {
        char c = text[i];
        if (c == '#') {
            while (i < text.size() && text[i] != '\n') advance(text[i++]);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(c);
            ++i;
            continue;
        }
        Token t;
        t.line = line;
        t.col = col;
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[j]))))
                ++j;
            t.type = Token::Type::Ident;
            t.text = text.substr(i, j - i);
            while (i < j) advance(text[i++]);
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            bool dot = false;
            while (j < text.size() &&
                   (std::isdigit(static_cast<unsigned char>(text[j])) ||
                    (!dot && text[j] == '.'))) {
                if (text[j] == '.') dot = true;
                ++j;
            }
            t.type = Token::Type::Number;
            t.text = text.substr(i, j - i);
            while (i < j) advance(text[i++]);
        } else if (std::string(";{}()[]=+-*/^,'_").find(c) != std::string::npos) {
            t.type = Token::Type::Punct;
            t.text = std::string(1, c);
            advance(c);
            ++i;
        } else {
            throw ParseError(std::string("unexpected character '") + c + "'", line, col);
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.type = Token::Type::End;
    end.line = line;
    end.col = col;
    out.push_back(end);
    return out;
}

bool is_kernel_ident(const std::string& s) {
    return s == "exp" || s == "log" || s == "sin" || s == "cos" || s == "sqrt" ||
           s == "erfi" || s == "hyp2f1";
}

// U0 -> ("U", 0); plain names keep no family order.
std::pair<std::string, std::optional<int>> split_family(const std::string& name) {
    std::size_t i = name.size();
    while (i > 0 && std::isdigit(static_cast<unsigned char>(name[i - 1]))) --i;
    if (i == name.size() || i == 0) return {name, std::nullopt};
    return {name.substr(0, i), std::stoi(name.substr(i))};
}

struct Parser {
    std::vector<Token> toks;
    std::size_t pos = 0;

    ProblemSpec spec;
    std::set<std::string> params;
    std::map<std::string, std::optional<int>> block_unknowns;
    bool lenient = false;

    const Token& peek(int off = 0) const {
        std::size_t i = pos + off;
        return i < toks.size() ? toks[i] : toks.back();
    }
    const Token& get() { return toks[std::min(pos++, toks.size() - 1)]; }

    [[noreturn]] void fail(const std::string& msg, const Token& at) const {
        throw ParseError(msg + " at line " + std::to_string(at.line) + ", column " +
                             std::to_string(at.col),
                         at.line, at.col);
    }
    [[noreturn]] void fail_here(const std::string& msg) const { fail(msg, peek()); }

    bool at_punct(const std::string& p) const {
        return peek().type == Token::Type::Punct && peek().text == p;
    }
    bool at_ident(const std::string& s) const {
        return peek().type == Token::Type::Ident && peek().text == s;
    }
    void expect_punct(const std::string& p) {
        if (!at_punct(p)) fail_here("expected '" + p + "'");
        ++pos;
    }
    std::string expect_ident() {
        if (peek().type != Token::Type::Ident) fail_here("expected identifier");
        return get().text;
    }
    long expect_int() {
        if (peek().type != Token::Type::Number) fail_here("expected integer");
        auto q = rational_from_string(peek().text);
        if (!q || !is_integer(*q)) fail_here("expected integer");
        ++pos;
        return q->get_num().get_si();
    }
    Rational expect_number_signed() {
        bool negate = false;
        if (at_punct("-")) {
            ++pos;
            negate = true;
        }
        if (peek().type != Token::Type::Number) fail_here("expected number");
        auto q = rational_from_string(get().text);
        if (!q) fail_here("malformed number");
        if (at_punct("/")) { // printed rationals: 1/2
            ++pos;
            if (peek().type != Token::Type::Number) fail_here("expected denominator");
            auto d = rational_from_string(get().text);
            if (!d || *d == 0) fail_here("malformed denominator");
            *q /= *d;
        }
        return negate ? Rational(-*q) : *q;
    }

    // fixture names may contain hyphens: case1-set1, fig2a, ...
    std::string expect_name() {
        std::string name = expect_ident();
        while (at_punct("-")) {
            ++pos;
            if (peek().type != Token::Type::Ident && peek().type != Token::Type::Number)
                fail_here("expected name continuation after '-'");
            name += "-" + get().text;
        }
        return name;
    }

    int indep_index(const std::string& name, const Token& at) const {
        for (int i = 0; i < spec.space.n(); ++i)
            if (spec.space.indep_names[i] == name) return i;
        fail("unknown independent variable '" + name + "'", at);
    }
    int dep_index(const std::string& name) const {
        for (int i = 0; i < spec.space.m(); ++i)
            if (spec.space.dep_names[i] == name) return i;
        return -1;
    }
    bool is_indep(const std::string& name) const {
        return std::find(spec.space.indep_names.begin(), spec.space.indep_names.end(),
                         name) != spec.space.indep_names.end();
    }

    // ---- expressions ----

    Expr parse_expr() {
        Expr e = parse_term();
        while (at_punct("+") || at_punct("-")) {
            bool plus = peek().text == "+";
            ++pos;
            Expr rhs = parse_term();
            e = plus ? add({e, rhs}) : sub(e, rhs);
        }
        return e;
    }

    Expr parse_term() {
        Expr e = parse_unary();
        while (at_punct("*") || at_punct("/")) {
            bool times = peek().text == "*";
            ++pos;
            e = times ? mul({e, parse_unary()}) : mul({e, parse_divisor()});
        }
        return e;
    }

    // Reciprocal of the next factor. Folding the sign into the exponent up
    // front keeps a/(S)^2 as the atomic power S^(-2) instead of expanding
    // the square first and inverting the expansion.
    Expr parse_divisor() {
        Expr e = parse_primary();
        for (;;) {
            if (at_punct("_")) {
                ++pos;
                for (int idx : parse_subscript()) e = total_derivative(e, idx, spec.space);
            } else if (at_punct("^")) {
                ++pos;
                Rational ex = parse_exponent();
                if (at_punct("_")) {
                    e = pow(e, ex);
                    continue;
                }
                return pow(e, Rational(-ex));
            } else {
                break;
            }
        }
        return pow(e, Rational(-1));
    }

    Expr parse_unary() {
        if (at_punct("-")) {
            ++pos;
            return neg(parse_unary());
        }
        return parse_postfix();
    }

    Expr parse_postfix() {
        Expr e = parse_primary();
        for (;;) {
            if (at_punct("_")) {
                ++pos;
                for (int idx : parse_subscript()) e = total_derivative(e, idx, spec.space);
            } else if (at_punct("^")) {
                ++pos;
                e = pow(e, parse_exponent());
            } else {
                break;
            }
        }
        return e;
    }

    std::vector<int> parse_subscript() {
        std::vector<int> out;
        const Token& at = peek();
        if (at_punct("{")) {
            ++pos;
            bool first = true;
            while (!at_punct("}")) {
                if (!first) {
                    if (at_punct(","))
                        ++pos;
                }
                resolve_subscript_ident(expect_ident(), at, out);
                first = false;
            }
            expect_punct("}");
        } else {
            resolve_subscript_ident(expect_ident(), at, out);
        }
        return out;
    }

    void resolve_subscript_ident(const std::string& s, const Token& at,
                                 std::vector<int>& out) {
        if (is_indep(s)) {
            out.push_back(indep_index(s, at));
            return;
        }
        for (char c : s) {
            std::string v(1, c);
            if (!is_indep(v))
                fail("subscript '" + s + "' is not an independent variable", at);
            out.push_back(indep_index(v, at));
        }
    }

    Rational parse_exponent() {
        if (peek().type == Token::Type::Number) {
            auto q = rational_from_string(get().text);
            if (!q || !is_integer(*q)) fail_here("exponent must be an integer or (rational)");
            return *q;
        }
        if (at_punct("(")) {
            const Token& at = peek();
            ++pos;
            Expr e = parse_expr();
            expect_punct(")");
            if (e->kind != Kind::Number)
                fail("exponent must reduce to a rational constant", at);
            return e->num;
        }
        fail_here("expected exponent");
    }

    std::vector<Expr> parse_args() {
        expect_punct("(");
        std::vector<Expr> args;
        if (!at_punct(")")) {
            args.push_back(parse_expr());
            while (at_punct(",")) {
                ++pos;
                args.push_back(parse_expr());
            }
        }
        expect_punct(")");
        return args;
    }

    Expr make_unknown_app(const std::string& name, const Token& at,
                          std::vector<Expr> args, std::vector<int> dmulti) {
        auto [base, fam] = split_family(name);
        if (!lenient) {
            auto it = block_unknowns.find(name);
            if (it == block_unknowns.end())
                fail("undeclared function '" + name + "'", at);
        }
        dmulti.resize(args.size(), 0);
        return unknown(base, fam, std::move(args), std::move(dmulti));
    }

    Expr parse_primary() {
        const Token& at = peek();
        if (at.type == Token::Type::Number) {
            auto q = rational_from_string(get().text);
            if (!q) fail("malformed number", at);
            return number(*q);
        }
        if (at_punct("(")) {
            ++pos;
            Expr e = parse_expr();
            expect_punct(")");
            return e;
        }
        if (at.type != Token::Type::Ident) fail_here("expected expression");
        std::string name = get().text;

        // D[slots](f)(args)
        if (name == "D" && at_punct("[")) {
            ++pos;
            std::vector<long> slots;
            slots.push_back(expect_int());
            while (at_punct(",")) {
                ++pos;
                slots.push_back(expect_int());
            }
            expect_punct("]");
            expect_punct("(");
            std::string fname = expect_ident();
            expect_punct(")");
            std::vector<Expr> args = parse_args();
            std::vector<int> dmulti(args.size(), 0);
            for (long s : slots) {
                if (s < 1 || s > static_cast<long>(args.size()))
                    fail("derivative slot out of range", at);
                dmulti[s - 1] += 1;
            }
            return make_unknown_app(fname, at, std::move(args), std::move(dmulti));
        }

        if (is_kernel_ident(name) && at_punct("(")) {
            std::vector<Expr> args = parse_args();
            if (name == "sqrt") {
                if (args.size() != 1) fail("sqrt takes one argument", at);
                return sqrt_(args[0]);
            }
            if (name == "hyp2f1") {
                if (args.size() != 4) fail("hyp2f1 takes four arguments", at);
                return kernel(KernelFn::Hyp2F1, std::move(args));
            }
            if (args.size() != 1) fail(name + " takes one argument", at);
            KernelFn fn = name == "exp"   ? KernelFn::Exp
                          : name == "log" ? KernelFn::Log
                          : name == "sin" ? KernelFn::Sin
                          : name == "cos" ? KernelFn::Cos
                                          : KernelFn::Erfi;
            return kernel(fn, std::move(args));
        }

        if (name == "pi") return pi_const();

        if (is_indep(name)) return indep(name, indep_index(name, at));

        int d = dep_index(name);
        if (d >= 0) {
            int order = JetKey::kUnexpanded;
            if (at_punct("[")) {
                ++pos;
                order = static_cast<int>(expect_int());
                expect_punct("]");
                if (order < 0 || order > spec.space.order)
                    fail("epsilon order out of range", at);
            }
            JetKey key;
            key.dep = name;
            key.dep_index = d;
            key.order = order;
            return jet(key);
        }

        // function application or prime derivative
        if (at_punct("(") || at_punct("'")) {
            int primes = 0;
            while (at_punct("'")) {
                ++pos;
                ++primes;
            }
            std::vector<Expr> args = parse_args();
            std::vector<int> dmulti(args.size(), 0);
            if (primes > 0) {
                if (args.size() != 1) fail("prime derivative needs a single argument", at);
                dmulti[0] = primes;
            }
            return make_unknown_app(name, at, std::move(args), std::move(dmulti));
        }

        if (params.count(name)) return parameter(name);
        if (lenient) return parameter(name);
        fail("undeclared symbol '" + name + "'", at);
    }

    // ---- statements ----

    void parse_case_item(CaseSetup& setup, const std::string& kw) {
        if (kw == "constraint") {
            Expr lhs = parse_expr();
            expect_punct("=");
            Expr rhs = parse_expr();
            setup.constraints.emplace_back(lhs, rhs);
        } else if (kw == "eliminate") {
            setup.eliminate = expect_ident();
        } else if (kw == "define") {
            std::string name = expect_ident();
            expect_punct("=");
            setup.defines.emplace_back(name, parse_expr());
        } else if (kw == "domain") {
            std::string name = expect_ident();
            if (!at_ident("in")) fail_here("expected 'in'");
            ++pos;
            expect_punct("(");
            Rational lo = expect_number_signed();
            expect_punct(",");
            Rational hi = expect_number_signed();
            expect_punct(")");
            setup.domains[name] = {lo, hi};
        } else if (kw == "exclude") {
            setup.excludes.push_back(parse_expr());
        } else {
            fail_here("unknown statement '" + kw + "'");
        }
        expect_punct(";");
    }

    std::vector<std::pair<std::string, std::optional<int>>> parse_unknown_decl() {
        std::vector<std::pair<std::string, std::optional<int>>> decls;
        while (peek().type == Token::Type::Ident) {
            std::string name = expect_ident();
            auto [base, fam] = split_family(name);
            block_unknowns[name] = fam;
            decls.emplace_back(base, fam);
        }
        expect_punct(";");
        return decls;
    }

    void parse_generator_block() {
        GeneratorSet set;
        set.name = expect_name();
        expect_punct("{");
        block_unknowns.clear();
        while (!at_punct("}")) {
            const Token& at = peek();
            std::string kw = expect_ident();
            if (kw == "xi" || kw == "eta") {
                expect_punct("[");
                int k = static_cast<int>(expect_int());
                expect_punct("]");
                expect_punct("[");
                std::string var = expect_ident();
                expect_punct("]");
                expect_punct("=");
                Expr e = parse_expr();
                expect_punct(";");
                if (kw == "xi") {
                    if (!is_indep(var)) fail("xi component for unknown variable", at);
                    set.xi[{k, var}] = e;
                } else {
                    if (dep_index(var) < 0) fail("eta component for unknown dependent", at);
                    set.eta[{k, var}] = e;
                }
            } else if (kw == "unknown") {
                auto decls = parse_unknown_decl();
                set.unknowns.insert(set.unknowns.end(), decls.begin(), decls.end());
            } else {
                parse_case_item(set.setup, kw);
            }
        }
        expect_punct("}");
        spec.generators.push_back(std::move(set));
    }

    std::pair<int, Expr> parse_component(const Token& at, const std::string& dep) {
        if (dep_index(dep) < 0) fail("unknown dependent variable '" + dep + "'", at);
        expect_punct("[");
        int k = static_cast<int>(expect_int());
        expect_punct("]");
        expect_punct("=");
        Expr e = parse_expr();
        expect_punct(";");
        if (k < 0 || k > spec.space.order) fail("component order out of range", at);
        return {k, e};
    }

    void parse_representation_block() {
        Representation rep;
        rep.name = expect_name();
        expect_punct("{");
        block_unknowns.clear();
        while (!at_punct("}")) {
            const Token& at = peek();
            std::string kw = expect_ident();
            if (kw == "generator") {
                rep.generator = expect_name();
                expect_punct(";");
            } else if (kw == "unknown") {
                auto decls = parse_unknown_decl();
                rep.unknowns.insert(rep.unknowns.end(), decls.begin(), decls.end());
            } else if (dep_index(kw) >= 0) {
                rep.components.push_back(parse_component(at, kw));
            } else {
                parse_case_item(rep.setup, kw);
            }
        }
        expect_punct("}");
        spec.representations.push_back(std::move(rep));
    }

    void parse_solution_block() {
        SolutionCandidate sol;
        sol.name = expect_name();
        expect_punct("{");
        block_unknowns.clear();
        while (!at_punct("}")) {
            const Token& at = peek();
            std::string kw = expect_ident();
            if (dep_index(kw) >= 0) {
                sol.components.push_back(parse_component(at, kw));
            } else {
                parse_case_item(sol.setup, kw);
            }
        }
        expect_punct("}");
        spec.solutions.push_back(std::move(sol));
    }

    void parse_figure_block() {
        FigureSpec fig;
        fig.name = expect_name();
        expect_punct("{");
        while (!at_punct("}")) {
            const Token& at = peek();
            std::string kw = expect_ident();
            if (kw == "solution") {
                fig.solution = expect_name();
                expect_punct(";");
            } else if (kw == "set") {
                std::string name = expect_ident();
                expect_punct("=");
                fig.values.emplace_back(name, expect_number_signed());
                expect_punct(";");
            } else if (kw == "grid") {
                std::string var = expect_ident();
                if (!at_ident("from")) fail_here("expected 'from'");
                ++pos;
                Rational lo = expect_number_signed();
                if (!at_ident("to")) fail_here("expected 'to'");
                ++pos;
                Rational hi = expect_number_signed();
                if (!at_ident("steps")) fail_here("expected 'steps'");
                ++pos;
                int steps = static_cast<int>(expect_int());
                if (steps < 1) fail("steps must be >= 1", at);
                if (var == "t" || var == spec.space.indep_names.front()) {
                    fig.t_lo = lo;
                    fig.t_hi = hi;
                    fig.t_steps = steps;
                } else {
                    fig.x_lo = lo;
                    fig.x_hi = hi;
                    fig.x_steps = steps;
                }
                expect_punct(";");
            } else {
                fail("unknown statement '" + kw + "'", at);
            }
        }
        expect_punct("}");
        spec.figures.push_back(std::move(fig));
    }

    void run() {
        while (peek().type != Token::Type::End) {
            const Token& at = peek();
            std::string kw = expect_ident();
            if (kw == "indep") {
                while (peek().type == Token::Type::Ident) {
                    spec.space.indep_names.push_back(get().text);
                }
                expect_punct(";");
            } else if (kw == "dep") {
                while (peek().type == Token::Type::Ident)
                    spec.space.dep_names.push_back(get().text);
                expect_punct(";");
            } else if (kw == "small") {
                spec.space.small_name = expect_ident();
                params.insert(spec.space.small_name);
                if (!at_ident("order")) fail_here("expected 'order'");
                ++pos;
                long p = expect_int();
                if (p < 0) fail("perturbation order must be >= 0", at);
                spec.space.order = static_cast<int>(p);
                expect_punct(";");
            } else if (kw == "param") {
                while (peek().type == Token::Type::Ident) {
                    std::string name = get().text;
                    params.insert(name);
                    spec.params.push_back(name);
                }
                expect_punct(";");
            } else if (kw == "equation") {
                block_unknowns.clear();
                Expr lhs = parse_expr();
                expect_punct("=");
                Expr rhs = parse_expr();
                expect_punct(";");
                spec.equations.push_back(sub(lhs, rhs));
            } else if (kw == "generator") {
                parse_generator_block();
            } else if (kw == "representation") {
                parse_representation_block();
            } else if (kw == "solution") {
                parse_solution_block();
            } else if (kw == "figure") {
                parse_figure_block();
            } else {
                fail("unknown statement '" + kw + "'", at);
            }
        }
    }
};

std::string print_rational(const Rational& q) { return to_string(q); }

void print_setup(std::ostringstream& os, const CaseSetup& s, const char* pad) {
    for (const auto& [lhs, rhs] : s.constraints)
        os << pad << "constraint " << to_string(lhs) << " = " << to_string(rhs) << ";\n";
    if (s.eliminate) os << pad << "eliminate " << *s.eliminate << ";\n";
    for (const auto& [name, e] : s.defines)
        os << pad << "define " << name << " = " << to_string(e) << ";\n";
    for (const auto& [name, range] : s.domains)
        os << pad << "domain " << name << " in (" << print_rational(range.first) << ", "
           << print_rational(range.second) << ");\n";
    for (const auto& e : s.excludes) os << pad << "exclude " << to_string(e) << ";\n";
}

void print_unknowns(std::ostringstream& os,
                    const std::vector<std::pair<std::string, std::optional<int>>>& u,
                    const char* pad) {
    if (u.empty()) return;
    os << pad << "unknown";
    for (const auto& [base, fam] : u) {
        os << ' ' << base;
        if (fam) os << *fam;
    }
    os << ";\n";
}

} // namespace

ProblemSpec parse_problem(const std::string& text) {
    Parser p;
    p.toks = tokenize(text);
    p.run();
    return std::move(p.spec);
}

Expr parse_expression(const std::string& text, const JetSpace& space,
                      const std::vector<std::string>& params, bool lenient) {
    Parser p;
    p.spec.space = space;
    p.params.insert(params.begin(), params.end());
    p.params.insert(space.small_name);
    p.lenient = lenient;
    p.toks = tokenize(text);
    Expr e = p.parse_expr();
    if (p.peek().type != Token::Type::End) p.fail_here("trailing input after expression");
    return e;
}

std::string print_problem(const ProblemSpec& spec) {
    std::ostringstream os;
    if (!spec.space.indep_names.empty()) {
        os << "indep";
        for (const auto& n : spec.space.indep_names) os << ' ' << n;
        os << ";\n";
    }
    if (!spec.space.dep_names.empty()) {
        os << "dep";
        for (const auto& n : spec.space.dep_names) os << ' ' << n;
        os << ";\n";
    }
    if (!spec.space.indep_names.empty() || !spec.space.dep_names.empty())
        os << "small " << spec.space.small_name << " order " << spec.space.order << ";\n";
    if (!spec.params.empty()) {
        os << "param";
        for (const auto& n : spec.params) os << ' ' << n;
        os << ";\n";
    }
    for (const auto& eq : spec.equations)
        os << "equation " << to_string(eq) << " = 0;\n";

    for (const auto& g : spec.generators) {
        os << "generator " << g.name << " {\n";
        print_setup(os, g.setup, "  ");
        print_unknowns(os, g.unknowns, "  ");
        for (const auto& [key, e] : g.xi)
            os << "  xi[" << key.first << "][" << key.second << "] = " << to_string(e)
               << ";\n";
        for (const auto& [key, e] : g.eta)
            os << "  eta[" << key.first << "][" << key.second << "] = " << to_string(e)
               << ";\n";
        os << "}\n";
    }
    for (const auto& r : spec.representations) {
        os << "representation " << r.name << " {\n";
        if (!r.generator.empty()) os << "  generator " << r.generator << ";\n";
        print_setup(os, r.setup, "  ");
        print_unknowns(os, r.unknowns, "  ");
        for (const auto& [k, e] : r.components)
            os << "  " << spec.space.dep_names.front() << '[' << k
               << "] = " << to_string(e) << ";\n";
        os << "}\n";
    }
    for (const auto& s : spec.solutions) {
        os << "solution " << s.name << " {\n";
        print_setup(os, s.setup, "  ");
        for (const auto& [k, e] : s.components)
            os << "  " << spec.space.dep_names.front() << '[' << k
               << "] = " << to_string(e) << ";\n";
        os << "}\n";
    }
    for (const auto& f : spec.figures) {
        os << "figure " << f.name << " {\n";
        if (!f.solution.empty()) os << "  solution " << f.solution << ";\n";
        for (const auto& [name, v] : f.values)
            os << "  set " << name << " = " << print_rational(v) << ";\n";
        os << "  grid " << spec.space.indep_names.front() << " from "
           << print_rational(f.t_lo) << " to " << print_rational(f.t_hi) << " steps "
           << f.t_steps << ";\n";
        os << "  grid " << spec.space.indep_names.back() << " from "
           << print_rational(f.x_lo) << " to " << print_rational(f.x_hi) << " steps "
           << f.x_steps << ";\n";
        os << "}\n";
    }
    return os.str();
}

} // namespace apxsym
