#include "apxsym/error.hpp"
#include "apxsym/eval.hpp"
#include "apxsym/parse.hpp"
#include "apxsym/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using json = nlohmann::ordered_json;

namespace {

using namespace apxsym;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

json verdict_json(const OrderVerdict& v) {
    json o;
    o["order"] = v.eps_order;
    o["status"] = to_string(v.verdict);
    if (v.samples_used > 0) {
        o["samples"] = v.samples_used;
        o["max_abs"] = v.max_abs;
    }
    if (v.witness) {
        json w;
        for (const auto& [name, value] : v.witness->bindings) w[name] = value;
        o["witness"] = {{"bindings", w},
                        {"residual", v.witness->residual},
                        {"scale", v.witness->scale}};
    }
    return o;
}

json report_json(const VerificationReport& rep, const std::string& command,
                 const std::string& input) {
    json o;
    o["schema"] = 1;
    o["command"] = command;
    o["input"] = input;
    o["subject"] = rep.subject;
    o["mode"] = rep.mode;
    o["tolerance"] = rep.tolerance;
    o["samples"] = rep.samples;
    o["seed"] = rep.seed;
    json orders = json::array();
    for (const auto& v : rep.orders) orders.push_back(verdict_json(v));
    o["orders"] = orders;
    o["passed"] = rep.passed;
    return o;
}

int emit_report(const VerificationReport& rep, const std::string& command,
                const std::string& input, const std::string& out_path) {
    json o = report_json(rep, command, input);
    write_output(out_path.empty() ? "-" : out_path, o.dump(2) + "\n");
    std::cerr << command << " " << rep.subject << ": "
              << (rep.passed ? "pass" : "FAIL") << " (" << rep.elapsed_seconds
              << " s)\n";
    return rep.passed ? 0 : 1;
}

VerifyOptions make_options(double tolerance, int samples, std::uint64_t seed) {
    VerifyOptions o;
    if (tolerance <= 0) throw Error("tolerance must be positive");
    if (samples < 1) throw Error("sample count must be >= 1");
    o.tolerance = tolerance;
    o.samples = samples;
    o.seed = seed;
    return o;
}

SymmetryMode parse_mode(const std::string& mode) {
    if (mode == "lie") return SymmetryMode::Lie;
    if (mode == "q-conditional") return SymmetryMode::QConditional;
    throw Error("mode must be 'lie' or 'q-conditional'");
}

// Builds the generator set to check, supporting the seeded mutation fixtures
// used by the sensitivity suite: "<set>@mutate:<seed>:<index>".
GeneratorSet resolve_set(const ProblemSpec& spec, const std::string& name) {
    std::size_t at = name.find("@mutate:");
    if (at == std::string::npos) return spec.generator_set(name);
    std::string base = name.substr(0, at);
    std::string rest = name.substr(at + 8);
    std::size_t colon = rest.find(':');
    std::uint64_t seed = std::stoull(rest.substr(0, colon));
    int index = colon == std::string::npos ? 0 : std::stoi(rest.substr(colon + 1));
    auto muts = enumerate_mutations(spec, spec.generator_set(base), seed, index + 1);
    if (static_cast<int>(muts.size()) <= index)
        throw Error("no mutation " + std::to_string(index) + " for " + base);
    return muts[index].mutated;
}

int run(int argc, char** argv) {
    CLI::App app{"approximate Lie / Q-conditional symmetry verification"};
    app.require_subcommand(1);

    std::string input, out_path, set_name, mode_name = "q-conditional";
    double tolerance = 1e-9;
    int samples = 100;
    std::uint64_t seed = 0x5eed;
    int order_override = -1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("input", input, "problem file (.apx)")->required();
        cmd->add_option("--json", out_path, "write the JSON report here (default stdout)");
        cmd->add_option("--tolerance", tolerance, "relative numeric tolerance");
        cmd->add_option("--samples", samples, "numeric sample count");
        cmd->add_option("--seed", seed, "sampling seed");
        cmd->add_option("--order", order_override, "override the perturbation order p");
    };

    auto* derive = app.add_subcommand("derive-determining",
                                      "emit the determining system of a generic generator");
    add_common(derive);
    derive->add_option("--mode", mode_name, "lie | q-conditional");
    std::string text_out;
    derive->add_option("--text", text_out, "also write the system as DSL text here");

    auto* checksym = app.add_subcommand("check-symmetry",
                                        "verify a generator set fixture");
    add_common(checksym);
    checksym->add_option("--set", set_name, "generator set name")->required();
    checksym->add_option("--mode", mode_name, "lie | q-conditional");

    auto* checkisc = app.add_subcommand("check-isc",
                                        "verify a representation against the AISC");
    add_common(checkisc);
    std::string rep_name;
    checkisc->add_option("--representation", rep_name, "representation name")->required();

    auto* verifysol = app.add_subcommand("verify-solution",
                                         "verify a closed-form solution candidate");
    add_common(verifysol);
    std::string sol_name;
    verifysol->add_option("--solution", sol_name, "solution name")->required();

    auto* conv = app.add_subcommand("convergence",
                                    "grid residuals of the untruncated equation");
    add_common(conv);
    std::string fig_name;
    conv->add_option("--figure", fig_name, "figure parameter set")->required();
    std::vector<double> eps_list{0.03, 0.015};
    conv->add_option("--eps", eps_list, "epsilon values");

    auto* grid = app.add_subcommand("grid", "emit figure data as CSV");
    add_common(grid);
    std::string grid_fig, svg_path;
    grid->add_option("--figure", grid_fig, "figure parameter set")->required();
    grid->add_option("--svg", svg_path, "also write an SVG heatmap here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    ProblemSpec spec = parse_problem(read_file(input));
    if (order_override >= 0) spec.space.order = order_override;
    VerifyOptions opts = make_options(tolerance, samples, seed);

    if (*derive) {
        SymmetryMode mode = parse_mode(mode_name);
        int gauge = mode == SymmetryMode::QConditional ? 0 : -1;
        Generator g = lift_generator(generic_generator(spec.space, gauge), spec.space);
        auto cond = invariance_condition(spec, g);
        auto subs = manifold_substitutions(spec, g, mode);
        DeterminingSystem sys = extract_determining(cond, subs);

        json o;
        o["schema"] = 1;
        o["command"] = "derive-determining";
        o["input"] = input;
        o["mode"] = mode_name;
        json eqs = json::array();
        std::ostringstream text;
        for (const auto& eq : sys.equations) {
            eqs.push_back({{"order", eq.eps_order},
                           {"monomial", to_string(eq.monomial)},
                           {"equation", to_string(eq.equation)}});
            text << "# order " << eq.eps_order << ", monomial " << to_string(eq.monomial)
                 << "\n"
                 << to_string(eq.equation) << " = 0;\n";
        }
        o["equations"] = eqs;
        write_output(out_path.empty() ? "-" : out_path, o.dump(2) + "\n");
        if (!text_out.empty()) write_output(text_out, text.str());
        std::cerr << "derive-determining: " << sys.equations.size() << " equations\n";
        return 0;
    }
    if (*checksym) {
        GeneratorSet set = resolve_set(spec, set_name);
        VerificationReport rep =
            check_symmetry(spec, set, parse_mode(mode_name), opts);
        return emit_report(rep, "check-symmetry", input, out_path);
    }
    if (*checkisc) {
        VerificationReport rep = check_isc(spec, spec.representation(rep_name), opts);
        return emit_report(rep, "check-isc", input, out_path);
    }
    if (*verifysol) {
        VerificationReport rep = verify_solution(spec, spec.solution(sol_name), opts);
        return emit_report(rep, "verify-solution", input, out_path);
    }
    if (*conv) {
        ConvergenceReport rep = epsilon_convergence(spec, spec.figure(fig_name), eps_list);
        json o;
        o["schema"] = 1;
        o["command"] = "convergence";
        o["input"] = input;
        o["figure"] = fig_name;
        o["solution"] = rep.subject;
        json rows = json::array();
        for (const auto& row : rep.rows)
            rows.push_back({{"eps", row.eps}, {"max_residual", row.max_residual}});
        o["rows"] = rows;
        o["fitted_order"] = rep.fitted_order;
        write_output(out_path.empty() ? "-" : out_path, o.dump(2) + "\n");
        std::cerr << "convergence " << rep.subject << ": fitted order "
                  << rep.fitted_order << " (" << rep.elapsed_seconds << " s)\n";
        return 0;
    }
    if (*grid) {
        const FigureSpec& fig = spec.figure(grid_fig);
        FigureSurface fs = figure_surface(spec, fig);
        GridAxis t_axis{spec.space.indep_var(0), to_double(fig.t_lo), to_double(fig.t_hi),
                        fig.t_steps};
        GridAxis x_axis{spec.space.indep_var(spec.space.n() - 1), to_double(fig.x_lo),
                        to_double(fig.x_hi), fig.x_steps};
        GridData g = grid_eval({fs.expr}, t_axis, x_axis, fs.context, {"u"});
        std::ostringstream csv;
        grid_emit_csv(g, csv);
        write_output(out_path.empty() ? "-" : out_path, csv.str());
        if (!svg_path.empty()) {
            std::ostringstream svg;
            grid_emit_svg(g, svg);
            write_output(svg_path, svg.str());
        }
        std::cerr << "grid " << grid_fig << ": " << g.values.size() << " samples\n";
        return 0;
    }
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const apxsym::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
