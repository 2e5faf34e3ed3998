#include "apxsym/eval.hpp"

#include "apxsym/error.hpp"
#include "apxsym/special_functions.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <ostream>
#include <thread>

namespace apxsym {

namespace {

struct Evaluator {
    const EvalContext* ctx;
    double max_mag = 0.0;

    double track(double v) {
        if (!std::isfinite(v)) throw EvalDomainError("non-finite intermediate value");
        double a = std::fabs(v);
        if (a > max_mag) max_mag = a;
        return v;
    }

    double run(const Expr& e) {
        switch (e->kind) {
        case Kind::Number:
            return track(to_double(e->num));
        case Kind::Param:
            if (e->name == "pi") {
                auto it = ctx->bindings.find(e);
                return track(it != ctx->bindings.end() ? it->second : M_PI);
            }
            [[fallthrough]];
        case Kind::Indep:
        case Kind::Jet:
        case Kind::Unknown: {
            if (e->kind == Kind::Unknown) {
                // arguments participate only through the atom identity
            }
            auto it = ctx->bindings.find(e);
            if (it == ctx->bindings.end())
                throw Error("eval: unbound atom " + to_string(e));
            return track(it->second);
        }
        case Kind::Power: {
            double b = run(e->kids[0]);
            double q = to_double(e->expo);
            if (sign(e->expo) < 0 && std::fabs(b) < 1e-300)
                throw EvalDomainError("division by zero");
            if (!is_integer(e->expo) && b < 0.0)
                throw EvalDomainError("fractional power of a negative base");
            return track(std::pow(b, q));
        }
        case Kind::Kernel: {
            switch (e->fn) {
            case KernelFn::Exp: {
                double a = run(e->kids[0]);
                if (a > 700.0) throw EvalDomainError("exp overflow");
                return track(std::exp(a));
            }
            case KernelFn::Log: {
                double a = run(e->kids[0]);
                if (a <= 0.0) throw EvalDomainError("log of a non-positive value");
                return track(std::log(a));
            }
            case KernelFn::Sin:
                return track(std::sin(run(e->kids[0])));
            case KernelFn::Cos:
                return track(std::cos(run(e->kids[0])));
            case KernelFn::Erfi:
                return track(erfi(run(e->kids[0])));
            case KernelFn::Hyp2F1: {
                double a = run(e->kids[0]);
                double b = run(e->kids[1]);
                double c = run(e->kids[2]);
                double z = run(e->kids[3]);
                return track(hyp2f1(a, b, c, z));
            }
            }
            throw Error("eval: unknown kernel");
        }
        case Kind::Product: {
            double v = 1.0;
            for (const auto& k : e->kids) v *= run(k);
            return track(v);
        }
        case Kind::Sum: {
            double v = 0.0;
            for (const auto& k : e->kids) v += run(k);
            return track(v);
        }
        }
        throw Error("eval: unreachable");
    }
};

} // namespace

EvalResult eval(const Expr& e, const EvalContext& ctx) {
    Evaluator ev;
    ev.ctx = &ctx;
    double v = ev.run(e);
    return {v, ev.max_mag};
}

double eval_value(const Expr& e, const EvalContext& ctx) { return eval(e, ctx).value; }

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    unsigned threads = std::thread::hardware_concurrency();
    if (threads == 0) threads = 1;
    if (const char* env = std::getenv("APXSYM_THREADS")) {
        long cap = std::atol(env);
        if (cap >= 1 && static_cast<unsigned long>(cap) < threads)
            threads = static_cast<unsigned>(cap);
    }
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

GridData grid_eval(const std::vector<Expr>& exprs, const GridAxis& t_axis,
                   const GridAxis& x_axis, const EvalContext& base,
                   const std::vector<std::string>& names) {
    GridData g;
    g.row_axis = t_axis;
    g.col_axis = x_axis;
    g.column_names = names;
    std::size_t rows = static_cast<std::size_t>(t_axis.steps);
    std::size_t cols = static_cast<std::size_t>(x_axis.steps);
    g.values.assign(rows * cols, std::vector<double>(exprs.size(), 0.0));

    auto coord = [](const GridAxis& a, std::size_t i) {
        if (a.steps <= 1) return a.lo;
        return a.lo + (a.hi - a.lo) * static_cast<double>(i) / (a.steps - 1);
    };

    parallel_for(rows, [&](std::size_t r) {
        EvalContext ctx = base;
        ctx.bind(t_axis.var, coord(t_axis, r));
        for (std::size_t c = 0; c < cols; ++c) {
            ctx.bind(x_axis.var, coord(x_axis, c));
            for (std::size_t k = 0; k < exprs.size(); ++k) {
                try {
                    g.values[r * cols + c][k] = eval_value(exprs[k], ctx);
                } catch (const EvalDomainError&) {
                    if (base.policy == FailurePolicy::Error) throw;
                    g.values[r * cols + c][k] = std::nan("");
                }
            }
        }
    });
    return g;
}

void grid_emit_csv(const GridData& g, std::ostream& os) {
    os << g.row_axis.var->name << ',' << g.col_axis.var->name;
    for (const auto& n : g.column_names) os << ',' << n;
    os << '\n';
    auto coord = [](const GridAxis& a, std::size_t i) {
        if (a.steps <= 1) return a.lo;
        return a.lo + (a.hi - a.lo) * static_cast<double>(i) / (a.steps - 1);
    };
    std::size_t cols = static_cast<std::size_t>(g.col_axis.steps);
    for (std::size_t r = 0; r < static_cast<std::size_t>(g.row_axis.steps); ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            os << format_double(coord(g.row_axis, r)) << ','
               << format_double(coord(g.col_axis, c));
            for (double v : g.values[r * cols + c]) os << ',' << format_double(v);
            os << '\n';
        }
    }
}

void grid_emit_svg(const GridData& g, std::ostream& os) {
    std::size_t rows = static_cast<std::size_t>(g.row_axis.steps);
    std::size_t cols = static_cast<std::size_t>(g.col_axis.steps);
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (const auto& row : g.values) {
        if (row.empty() || std::isnan(row[0])) continue;
        if (first || row[0] < lo) lo = row[0];
        if (first || row[0] > hi) hi = row[0];
        first = false;
    }
    if (hi <= lo) hi = lo + 1.0;
    const int cell = 4;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cols * cell
       << "\" height=\"" << rows * cell << "\">\n";
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            double v = g.values[r * cols + c].empty() ? lo : g.values[r * cols + c][0];
            double s = std::isnan(v) ? 0.0 : (v - lo) / (hi - lo);
            int red = static_cast<int>(255 * s);
            int blue = 255 - red;
            os << "<rect x=\"" << c * cell << "\" y=\"" << (rows - 1 - r) * cell
               << "\" width=\"" << cell << "\" height=\"" << cell
               << "\" fill=\"rgb(" << red << ",64," << blue << ")\"/>\n";
        }
    os << "</svg>\n";
}

} // namespace apxsym
