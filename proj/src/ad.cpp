#include "plab/ad.hpp"

#include <sstream>

namespace plab::ad {

namespace detail {

[[noreturn]] void domain_error(const char* op, double value) {
    std::ostringstream os;
    os << "ad: " << op << " of non-positive/out-of-domain value " << value;
    throw std::domain_error(os.str());
}

}  // namespace detail

Var Tape::dot(std::span<const Var> a, std::span<const Var> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("ad: dot operand length mismatch");
    const auto offset = static_cast<std::uint32_t>(pairs_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += val_[a[i].index()] * val_[b[i].index()];
        pairs_.push_back(Pair{a[i].index(), b[i].index()});
    }
    return push(Op::Dot, acc, offset, static_cast<std::uint32_t>(a.size()), 0.0, 0.0);
}

Var Tape::wsum(std::span<const Var> x, std::span<const double> coef, double bias) {
    if (x.size() != coef.size())
        throw std::invalid_argument("ad: wsum operand length mismatch");
    const auto offset = static_cast<std::uint32_t>(terms_.size());
    double acc = bias;
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc += coef[i] * val_[x[i].index()];
        terms_.push_back(Term{x[i].index(), coef[i]});
    }
    return push(Op::WSum, acc, offset, static_cast<std::uint32_t>(x.size()), 0.0, 0.0);
}

void Tape::backward(const Var& root) {
    if (!root.attached())
        throw std::invalid_argument("ad: backward on detached Var");
    if (root.tape() != this)
        throw std::invalid_argument("ad: backward root lives on another tape");

    adj_.assign(val_.size(), 0.0);
    adj_[root.index()] = 1.0;

    for (std::uint32_t i = root.index() + 1; i-- > 0;) {
        const double a = adj_[i];
        if (a == 0.0) continue;
        const Meta& m = meta_[i];
        switch (m.op) {
            case Op::Leaf:
                break;
            case Op::Dot: {
                const Pair* p = pairs_.data() + m.a;
                for (std::uint32_t k = 0; k < m.b; ++k) {
                    adj_[p[k].a] += a * val_[p[k].b];
                    adj_[p[k].b] += a * val_[p[k].a];
                }
                break;
            }
            case Op::WSum: {
                const Term* t = terms_.data() + m.a;
                for (std::uint32_t k = 0; k < m.b; ++k)
                    adj_[t[k].x] += a * t[k].c;
                break;
            }
            default:
                adj_[m.a] += a * m.da;
                if (m.op == Op::Add || m.op == Op::Sub || m.op == Op::Mul ||
                    m.op == Op::Div)
                    adj_[m.b] += a * m.db;
                break;
        }
    }
}

std::vector<double> grad_wrt_input(const TapeFn& fn, std::span<const double> x) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(x.size());
    for (double v : x) leaves.push_back(tape.leaf(v));
    Var root = fn(tape, leaves);
    tape.backward(root);
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        g[i] = leaves[i].grad();
        if (!std::isfinite(g[i])) {
            std::ostringstream os;
            os << "ad: non-finite gradient component at index " << i;
            throw std::runtime_error(os.str());
        }
    }
    return g;
}

double eval_fn(const TapeFn& fn, std::span<const double> x) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(x.size());
    for (double v : x) leaves.push_back(tape.leaf(v));
    return fn(tape, leaves).value();
}

std::vector<double> finite_diff_grad(const TapeFn& fn, std::span<const double> x,
                                     double h) {
    if (!(h > 0.0)) throw std::invalid_argument("ad: finite-difference step must be > 0");
    std::vector<double> pt(x.begin(), x.end());
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = pt[i];
        pt[i] = xi + h;
        const double fp = eval_fn(fn, pt);
        pt[i] = xi - h;
        const double fm = eval_fn(fn, pt);
        pt[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

double finite_diff_check(const TapeFn& fn, std::span<const double> x, double h) {
    const std::vector<double> g_ad = grad_wrt_input(fn, x);
    const std::vector<double> g_fd = finite_diff_grad(fn, x, h);
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double rel =
            std::fabs(g_ad[i] - g_fd[i]) / (std::fabs(g_fd[i]) + 1e-12);
        worst = std::fmax(worst, rel);
    }
    return worst;
}

}  // namespace plab::ad
