#pragma once

// Reverse-mode automatic differentiation over scalar computation graphs.
//
// A Tape owns an append-only list of nodes in topological order. Var is a
// cheap handle (tape pointer + index). Values are computed eagerly when an
// op is recorded; backward() seeds the root adjoint with 1 and sweeps the
// tape in reverse, resetting all adjoints first so repeated calls never
// contaminate each other.
//
// Besides the elementary ops there are two fused node kinds that keep dense
// network layers from exploding into one node per multiply-add:
//   dot(a, b)        = sum_i a[i]*b[i]          (both sides differentiable)
//   wsum(x, c, bias) = bias + sum_i c[i]*x[i]   (constant coefficients)
//
// Tapes are single-threaded; distinct tapes may be used concurrently.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace plab::ad {

class Tape;

class Var {
public:
    Var() = default;

    double value() const;
    double grad() const;
    bool attached() const { return tape_ != nullptr; }
    Tape* tape() const { return tape_; }
    std::uint32_t index() const { return idx_; }

private:
    friend class Tape;
    Var(Tape* t, std::uint32_t i) : tape_(t), idx_(i) {}

    Tape* tape_ = nullptr;
    std::uint32_t idx_ = 0;
};

enum class Op : std::uint8_t {
    Leaf,
    Add, Sub, Mul, Div,
    AddC, CSub, MulC, CDiv,
    Neg, PowC, Exp, Log, Sqrt, Tanh, Softplus, Sin,
    Dot, WSum,
};

class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    std::size_t size() const { return val_.size(); }

    // Drops every node but keeps allocated capacity for reuse across steps.
    void clear() {
        val_.clear();
        adj_.clear();
        meta_.clear();
        pairs_.clear();
        terms_.clear();
    }

    Var leaf(double v) { return push(Op::Leaf, v, 0, 0, 0.0, 0.0); }

    // Seeds d(root)/d(root) = 1 and accumulates adjoints into every node
    // reachable from the root. Adjoints are reset first on every call.
    void backward(const Var& root);

    // Fused inner product; a and b must be equal length and live on this tape.
    Var dot(std::span<const Var> a, std::span<const Var> b);

    // bias + sum_i coef[i]*x[i] with constant coefficients.
    Var wsum(std::span<const Var> x, std::span<const double> coef, double bias = 0.0);

    double value_of(const Var& v) const { return val_[v.idx_]; }
    double grad_of(const Var& v) const {
        return v.idx_ < adj_.size() ? adj_[v.idx_] : 0.0;
    }

    // --- op recording (used by the free operator functions) -----------------
    Var push(Op op, double value, std::uint32_t a, std::uint32_t b,
             double da, double db) {
        val_.push_back(value);
        meta_.push_back(Meta{a, b, da, db, op});
        return Var(this, static_cast<std::uint32_t>(val_.size() - 1));
    }

private:
    struct Meta {
        std::uint32_t a = 0;  // parent index, or pool offset for Dot/WSum
        std::uint32_t b = 0;  // parent index, or pool count for Dot/WSum
        double da = 0.0;      // local partial wrt parent a (or WSum bias slot)
        double db = 0.0;      // local partial wrt parent b
        Op op = Op::Leaf;
    };
    struct Pair {
        std::uint32_t a, b;
    };
    struct Term {
        std::uint32_t x;
        double c;
    };

    std::vector<double> val_;
    std::vector<double> adj_;
    std::vector<Meta> meta_;
    std::vector<Pair> pairs_;
    std::vector<Term> terms_;
};

inline double Var::value() const { return tape_->value_of(*this); }
inline double Var::grad() const { return tape_->grad_of(*this); }

namespace detail {

inline Tape& same_tape(const Var& x, const Var& y) {
    if (!x.attached() || !y.attached())
        throw std::invalid_argument("ad: operation on detached Var");
    if (x.tape() != y.tape())
        throw std::invalid_argument("ad: operands live on different tapes");
    return *x.tape();
}

inline Tape& tape_of(const Var& x) {
    if (!x.attached())
        throw std::invalid_argument("ad: operation on detached Var");
    return *x.tape();
}

[[noreturn]] void domain_error(const char* op, double value);

}  // namespace detail

// --- elementary arithmetic ---------------------------------------------------

inline Var operator+(const Var& x, const Var& y) {
    Tape& t = detail::same_tape(x, y);
    return t.push(Op::Add, x.value() + y.value(), x.index(), y.index(), 1.0, 1.0);
}
inline Var operator-(const Var& x, const Var& y) {
    Tape& t = detail::same_tape(x, y);
    return t.push(Op::Sub, x.value() - y.value(), x.index(), y.index(), 1.0, -1.0);
}
inline Var operator*(const Var& x, const Var& y) {
    Tape& t = detail::same_tape(x, y);
    return t.push(Op::Mul, x.value() * y.value(), x.index(), y.index(),
                  y.value(), x.value());
}
inline Var operator/(const Var& x, const Var& y) {
    Tape& t = detail::same_tape(x, y);
    const double yv = y.value();
    return t.push(Op::Div, x.value() / yv, x.index(), y.index(),
                  1.0 / yv, -x.value() / (yv * yv));
}

inline Var operator+(const Var& x, double c) {
    Tape& t = detail::tape_of(x);
    return t.push(Op::AddC, x.value() + c, x.index(), 0, 1.0, 0.0);
}
inline Var operator+(double c, const Var& x) { return x + c; }
inline Var operator-(const Var& x, double c) { return x + (-c); }
inline Var operator-(double c, const Var& x) {
    Tape& t = detail::tape_of(x);
    return t.push(Op::CSub, c - x.value(), x.index(), 0, -1.0, 0.0);
}
inline Var operator*(const Var& x, double c) {
    Tape& t = detail::tape_of(x);
    return t.push(Op::MulC, x.value() * c, x.index(), 0, c, 0.0);
}
inline Var operator*(double c, const Var& x) { return x * c; }
inline Var operator/(const Var& x, double c) { return x * (1.0 / c); }
inline Var operator/(double c, const Var& x) {
    Tape& t = detail::tape_of(x);
    const double xv = x.value();
    return t.push(Op::CDiv, c / xv, x.index(), 0, -c / (xv * xv), 0.0);
}
inline Var operator-(const Var& x) {
    Tape& t = detail::tape_of(x);
    return t.push(Op::Neg, -x.value(), x.index(), 0, -1.0, 0.0);
}

// --- elementary functions ----------------------------------------------------

inline Var exp(const Var& x) {
    Tape& t = detail::tape_of(x);
    const double v = std::exp(x.value());
    return t.push(Op::Exp, v, x.index(), 0, v, 0.0);
}
inline Var log(const Var& x) {
    Tape& t = detail::tape_of(x);
    if (!(x.value() > 0.0)) detail::domain_error("log", x.value());
    return t.push(Op::Log, std::log(x.value()), x.index(), 0, 1.0 / x.value(), 0.0);
}
inline Var sqrt(const Var& x) {
    Tape& t = detail::tape_of(x);
    if (x.value() < 0.0) detail::domain_error("sqrt", x.value());
    const double v = std::sqrt(x.value());
    return t.push(Op::Sqrt, v, x.index(), 0, 0.5 / v, 0.0);
}
inline Var tanh(const Var& x) {
    Tape& t = detail::tape_of(x);
    const double v = std::tanh(x.value());
    return t.push(Op::Tanh, v, x.index(), 0, 1.0 - v * v, 0.0);
}

inline double softplus_value(double z) {
    // softplus(z) = z + softplus(-z) for large z keeps exp() in range.
    return std::fmax(z, 0.0) + std::log1p(std::exp(-std::fabs(z)));
}
inline double sigmoid_value(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline Var softplus(const Var& x) {
    Tape& t = detail::tape_of(x);
    return t.push(Op::Softplus, softplus_value(x.value()), x.index(), 0,
                  sigmoid_value(x.value()), 0.0);
}
inline Var sin(const Var& x) {
    Tape& t = detail::tape_of(x);
    return t.push(Op::Sin, std::sin(x.value()), x.index(), 0,
                  std::cos(x.value()), 0.0);
}
inline Var pow(const Var& x, double c) {
    Tape& t = detail::tape_of(x);
    const double xv = x.value();
    if (xv < 0.0 && c != std::floor(c)) detail::domain_error("pow", xv);
    const double v = std::pow(xv, c);
    return t.push(Op::PowC, v, x.index(), 0, c * std::pow(xv, c - 1.0), 0.0);
}
inline Var sqr(const Var& x) { return x * x; }

// --- gradient utilities ------------------------------------------------------

// Builds a scalar expression from input leaves. The same callable serves both
// the AD path (gradients) and plain evaluation (value of the returned root).
using TapeFn = std::function<Var(Tape&, std::span<const Var>)>;

// Gradient of fn wrt its inputs, parameters treated as constants.
// Throws if any gradient component is non-finite, naming the coordinate.
std::vector<double> grad_wrt_input(const TapeFn& fn, std::span<const double> x);

// Plain evaluation of a TapeFn at x (scratch tape, value only).
double eval_fn(const TapeFn& fn, std::span<const double> x);

// max_i |g_ad,i - g_fd,i| / (|g_fd,i| + 1e-12) with central differences.
double finite_diff_check(const TapeFn& fn, std::span<const double> x, double h);

// Central-difference gradient, exposed for test oracles.
std::vector<double> finite_diff_grad(const TapeFn& fn, std::span<const double> x,
                                     double h);

// --- second-order bidirectional jets -----------------------------------------
//
// Forward propagation of (value, d/dx, d/dy, d2/dx2, d2/dy2) through
// elementary ops, enough for Laplacians of scalar fields over (x, y).
// S = double gives plain jets; S = Var puts the whole bundle on a tape so the
// Laplacian itself stays differentiable wrt parameters.

template <class S>
struct BiJet {
    S v, dx, dy, dxx, dyy;
};

template <class S>
BiJet<S> operator+(const BiJet<S>& a, const BiJet<S>& b) {
    return {a.v + b.v, a.dx + b.dx, a.dy + b.dy, a.dxx + b.dxx, a.dyy + b.dyy};
}

template <class S>
BiJet<S> tanh(const BiJet<S>& a) {
    using std::tanh;
    S t = tanh(a.v);
    S s = 1.0 - t * t;           // tanh'
    S ts2 = -2.0 * (t * s);      // tanh''
    return {t, s * a.dx, s * a.dy,
            s * a.dxx + ts2 * (a.dx * a.dx),
            s * a.dyy + ts2 * (a.dy * a.dy)};
}

}  // namespace plab::ad
