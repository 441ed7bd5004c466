#include "plab/numerics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace plab::num {

QuadratureRule gauss_legendre(int n) {
    if (n < 2 || n > 256)
        throw std::invalid_argument("gauss_legendre: order must be in [2, 256]");

    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);

    // Newton iteration on P_n with the standard Chebyshev-based initial guess.
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            // Legendre recurrence for P_n(x) and P_n'(x).
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
            if (it == 99)
                throw std::runtime_error("gauss_legendre: Newton iteration failed");
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Mirror; x from the cosine guess is positive for small i.
        rule.nodes[n - 1 - i] = x;
        rule.nodes[i] = -x;
        rule.weights[n - 1 - i] = w;
        rule.weights[i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

SemiInfiniteRule semi_infinite_rule(double scale, int n) {
    if (!(scale > 0.0))
        throw std::invalid_argument("semi_infinite_rule: scale must be > 0");
    const QuadratureRule gl = gauss_legendre(n);
    const double p_max = 50.0 * scale;
    SemiInfiniteRule rule;
    rule.points.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        const double u = 0.5 * (gl.nodes[i] + 1.0);  // [0, 1]
        rule.points[i] = p_max * u * u;
        rule.weights[i] = 0.5 * gl.weights[i] * 2.0 * p_max * u;
    }
    return rule;
}

double integrate_semi_infinite(const std::function<double(double)>& integrand,
                               double scale, int n) {
    const SemiInfiniteRule rule = semi_infinite_rule(scale, n);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.points.size(); ++i) {
        const double f = integrand(rule.points[i]);
        if (!std::isfinite(f)) {
            std::ostringstream os;
            os << "integrate_semi_infinite: non-finite integrand at p = "
               << rule.points[i];
            throw std::runtime_error(os.str());
        }
        acc += rule.weights[i] * f;
    }
    return acc;
}

LeastSquaresResult least_squares_solve(std::span<const double> a, int rows,
                                       int cols, std::span<const double> b) {
    if (rows < cols)
        throw std::invalid_argument("least_squares_solve: need rows >= cols");
    if (static_cast<int>(a.size()) != rows * cols ||
        static_cast<int>(b.size()) != rows)
        throw std::invalid_argument("least_squares_solve: shape mismatch");

    Eigen::MatrixXd A(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) A(r, c) = a[static_cast<std::size_t>(r) * cols + c];
    Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(b.data(), rows);

    if (!A.allFinite())
        throw std::invalid_argument("least_squares_solve: non-finite matrix entry");

    // Complete orthogonal decomposition: rank-revealing, and yields the
    // minimum-norm solution when the numerical rank drops below cols.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    Eigen::VectorXd x = cod.solve(rhs);

    LeastSquaresResult result;
    result.rank = static_cast<int>(cod.rank());
    result.rank_deficient = result.rank < cols;
    result.x.assign(x.data(), x.data() + cols);
    return result;
}

// --- RngStream --------------------------------------------------------------

namespace {

inline std::uint64_t splitmix64(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) {
    // Decorrelate (seed, stream) pairs before streaming.
    std::uint64_t s = seed;
    const std::uint64_t mixed = splitmix64(s);
    s = mixed ^ (0x6a09e667f3bcc909ULL + stream * 0x3c6ef372fe94f82aULL);
    state_ = splitmix64(s);
}

std::uint64_t RngStream::next_u64() { return splitmix64(state_); }

double RngStream::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    if (!(lo < hi))
        throw std::invalid_argument("RngStream::uniform: requires lo < hi");
    return lo + (hi - lo) * uniform01();
}

int RngStream::sign() { return (next_u64() >> 63) ? 1 : -1; }

double RngStream::gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
}

std::uint64_t RngStream::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("RngStream::below: n must be > 0");
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

}  // namespace plab::num
