#pragma once

// Gaussian quadrature, semi-infinite integral mapping, dense least squares,
// and seeded RNG streams. Everything here is pure and safe for concurrent
// use with distinct RngStream instances.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace plab::num {

// --- quadrature ---------------------------------------------------------------

struct QuadratureRule {
    std::vector<double> nodes;    // strictly increasing on [-1, 1], symmetric
    std::vector<double> weights;  // sum to 2 within 1e-12
    int order() const { return static_cast<int>(nodes.size()); }
};

// Gauss-Legendre rule, exact for polynomials of degree <= 2n-1. 2 <= n <= 256.
QuadratureRule gauss_legendre(int n);

// Mapped rule for integrands on [0, inf) that decay at least exponentially
// beyond p >> scale. Truncates at p_max = 50*scale and applies the graded
// substitution p = p_max*u^2, which clusters nodes near p = 0 so the
// p^2*log(...) integrands of Bose/Fermi statistics converge at order 64.
struct SemiInfiniteRule {
    std::vector<double> points;   // p_i in [0, p_max]
    std::vector<double> weights;  // includes the Jacobian of the map
};
SemiInfiniteRule semi_infinite_rule(double scale, int n);

// sum_i w_i * f(p_i) over the mapped rule; throws on a non-finite sample,
// reporting the offending node location.
double integrate_semi_infinite(const std::function<double(double)>& integrand,
                               double scale, int n);

// --- least squares --------------------------------------------------------

struct LeastSquaresResult {
    std::vector<double> x;
    int rank = 0;
    bool rank_deficient = false;
};

// Minimizes ||Ax - b||_2 via a rank-revealing orthogonal factorization.
// A is row-major m x n, m >= n. On numerical rank < n the minimum-norm
// solution is returned and rank_deficient is set.
LeastSquaresResult least_squares_solve(std::span<const double> a, int rows,
                                       int cols, std::span<const double> b);

// --- seeded RNG streams -----------------------------------------------------

// Deterministic per (seed, stream). Independent streams are obtained by
// varying the stream id; the generator is splitmix64, which is portable and
// has no implementation-defined distribution behaviour.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();
    double uniform(double lo, double hi);  // requires lo < hi
    double uniform01();                    // [0, 1)
    int sign();                            // -1 or +1, equal probability
    double gaussian();                     // standard normal (Box-Muller)
    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n);

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace plab::num
