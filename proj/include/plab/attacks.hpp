#pragma once

// Gradient-aligned (FGSM) and random-sign perturbations, the 1-d symmetric
// average-error protocol, domain filtering, and a generic epsilon sweep
// driver. Attacks are single-step and untargeted throughout.

#include "plab/ad.hpp"
#include "plab/numerics.hpp"
#include "plab/report.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace plab::attack {

enum class Mode { Fgsm, RandomSign, None };

const char* mode_name(Mode m);
Mode mode_from_name(const std::string& name);

struct PerturbationSpec {
    Mode mode = Mode::None;
    double epsilon = 0.0;          // amplitude in input units, >= 0
    std::vector<std::uint8_t> mask;  // attackable coordinates; empty = all
    std::uint64_t seed = 0;

    void validate(std::size_t dim) const;
    bool attackable(std::size_t i) const { return mask.empty() || mask[i] != 0; }
};

// sign with sign(0) = 0; the component is left unperturbed.
inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// x_adv = x + eps * sign(grad_x loss) on masked coordinates. The loss keeps
// its reference value fixed at the unperturbed point; it is the caller's
// closure. Throws on non-finite gradient components, naming the coordinate.
std::vector<double> fgsm(const ad::TapeFn& loss_fn, std::span<const double> x,
                         const PerturbationSpec& spec);

// Applies a precomputed gradient instead of differentiating again; fgsm()
// delegates here. Useful when one gradient field serves many epsilons.
std::vector<double> fgsm_from_gradient(std::span<const double> x,
                                       std::span<const double> grad,
                                       const PerturbationSpec& spec);

// Each masked component independently moved by +eps or -eps.
std::vector<double> random_sign_noise(std::span<const double> x,
                                      const PerturbationSpec& spec);

// (error_fn(x+eps) + error_fn(x-eps)) / 2 -- the average error a symmetric
// +-eps noise introduces on a scalar input.
double symmetric_average_error_1d(const std::function<double(double)>& error_fn,
                                  double x, double eps);

struct Box {
    std::vector<double> lo, hi;
    bool contains(std::span<const double> p) const;
};

struct FilterResult {
    std::vector<std::vector<double>> retained;
    std::size_t removed = 0;
};

// Keeps points inside the closed box, reports how many fell outside.
FilterResult domain_filter(const std::vector<std::vector<double>>& points,
                           const Box& box);

// --- epsilon sweep -----------------------------------------------------------

struct SweepCell {
    double epsilon = 0.0;
    Mode mode = Mode::None;
    std::uint64_t seed = 0;
};

// Named metric values produced by evaluating one sweep cell.
using CellEval = std::function<std::vector<std::pair<std::string, double>>(
    const SweepCell&)>;

// Runs eval over the (epsilon x mode x seed) grid and collects report rows.
// mode None is emitted once per epsilon-independent baseline (epsilon 0,
// first seed). A cell that throws is recorded as metric "error" with value
// NaN instead of aborting the sweep.
std::vector<report::Row> epsilon_sweep(const std::string& experiment,
                                       const std::string& model,
                                       std::span<const double> epsilons,
                                       std::span<const Mode> modes,
                                       std::span<const std::uint64_t> seeds,
                                       const CellEval& eval);

}  // namespace plab::attack
