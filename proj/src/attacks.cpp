#include "plab/attacks.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace plab::attack {

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::Fgsm: return "fgsm";
        case Mode::RandomSign: return "random-sign";
        case Mode::None: return "none";
    }
    return "?";
}

Mode mode_from_name(const std::string& name) {
    if (name == "fgsm") return Mode::Fgsm;
    if (name == "random-sign") return Mode::RandomSign;
    if (name == "none") return Mode::None;
    throw std::invalid_argument("unknown attack mode: " + name);
}

void PerturbationSpec::validate(std::size_t dim) const {
    if (epsilon < 0.0)
        throw std::invalid_argument("PerturbationSpec: epsilon must be >= 0");
    if (!mask.empty() && mask.size() != dim)
        throw std::invalid_argument("PerturbationSpec: mask length mismatch");
}

std::vector<double> fgsm_from_gradient(std::span<const double> x,
                                       std::span<const double> grad,
                                       const PerturbationSpec& spec) {
    spec.validate(x.size());
    if (grad.size() != x.size())
        throw std::invalid_argument("fgsm: gradient length mismatch");
    std::vector<double> adv(x.begin(), x.end());
    if (spec.mode == Mode::None || spec.epsilon == 0.0) return adv;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(grad[i])) {
            std::ostringstream os;
            os << "fgsm: non-finite gradient at coordinate " << i;
            throw std::runtime_error(os.str());
        }
        if (spec.attackable(i)) adv[i] += spec.epsilon * sign(grad[i]);
    }
    return adv;
}

std::vector<double> fgsm(const ad::TapeFn& loss_fn, std::span<const double> x,
                         const PerturbationSpec& spec) {
    if (spec.mode != Mode::Fgsm)
        throw std::invalid_argument("fgsm: spec.mode must be fgsm");
    spec.validate(x.size());
    if (spec.epsilon == 0.0) return std::vector<double>(x.begin(), x.end());
    const std::vector<double> g = ad::grad_wrt_input(loss_fn, x);
    return fgsm_from_gradient(x, g, spec);
}

std::vector<double> random_sign_noise(std::span<const double> x,
                                      const PerturbationSpec& spec) {
    if (spec.mode != Mode::RandomSign)
        throw std::invalid_argument("random_sign_noise: spec.mode must be random-sign");
    spec.validate(x.size());
    std::vector<double> adv(x.begin(), x.end());
    num::RngStream rng(spec.seed, /*stream=*/0x72616e64ULL);
    for (std::size_t i = 0; i < x.size(); ++i) {
        // Draw for every coordinate so the stream is mask-independent.
        const int s = rng.sign();
        if (spec.attackable(i)) adv[i] += spec.epsilon * s;
    }
    return adv;
}

double symmetric_average_error_1d(const std::function<double(double)>& error_fn,
                                  double x, double eps) {
    return 0.5 * (error_fn(x + eps) + error_fn(x - eps));
}

bool Box::contains(std::span<const double> p) const {
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] < lo[i] || p[i] > hi[i]) return false;
    return true;
}

FilterResult domain_filter(const std::vector<std::vector<double>>& points,
                           const Box& box) {
    FilterResult out;
    out.retained.reserve(points.size());
    for (const auto& p : points) {
        if (box.contains(p))
            out.retained.push_back(p);
        else
            ++out.removed;
    }
    return out;
}

std::vector<report::Row> epsilon_sweep(const std::string& experiment,
                                       const std::string& model,
                                       std::span<const double> epsilons,
                                       std::span<const Mode> modes,
                                       std::span<const std::uint64_t> seeds,
                                       const CellEval& eval) {
    if (seeds.empty())
        throw std::invalid_argument("epsilon_sweep: needs at least one seed");

    std::vector<SweepCell> cells;
    bool baseline_done = false;
    for (const Mode mode : modes) {
        if (mode == Mode::None) {
            if (!baseline_done) {
                cells.push_back(SweepCell{0.0, Mode::None, seeds[0]});
                baseline_done = true;
            }
            continue;
        }
        for (const double eps : epsilons)
            for (const std::uint64_t seed : seeds)
                cells.push_back(SweepCell{eps, mode, seed});
    }

    std::vector<report::Row> rows;
    for (const SweepCell& cell : cells) {
        try {
            for (auto& [name, value] : eval(cell))
                rows.push_back(report::Row{experiment, model, cell.epsilon,
                                           mode_name(cell.mode), cell.seed, name,
                                           value});
        } catch (const std::exception& e) {
            std::cerr << "sweep cell failed (" << experiment << "/" << model
                      << " eps=" << cell.epsilon << " mode=" << mode_name(cell.mode)
                      << " seed=" << cell.seed << "): " << e.what() << "\n";
            rows.push_back(report::Row{experiment, model, cell.epsilon,
                                       mode_name(cell.mode), cell.seed, "error",
                                       std::numeric_limits<double>::quiet_NaN()});
        }
    }
    return rows;
}

}  // namespace plab::attack
