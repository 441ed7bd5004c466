#pragma once

// Dense feed-forward networks with optional residual wiring, frozen layers
// (random-feature style), Xavier/uniform initialization, and Adam.
//
// A Network stores parameters as plain doubles. Evaluation comes in four
// flavours sharing one layer walk:
//   eval              : double forward, no tape (metrics, fast inference)
//   forward           : tape forward with trainable parameters as leaves
//   forward_const     : tape forward, all parameters constant (input grads)
//   forward_laplacian : tape forward of value + Laplacian wrt a 2-d input
//                       (second-order jets; tanh/identity layers only)
// plus a no-tape jet evaluation used to assemble PDE collocation systems.

#include "plab/ad.hpp"
#include "plab/numerics.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace plab::nn {

enum class Act { Identity, Tanh, Softplus };

const char* act_name(Act a);
Act act_from_name(const std::string& name);

struct LayerSpec {
    int width = 0;
    Act act = Act::Tanh;
    bool residual = false;   // out = in + act(W*in + b); needs equal widths
    bool trainable = true;
    bool bias = true;
    double init_scale = 1.0;  // frozen layers draw W, b ~ U(-scale, scale)
};

struct NetworkSpec {
    int input_dim = 0;
    std::vector<LayerSpec> layers;

    void validate() const;  // throws std::invalid_argument on any violation
    int output_dim() const;
};

class Network {
public:
    static Network make(const NetworkSpec& spec, std::uint64_t seed);

    const NetworkSpec& spec() const { return spec_; }
    int input_dim() const { return spec_.input_dim; }
    int output_dim() const { return spec_.output_dim(); }

    // Flat parameter block: per layer, W row-major (out x in) then bias.
    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }
    std::size_t param_count() const { return params_.size(); }
    std::size_t layer_offset(int layer) const { return offsets_[layer]; }
    std::size_t layer_param_count(int layer) const;

    std::size_t trainable_count() const { return trainable_count_; }
    void gather_trainable(std::span<double> out) const;
    void scatter_trainable(std::span<const double> in);

    // --- plain evaluation ---------------------------------------------------
    void eval(std::span<const double> x, std::span<double> out) const;
    std::vector<double> eval(std::span<const double> x) const;

    // --- tape forward ---------------------------------------------------------
    struct TapeParams {
        std::vector<ad::Var> leaves;  // trainable coordinates, gather order
    };
    TapeParams push_params(ad::Tape& tape) const;
    // Reads d(root)/d(theta) into grads (gather order) after tape.backward.
    void collect_grads(const TapeParams& tp, std::span<double> grads) const;

    std::vector<ad::Var> forward(ad::Tape& tape, const TapeParams& tp,
                                 std::span<const ad::Var> x) const;
    std::vector<ad::Var> forward_const(ad::Tape& tape,
                                       std::span<const ad::Var> x) const;

    // --- Laplacian bundles (2-d input, scalar output) -------------------------
    struct LapVar {
        ad::Var u, lap;
    };
    LapVar forward_laplacian(ad::Tape& tape, const TapeParams& tp, ad::Var x,
                             ad::Var y) const;
    LapVar forward_laplacian_const(ad::Tape& tape, ad::Var x, ad::Var y) const;

    struct LapEval {
        std::vector<double> value, lap;
    };
    LapEval eval_laplacian(double x, double y) const;
    // Value + Laplacian of the outputs of hidden layer `layer` (0-based).
    LapEval hidden_laplacian(int layer, double x, double y) const;

    // --- checkpointing ----------------------------------------------------------
    // JSON: {"format":"plab-network-v1","input_dim":..,"layers":[{width, act,
    // residual, trainable, bias, init_scale, weights(row-major), biases}]}
    void save_json(const std::string& path) const;
    static Network load_json(const std::string& path);

private:
    Network() = default;
    void init_layout();

    NetworkSpec spec_;
    std::vector<double> params_;
    std::vector<std::size_t> offsets_;
    std::size_t trainable_count_ = 0;
};

// Residual block as a free operation: out = h + act(W*h + b) with the block's
// own square weight matrix; exposed for direct tests, the Network layer walk
// uses the same arithmetic.
std::vector<double> residual_block_forward(std::span<const double> w,
                                           std::span<const double> b, Act act,
                                           std::span<const double> h);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    Adam(const AdamConfig& cfg, std::size_t n);

    // Standard update with bias correction. Throws on a non-finite gradient
    // component before touching any state.
    void step(std::span<double> params, std::span<const double> grads);

    long step_count() const { return step_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    long step_ = 0;
    std::vector<double> m_, v_;
};

}  // namespace plab::nn
