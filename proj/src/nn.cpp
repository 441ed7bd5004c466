#include "plab/nn.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace plab::nn {

using json = nlohmann::json;
using ad::Tape;
using ad::Var;

const char* act_name(Act a) {
    switch (a) {
        case Act::Identity: return "identity";
        case Act::Tanh: return "tanh";
        case Act::Softplus: return "softplus";
    }
    return "?";
}

Act act_from_name(const std::string& name) {
    if (name == "identity") return Act::Identity;
    if (name == "tanh") return Act::Tanh;
    if (name == "softplus") return Act::Softplus;
    throw std::invalid_argument("unknown activation: " + name);
}

void NetworkSpec::validate() const {
    if (input_dim <= 0)
        throw std::invalid_argument("NetworkSpec: input_dim must be positive");
    if (layers.empty())
        throw std::invalid_argument("NetworkSpec: needs at least one layer");
    int in = input_dim;
    bool any_trainable = false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        if (l.width <= 0) {
            std::ostringstream os;
            os << "NetworkSpec: layer " << i << " has non-positive width";
            throw std::invalid_argument(os.str());
        }
        if (l.residual && l.width != in) {
            std::ostringstream os;
            os << "NetworkSpec: residual layer " << i << " needs width " << in
               << ", got " << l.width;
            throw std::invalid_argument(os.str());
        }
        any_trainable |= l.trainable;
        in = l.width;
    }
    if (!any_trainable)
        throw std::invalid_argument("NetworkSpec: needs at least one trainable layer");
}

int NetworkSpec::output_dim() const { return layers.back().width; }

std::size_t Network::layer_param_count(int layer) const {
    const LayerSpec& l = spec_.layers[layer];
    const int in = layer == 0 ? spec_.input_dim : spec_.layers[layer - 1].width;
    return static_cast<std::size_t>(l.width) * in + (l.bias ? l.width : 0);
}

void Network::init_layout() {
    offsets_.clear();
    std::size_t off = 0;
    trainable_count_ = 0;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
        offsets_.push_back(off);
        const std::size_t n = layer_param_count(static_cast<int>(i));
        off += n;
        if (spec_.layers[i].trainable) trainable_count_ += n;
    }
    params_.assign(off, 0.0);
}

Network Network::make(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    Network net;
    net.spec_ = spec;
    net.init_layout();

    num::RngStream rng(seed, /*stream=*/0x6e657477ULL);
    int in = spec.input_dim;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        double* w = net.params_.data() + net.offsets_[i];
        double* b = w + static_cast<std::size_t>(l.width) * in;
        if (l.trainable) {
            const double limit = std::sqrt(6.0 / (in + l.width));
            for (int k = 0; k < l.width * in; ++k) w[k] = rng.uniform(-limit, limit);
            // biases start at zero
        } else {
            const double s = l.init_scale;
            for (int k = 0; k < l.width * in; ++k) w[k] = rng.uniform(-s, s);
            if (l.bias)
                for (int k = 0; k < l.width; ++k) b[k] = rng.uniform(-s, s);
        }
        in = l.width;
    }
    return net;
}

void Network::gather_trainable(std::span<double> out) const {
    if (out.size() != trainable_count_)
        throw std::invalid_argument("gather_trainable: size mismatch");
    std::size_t k = 0;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
        if (!spec_.layers[i].trainable) continue;
        const std::size_t n = layer_param_count(static_cast<int>(i));
        for (std::size_t j = 0; j < n; ++j) out[k++] = params_[offsets_[i] + j];
    }
}

void Network::scatter_trainable(std::span<const double> in) {
    if (in.size() != trainable_count_)
        throw std::invalid_argument("scatter_trainable: size mismatch");
    std::size_t k = 0;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
        if (!spec_.layers[i].trainable) continue;
        const std::size_t n = layer_param_count(static_cast<int>(i));
        for (std::size_t j = 0; j < n; ++j) params_[offsets_[i] + j] = in[k++];
    }
}

// --- plain evaluation ---------------------------------------------------------

namespace {

inline double act_value(Act a, double z) {
    switch (a) {
        case Act::Identity: return z;
        case Act::Tanh: return std::tanh(z);
        case Act::Softplus: return ad::softplus_value(z);
    }
    return z;
}

}  // namespace

void Network::eval(std::span<const double> x, std::span<double> out) const {
    if (static_cast<int>(x.size()) != spec_.input_dim)
        throw std::invalid_argument("Network::eval: input dimension mismatch");
    if (static_cast<int>(out.size()) != output_dim())
        throw std::invalid_argument("Network::eval: output dimension mismatch");

    std::vector<double> h(x.begin(), x.end());
    std::vector<double> next;
    int in = spec_.input_dim;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
        const LayerSpec& l = spec_.layers[i];
        const double* w = params_.data() + offsets_[i];
        const double* b = w + static_cast<std::size_t>(l.width) * in;
        next.assign(l.width, 0.0);
        for (int r = 0; r < l.width; ++r) {
            double z = l.bias ? b[r] : 0.0;
            const double* wr = w + static_cast<std::size_t>(r) * in;
            for (int c = 0; c < in; ++c) z += wr[c] * h[c];
            const double a = act_value(l.act, z);
            next[r] = l.residual ? h[r] + a : a;
        }
        h.swap(next);
        in = l.width;
    }
    std::copy(h.begin(), h.end(), out.begin());
}

std::vector<double> Network::eval(std::span<const double> x) const {
    std::vector<double> out(output_dim());
    eval(x, out);
    return out;
}

// --- tape forward -------------------------------------------------------------

Network::TapeParams Network::push_params(Tape& tape) const {
    TapeParams tp;
    tp.leaves.reserve(trainable_count_);
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
        if (!spec_.layers[i].trainable) continue;
        const std::size_t n = layer_param_count(static_cast<int>(i));
        for (std::size_t j = 0; j < n; ++j)
            tp.leaves.push_back(tape.leaf(params_[offsets_[i] + j]));
    }
    return tp;
}

void Network::collect_grads(const TapeParams& tp, std::span<double> grads) const {
    if (grads.size() != tp.leaves.size())
        throw std::invalid_argument("collect_grads: size mismatch");
    for (std::size_t i = 0; i < tp.leaves.size(); ++i) grads[i] = tp.leaves[i].grad();
}

namespace {

inline Var act_var(Act a, Var z) {
    switch (a) {
        case Act::Identity: return z;
        case Act::Tanh: return ad::tanh(z);
        case Act::Softplus: return ad::softplus(z);
    }
    return z;
}

}  // namespace

std::vector<Var> Network::forward(Tape& tape, const TapeParams& tp,
                                  std::span<const ad::Var> x) const {
    if (static_cast<int>(x.size()) != spec_.input_dim)
        throw std::invalid_argument("Network::forward: input dimension mismatch");

    std::vector<Var> h(x.begin(), x.end());
    std::vector<Var> next;
    int in = spec_.input_dim;
    std::size_t leaf_off = 0;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
        const LayerSpec& l = spec_.layers[i];
        next.clear();
        next.reserve(l.width);
        if (l.trainable) {
            const Var* w = tp.leaves.data() + leaf_off;
            const Var* b = w + static_cast<std::size_t>(l.width) * in;
            for (int r = 0; r < l.width; ++r) {
                Var z = tape.dot({w + static_cast<std::size_t>(r) * in,
                                  static_cast<std::size_t>(in)},
                                 {h.data(), h.size()});
                if (l.bias) z = z + b[r];
                Var a = act_var(l.act, z);
                next.push_back(l.residual ? h[r] + a : a);
            }
            leaf_off += layer_param_count(static_cast<int>(i));
        } else {
            const double* w = params_.data() + offsets_[i];
            const double* b = w + static_cast<std::size_t>(l.width) * in;
            for (int r = 0; r < l.width; ++r) {
                Var z = tape.wsum({h.data(), h.size()},
                                  {w + static_cast<std::size_t>(r) * in,
                                   static_cast<std::size_t>(in)},
                                  l.bias ? b[r] : 0.0);
                Var a = act_var(l.act, z);
                next.push_back(l.residual ? h[r] + a : a);
            }
        }
        h.swap(next);
        in = l.width;
    }
    return h;
}

std::vector<Var> Network::forward_const(Tape& tape,
                                        std::span<const ad::Var> x) const {
    if (static_cast<int>(x.size()) != spec_.input_dim)
        throw std::invalid_argument("Network::forward_const: input dimension mismatch");

    std::vector<Var> h(x.begin(), x.end());
    std::vector<Var> next;
    int in = spec_.input_dim;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
        const LayerSpec& l = spec_.layers[i];
        const double* w = params_.data() + offsets_[i];
        const double* b = w + static_cast<std::size_t>(l.width) * in;
        next.clear();
        next.reserve(l.width);
        for (int r = 0; r < l.width; ++r) {
            Var z = tape.wsum({h.data(), h.size()},
                              {w + static_cast<std::size_t>(r) * in,
                               static_cast<std::size_t>(in)},
                              l.bias ? b[r] : 0.0);
            Var a = act_var(l.act, z);
            next.push_back(l.residual ? h[r] + a : a);
        }
        h.swap(next);
        in = l.width;
    }
    return h;
}

// --- Laplacian bundles ----------------------------------------------------------
//
// Component-wise jets: per layer we keep five Var vectors (v, dx, dy, dxx,
// dyy). Dense accumulation fuses into dot/wsum nodes per component; the
// nonlinearity applies the BiJet chain rule per neuron.

namespace {

struct JetVecs {
    std::vector<Var> v, dx, dy, dxx, dyy;
    void resize_clear(int n) {
        v.clear(); dx.clear(); dy.clear(); dxx.clear(); dyy.clear();
        v.reserve(n); dx.reserve(n); dy.reserve(n); dxx.reserve(n); dyy.reserve(n);
    }
};

}  // namespace

template <bool WithLeaves>
static Network::LapVar laplacian_walk(const Network& net, const NetworkSpec& spec,
                                      std::span<const double> params,
                                      std::span<const std::size_t> offsets,
                                      Tape& tape, const Network::TapeParams* tp,
                                      Var x, Var y) {
    if (spec.input_dim != 2 || spec.output_dim() != 1)
        throw std::invalid_argument(
            "forward_laplacian: needs a 2-input scalar-output network");

    Var one = tape.leaf(1.0);
    Var zero = tape.leaf(0.0);

    JetVecs h, next;
    h.resize_clear(2);
    h.v = {x, y};
    h.dx = {one, zero};
    h.dy = {zero, one};
    h.dxx = {zero, zero};
    h.dyy = {zero, zero};

    int in = 2;
    std::size_t leaf_off = 0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        if (l.act == Act::Softplus)
            throw std::invalid_argument(
                "forward_laplacian: softplus layers not supported");
        next.resize_clear(l.width);

        const bool leaves = WithLeaves && l.trainable;
        const Var* wl = nullptr;
        const Var* bl = nullptr;
        const double* wc = nullptr;
        const double* bc = nullptr;
        if (leaves) {
            wl = tp->leaves.data() + leaf_off;
            bl = wl + static_cast<std::size_t>(l.width) * in;
        } else {
            wc = params.data() + offsets[i];
            bc = wc + static_cast<std::size_t>(l.width) * in;
        }

        for (int r = 0; r < l.width; ++r) {
            ad::BiJet<Var> z{};
            if (leaves) {
                std::span<const Var> row{wl + static_cast<std::size_t>(r) * in,
                                         static_cast<std::size_t>(in)};
                z.v = tape.dot(row, {h.v.data(), h.v.size()});
                if (l.bias) z.v = z.v + bl[r];
                z.dx = tape.dot(row, {h.dx.data(), h.dx.size()});
                z.dy = tape.dot(row, {h.dy.data(), h.dy.size()});
                z.dxx = tape.dot(row, {h.dxx.data(), h.dxx.size()});
                z.dyy = tape.dot(row, {h.dyy.data(), h.dyy.size()});
            } else {
                std::span<const double> row{wc + static_cast<std::size_t>(r) * in,
                                            static_cast<std::size_t>(in)};
                z.v = tape.wsum({h.v.data(), h.v.size()}, row, l.bias ? bc[r] : 0.0);
                z.dx = tape.wsum({h.dx.data(), h.dx.size()}, row);
                z.dy = tape.wsum({h.dy.data(), h.dy.size()}, row);
                z.dxx = tape.wsum({h.dxx.data(), h.dxx.size()}, row);
                z.dyy = tape.wsum({h.dyy.data(), h.dyy.size()}, row);
            }

            ad::BiJet<Var> a = l.act == Act::Tanh ? ad::tanh(z) : z;
            if (l.residual) {
                a.v = h.v[r] + a.v;
                a.dx = h.dx[r] + a.dx;
                a.dy = h.dy[r] + a.dy;
                a.dxx = h.dxx[r] + a.dxx;
                a.dyy = h.dyy[r] + a.dyy;
            }
            next.v.push_back(a.v);
            next.dx.push_back(a.dx);
            next.dy.push_back(a.dy);
            next.dxx.push_back(a.dxx);
            next.dyy.push_back(a.dyy);
        }
        std::swap(h, next);
        if (WithLeaves && l.trainable)
            leaf_off += net.layer_param_count(static_cast<int>(i));
        in = l.width;
    }

    return Network::LapVar{h.v[0], h.dxx[0] + h.dyy[0]};
}

Network::LapVar Network::forward_laplacian(Tape& tape, const TapeParams& tp,
                                           Var x, Var y) const {
    return laplacian_walk<true>(*this, spec_, params_, offsets_, tape, &tp, x, y);
}

Network::LapVar Network::forward_laplacian_const(Tape& tape, Var x, Var y) const {
    return laplacian_walk<false>(*this, spec_, params_, offsets_, tape, nullptr, x, y);
}

// --- double bi-jet evaluation -----------------------------------------------

Network::LapEval Network::eval_laplacian(double x, double y) const {
    return hidden_laplacian(static_cast<int>(spec_.layers.size()) - 1, x, y);
}

Network::LapEval Network::hidden_laplacian(int layer, double x, double y) const {
    if (spec_.input_dim != 2)
        throw std::invalid_argument("hidden_laplacian: needs a 2-input network");
    if (layer < 0 || layer >= static_cast<int>(spec_.layers.size()))
        throw std::invalid_argument("hidden_laplacian: layer out of range");

    using J = ad::BiJet<double>;
    std::vector<J> h = {J{x, 1.0, 0.0, 0.0, 0.0}, J{y, 0.0, 1.0, 0.0, 0.0}};
    std::vector<J> next;
    int in = 2;
    for (int i = 0; i <= layer; ++i) {
        const LayerSpec& l = spec_.layers[i];
        if (l.act == Act::Softplus)
            throw std::invalid_argument("hidden_laplacian: softplus layers not supported");
        const double* w = params_.data() + offsets_[i];
        const double* b = w + static_cast<std::size_t>(l.width) * in;
        next.assign(l.width, J{});
        for (int r = 0; r < l.width; ++r) {
            const double* wr = w + static_cast<std::size_t>(r) * in;
            J z{l.bias ? b[r] : 0.0, 0.0, 0.0, 0.0, 0.0};
            for (int c = 0; c < in; ++c) {
                z.v += wr[c] * h[c].v;
                z.dx += wr[c] * h[c].dx;
                z.dy += wr[c] * h[c].dy;
                z.dxx += wr[c] * h[c].dxx;
                z.dyy += wr[c] * h[c].dyy;
            }
            J a = l.act == Act::Tanh ? ad::tanh(z) : z;
            if (l.residual) {
                a.v += h[r].v;
                a.dx += h[r].dx;
                a.dy += h[r].dy;
                a.dxx += h[r].dxx;
                a.dyy += h[r].dyy;
            }
            next[r] = a;
        }
        h.swap(next);
        in = l.width;
    }

    LapEval out;
    out.value.reserve(h.size());
    out.lap.reserve(h.size());
    for (const J& j : h) {
        out.value.push_back(j.v);
        out.lap.push_back(j.dxx + j.dyy);
    }
    return out;
}

// --- checkpointing ----------------------------------------------------------

void Network::save_json(const std::string& path) const {
    json doc;
    doc["format"] = "plab-network-v1";
    doc["input_dim"] = spec_.input_dim;
    json layers = json::array();
    int in = spec_.input_dim;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
        const LayerSpec& l = spec_.layers[i];
        const double* w = params_.data() + offsets_[i];
        const double* b = w + static_cast<std::size_t>(l.width) * in;
        json jl;
        jl["width"] = l.width;
        jl["act"] = act_name(l.act);
        jl["residual"] = l.residual;
        jl["trainable"] = l.trainable;
        jl["bias"] = l.bias;
        jl["init_scale"] = l.init_scale;
        jl["weights"] = std::vector<double>(w, w + static_cast<std::size_t>(l.width) * in);
        if (l.bias) jl["biases"] = std::vector<double>(b, b + l.width);
        layers.push_back(std::move(jl));
        in = l.width;
    }
    doc["layers"] = std::move(layers);

    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
    os << doc.dump();
}

Network Network::load_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read checkpoint: " + path);
    json doc = json::parse(is);
    if (doc.value("format", "") != "plab-network-v1")
        throw std::runtime_error("unsupported checkpoint format in " + path);

    NetworkSpec spec;
    spec.input_dim = doc.at("input_dim").get<int>();
    for (const json& jl : doc.at("layers")) {
        LayerSpec l;
        l.width = jl.at("width").get<int>();
        l.act = act_from_name(jl.at("act").get<std::string>());
        l.residual = jl.at("residual").get<bool>();
        l.trainable = jl.at("trainable").get<bool>();
        l.bias = jl.at("bias").get<bool>();
        l.init_scale = jl.at("init_scale").get<double>();
        spec.layers.push_back(l);
    }
    spec.validate();

    Network net;
    net.spec_ = spec;
    net.init_layout();
    int in = spec.input_dim;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        const json& jl = doc.at("layers")[i];
        const auto w = jl.at("weights").get<std::vector<double>>();
        if (static_cast<int>(w.size()) != l.width * in)
            throw std::runtime_error("checkpoint weight shape mismatch in " + path);
        std::copy(w.begin(), w.end(), net.params_.begin() + net.offsets_[i]);
        if (l.bias) {
            const auto b = jl.at("biases").get<std::vector<double>>();
            if (static_cast<int>(b.size()) != l.width)
                throw std::runtime_error("checkpoint bias shape mismatch in " + path);
            std::copy(b.begin(), b.end(),
                      net.params_.begin() + net.offsets_[i] + w.size());
        }
        in = l.width;
    }
    return net;
}

// --- residual block free function ------------------------------------------

std::vector<double> residual_block_forward(std::span<const double> w,
                                           std::span<const double> b, Act act,
                                           std::span<const double> h) {
    const std::size_t n = h.size();
    if (w.size() != n * n || b.size() != n)
        throw std::invalid_argument("residual_block_forward: shape mismatch");
    std::vector<double> out(n);
    for (std::size_t r = 0; r < n; ++r) {
        double z = b[r];
        for (std::size_t c = 0; c < n; ++c) z += w[r * n + c] * h[c];
        out[r] = h[r] + act_value(act, z);
    }
    return out;
}

// --- Adam -------------------------------------------------------------------

Adam::Adam(const AdamConfig& cfg, std::size_t n) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw std::invalid_argument("Adam::step: size mismatch");
    for (std::size_t i = 0; i < grads.size(); ++i)
        if (!std::isfinite(grads[i])) {
            std::ostringstream os;
            os << "Adam::step: non-finite gradient at index " << i;
            throw std::runtime_error(os.str());
        }

    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, step_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, step_);
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i] * grads[i];
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        params[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
}

}  // namespace plab::nn
