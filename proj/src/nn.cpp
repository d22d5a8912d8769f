#include "hawkesmm/nn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hawkesmm {

const char* activation_name(Activation a) noexcept { return a == Activation::Relu ? "relu" : "tanh"; }

Activation parse_activation(const std::string& name) {
    if (name == "relu") return Activation::Relu;
    if (name == "tanh") return Activation::Tanh;
    throw std::invalid_argument("unknown activation '" + name + "' (expected relu or tanh)");
}

DenseNet::DenseNet(std::vector<std::size_t> layer_sizes, Activation hidden)
    : sizes_(std::move(layer_sizes)), hidden_(hidden) {
    layout();
}

DenseNet::DenseNet(std::vector<std::size_t> layer_sizes, Activation hidden, Rng& rng)
    : DenseNet(std::move(layer_sizes), hidden) {
    for (std::size_t l = 0; l < num_layers(); ++l) {
        const double fan_in = static_cast<double>(sizes_[l]);
        const double fan_out = static_cast<double>(sizes_[l + 1]);
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        const std::size_t n = sizes_[l] * sizes_[l + 1];
        for (std::size_t k = 0; k < n; ++k) {
            params_[offsets_[l] + k] = limit * (2.0 * uniform01(rng) - 1.0);
        }
    }
}

void DenseNet::layout() {
    if (sizes_.size() < 2) {
        throw std::invalid_argument("DenseNet: need at least an input and an output layer");
    }
    for (std::size_t s : sizes_) {
        if (s == 0) throw std::invalid_argument("DenseNet: layer widths must be positive");
    }
    offsets_.clear();
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        offsets_.push_back(total);
        total += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
    }
    params_.assign(total, 0.0);
}

std::vector<double> DenseNet::forward(std::span<const double> x) const {
    Tape tape;
    return forward(x, tape);
}

std::vector<double> DenseNet::forward(std::span<const double> x, Tape& tape) const {
    if (x.size() != input_size()) {
        throw std::invalid_argument("DenseNet::forward: expected " + std::to_string(input_size()) + " inputs, got " +
                                    std::to_string(x.size()));
    }
    const std::size_t L = num_layers();
    tape.input.resize(L);
    tape.pre.resize(L);
    tape.input[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t in = sizes_[l];
        const std::size_t out = sizes_[l + 1];
        const double* w = params_.data() + offsets_[l];
        const double* b = w + in * out;
        const std::vector<double>& a = tape.input[l];
        std::vector<double>& z = tape.pre[l];
        z.resize(out);
        for (std::size_t o = 0; o < out; ++o) {
            double acc = b[o];
            const double* row = w + o * in;
            for (std::size_t i = 0; i < in; ++i) acc += row[i] * a[i];
            z[o] = acc;
        }
        if (l + 1 < L) {
            std::vector<double>& next = tape.input[l + 1];
            next.resize(out);
            for (std::size_t o = 0; o < out; ++o) {
                next[o] = hidden_ == Activation::Relu ? (z[o] > 0.0 ? z[o] : 0.0) : std::tanh(z[o]);
            }
        }
    }
    return tape.pre.back();
}

void DenseNet::backward(const Tape& tape, std::span<const double> upstream, std::span<double> grad) const {
    if (upstream.size() != output_size() || grad.size() != num_params() || tape.pre.size() != num_layers()) {
        throw std::invalid_argument("DenseNet::backward: size mismatch");
    }
    std::vector<double> delta(upstream.begin(), upstream.end());
    std::vector<double> prev;
    for (std::size_t l = num_layers(); l-- > 0;) {
        const std::size_t in = sizes_[l];
        const std::size_t out = sizes_[l + 1];
        const double* w = params_.data() + offsets_[l];
        double* gw = grad.data() + offsets_[l];
        double* gb = gw + in * out;
        const std::vector<double>& a = tape.input[l];
        for (std::size_t o = 0; o < out; ++o) {
            const double d = delta[o];
            gb[o] += d;
            if (d == 0.0) continue;
            double* grow = gw + o * in;
            for (std::size_t i = 0; i < in; ++i) grow[i] += d * a[i];
        }
        if (l == 0) break;
        prev.assign(in, 0.0);
        for (std::size_t o = 0; o < out; ++o) {
            const double d = delta[o];
            if (d == 0.0) continue;
            const double* row = w + o * in;
            for (std::size_t i = 0; i < in; ++i) prev[i] += d * row[i];
        }
        const std::vector<double>& z = tape.pre[l - 1];
        for (std::size_t i = 0; i < in; ++i) {
            if (hidden_ == Activation::Relu) {
                prev[i] = z[i] > 0.0 ? prev[i] : 0.0;
            } else {
                const double t = a[i];
                prev[i] *= 1.0 - t * t;
            }
        }
        delta.swap(prev);
    }
}

nlohmann::json DenseNet::to_json() const {
    return {{"layer_sizes", sizes_}, {"activation", activation_name(hidden_)}, {"params", params_}};
}

DenseNet DenseNet::from_json(const nlohmann::json& j) {
    DenseNet net(j.at("layer_sizes").get<std::vector<std::size_t>>(),
                 parse_activation(j.at("activation").get<std::string>()));
    auto p = j.at("params").get<std::vector<double>>();
    if (p.size() != net.num_params()) {
        throw std::invalid_argument("DenseNet::from_json: parameter count does not match layer sizes");
    }
    net.params_ = std::move(p);
    return net;
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
    if (grad.size() != params.size()) {
        throw std::invalid_argument("Adam::step: gradient size mismatch");
    }
    for (double g : grad) {
        if (!std::isfinite(g)) {
            throw std::domain_error("Adam::step: non-finite gradient");
        }
    }
    if (m.size() != params.size()) {
        m.assign(params.size(), 0.0);
        v.assign(params.size(), 0.0);
        step_count = 0;
    }
    ++step_count;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (std::size_t k = 0; k < params.size(); ++k) {
        m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
        v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
        params[k] -= learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + epsilon);
    }
}

nlohmann::json Adam::to_json() const {
    return {{"learning_rate", learning_rate}, {"beta1", beta1}, {"beta2", beta2}, {"epsilon", epsilon},
            {"step", step_count},            {"m", m},          {"v", v}};
}

Adam Adam::from_json(const nlohmann::json& j) {
    Adam a;
    a.learning_rate = j.at("learning_rate").get<double>();
    a.beta1 = j.value("beta1", 0.9);
    a.beta2 = j.value("beta2", 0.999);
    a.epsilon = j.value("epsilon", 1e-8);
    a.step_count = j.value("step", std::uint64_t{0});
    a.m = j.value("m", std::vector<double>{});
    a.v = j.value("v", std::vector<double>{});
    if (a.m.size() != a.v.size()) {
        throw std::invalid_argument("Adam::from_json: moment sizes differ");
    }
    return a;
}

} // namespace hawkesmm
