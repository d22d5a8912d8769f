#pragma once

#include "hawkesmm/random.hpp"

#include <json.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace hawkesmm {

enum class Activation { Relu, Tanh };

[[nodiscard]] const char* activation_name(Activation a) noexcept;
[[nodiscard]] Activation parse_activation(const std::string& name);

/// Fully connected feed-forward network with a linear output layer.
///
/// All weights and biases live in one flat vector; layer l stores its
/// (out x in) row-major weight block followed by its bias block.
class DenseNet {
public:
    /// Intermediate values kept by forward() for backward().
    struct Tape {
        /// layer inputs: input[0] = x, input[l] = activation of layer l-1.
        std::vector<std::vector<double>> input;
        /// pre-activations of every layer (the last one is the output).
        std::vector<std::vector<double>> pre;
    };

    DenseNet() = default;
    /// Zero-initialised network.
    DenseNet(std::vector<std::size_t> layer_sizes, Activation hidden);
    /// Xavier-uniform weights, zero biases.
    DenseNet(std::vector<std::size_t> layer_sizes, Activation hidden, Rng& rng);

    [[nodiscard]] std::size_t input_size() const noexcept { return sizes_.front(); }
    [[nodiscard]] std::size_t output_size() const noexcept { return sizes_.back(); }
    [[nodiscard]] std::size_t num_layers() const noexcept { return sizes_.size() - 1; }
    [[nodiscard]] std::size_t num_params() const noexcept { return params_.size(); }
    [[nodiscard]] const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
    [[nodiscard]] Activation activation() const noexcept { return hidden_; }

    [[nodiscard]] std::span<double> params() noexcept { return params_; }
    [[nodiscard]] std::span<const double> params() const noexcept { return params_; }
    [[nodiscard]] std::size_t weight_offset(std::size_t layer) const { return offsets_.at(layer); }
    [[nodiscard]] std::size_t bias_offset(std::size_t layer) const {
        return offsets_.at(layer) + sizes_.at(layer) * sizes_.at(layer + 1);
    }

    /// Throws std::invalid_argument on a size mismatch.
    [[nodiscard]] std::vector<double> forward(std::span<const double> x) const;
    [[nodiscard]] std::vector<double> forward(std::span<const double> x, Tape& tape) const;

    /// Accumulates d(upstream . output)/d(params) into `grad` (size num_params()).
    void backward(const Tape& tape, std::span<const double> upstream, std::span<double> grad) const;

    [[nodiscard]] nlohmann::json to_json() const;
    [[nodiscard]] static DenseNet from_json(const nlohmann::json& j);

    friend bool operator==(const DenseNet&, const DenseNet&) = default;

private:
    void layout();

    std::vector<std::size_t> sizes_;
    Activation hidden_{Activation::Relu};
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
};

/// Adam with bias correction.
struct Adam {
    double learning_rate{3e-4};
    double beta1{0.9};
    double beta2{0.999};
    double epsilon{1e-8};
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step_count{0};

    /// Applies one update to `params`; throws std::domain_error on non-finite gradients.
    void step(std::span<double> params, std::span<const double> grad);

    [[nodiscard]] nlohmann::json to_json() const;
    [[nodiscard]] static Adam from_json(const nlohmann::json& j);
};

} // namespace hawkesmm
