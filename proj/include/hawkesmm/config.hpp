#pragma once

#include "hawkesmm/baselines.hpp"
#include "hawkesmm/env.hpp"
#include "hawkesmm/hawkes.hpp"
#include "hawkesmm/trainer.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hawkesmm {

/// Default 12-type exponential kernel: symmetric across sides, branching
/// matrix scaled to spectral radius `radius`, uniform decay `decay`.
[[nodiscard]] KernelParams default_exponential_kernel(double radius = 0.8, double decay = 4.0);
/// Same baselines, no excitation.
[[nodiscard]] KernelParams default_poisson_kernel();
/// Power-law kernel with the same branching matrix as the exponential default.
[[nodiscard]] KernelParams default_power_law_kernel(double radius = 0.8, double beta = 2.0, double delta = 0.25);

/// Per-side baseline intensities shared by the defaults, in event-type order.
[[nodiscard]] std::vector<double> default_baselines();

[[nodiscard]] nlohmann::json kernel_to_json(const KernelParams& k);
/// Reads `kind` ("exponential" | "power_law") and the matching arrays;
/// matrices are arrays of rows. Validates the result.
[[nodiscard]] KernelParams kernel_from_json(const nlohmann::json& j);

[[nodiscard]] nlohmann::json episode_to_json(const EpisodeConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
[[nodiscard]] EpisodeConfig episode_from_json(const nlohmann::json& j, EpisodeConfig base = {});

[[nodiscard]] nlohmann::json trainer_to_json(const TrainerConfig& c);
[[nodiscard]] TrainerConfig trainer_from_json(const nlohmann::json& j, TrainerConfig base = {});

[[nodiscard]] nlohmann::json prob_agent_to_json(const ProbAgentConfig& c);
[[nodiscard]] ProbAgentConfig prob_agent_from_json(const nlohmann::json& j, ProbAgentConfig base = {});

struct EvalConfig {
    std::size_t episodes{100};
    /// Number of leading episodes whose step traces are exported.
    std::size_t trace_episodes{1};
    /// Act with the mode of each policy head instead of sampling.
    bool greedy{false};
    /// The probabilistic agent evaluates with the full action set so that its
    /// corrective market orders are available.
    bool prob_agent_full_action_set{true};
};

struct SweepGrid {
    std::vector<double> eta;
    std::vector<double> fee_bps;
    /// Names of kernels: "exponential", "power_law", "poisson" or a key of `kernels`.
    std::vector<std::string> kernel;
    std::vector<bool> sil;
    std::vector<std::string> ablation;
    /// Extra named kernels available to the kernel axis.
    std::vector<std::pair<std::string, KernelParams>> kernels;

    [[nodiscard]] bool empty() const noexcept {
        return eta.empty() && fee_bps.empty() && kernel.empty() && sil.empty() && ablation.empty();
    }
};

/// Everything a run needs, loadable from one JSON document.
struct RunConfig {
    KernelParams kernel{default_exponential_kernel()};
    std::string kernel_name{"exponential"};
    EpisodeConfig episode{};
    TrainerConfig trainer{};
    ProbAgentConfig prob_agent{};
    EvalConfig eval{};
    SweepGrid sweep{};

    [[nodiscard]] nlohmann::json to_json() const;
    [[nodiscard]] static RunConfig from_json(const nlohmann::json& j);
    [[nodiscard]] static RunConfig load(const std::filesystem::path& path);
};

/// Shipped presets: "default" (exponential Hawkes), "poisson" (no
/// excitation, smaller inventory penalty, tuned trainer) and "power_law".
[[nodiscard]] RunConfig preset_config(const std::string& name);

/// Kernel for a sweep/CLI name: the built-in defaults or an entry of `grid.kernels`.
[[nodiscard]] KernelParams kernel_by_name(const std::string& name, const SweepGrid& grid);

/// 64-bit FNV-1a of the canonical JSON dump.
[[nodiscard]] std::uint64_t config_hash(const nlohmann::json& j);
[[nodiscard]] std::string hex64(std::uint64_t v);

} // namespace hawkesmm
