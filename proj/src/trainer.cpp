#include "hawkesmm/trainer.hpp"

#include "hawkesmm/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace hawkesmm {

void TrainerConfig::validate() const {
    auto fail = [](const char* what) { throw std::invalid_argument(std::string("TrainerConfig: ") + what); };
    if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) fail("clip_epsilon must be in (0, 1)");
    if (!(discount > 0.0 && discount <= 1.0)) fail("discount must be in (0, 1]");
    if (!(gae_lambda > 0.0 && gae_lambda <= 1.0)) fail("gae_lambda must be in (0, 1]");
    if (!(sil_coef >= 0.0) || !(entropy_coef >= 0.0) || !(value_coef >= 0.0)) fail("loss coefficients must be >= 0");
    if (minibatch_size == 0) fail("minibatch_size must be > 0");
    if (episodes_per_update == 0) fail("episodes_per_update must be > 0");
    if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
    if (!(reward_scale > 0.0)) fail("reward_scale must be > 0");
    if (!(max_grad_norm >= 0.0)) fail("max_grad_norm must be >= 0");
    if (threads == 0) fail("threads must be > 0");
    for (std::size_t h : hidden) {
        if (h == 0) fail("hidden widths must be > 0");
    }
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, double discount, double lambda) {
    if (rewards.empty()) {
        throw std::invalid_argument("compute_gae: empty trajectory");
    }
    if (rewards.size() != values.size()) {
        throw std::invalid_argument("compute_gae: rewards and values differ in length");
    }
    const std::size_t n = rewards.size();
    GaeResult out;
    out.advantages.assign(n, 0.0);
    out.returns.assign(n, 0.0);
    double running = 0.0;
    for (std::size_t t = n; t-- > 0;) {
        const double next_value = t + 1 < n ? values[t + 1] : 0.0;
        const double delta = rewards[t] + discount * next_value - values[t];
        running = delta + discount * lambda * running;
        out.advantages[t] = running;
        out.returns[t] = running + values[t];
    }
    return out;
}

std::vector<double> discounted_returns(std::span<const double> rewards, double discount) {
    std::vector<double> out(rewards.size());
    double running = 0.0;
    for (std::size_t t = rewards.size(); t-- > 0;) {
        running = rewards[t] + discount * running;
        out[t] = running;
    }
    return out;
}

double clipped_surrogate(double ratio, double advantage, double epsilon) noexcept {
    const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    return std::min(ratio * advantage, clipped * advantage);
}

PolicyGradients PolicyGradients::zeros(const PolicyNetworks& nets) {
    return {std::vector<double>(nets.decision.num_params(), 0.0), std::vector<double>(nets.action.num_params(), 0.0),
            std::vector<double>(nets.value.num_params(), 0.0)};
}

void PolicyGradients::add(const PolicyGradients& other, double scale) {
    auto axpy = [scale](std::vector<double>& y, const std::vector<double>& x) {
        if (y.size() != x.size()) throw std::invalid_argument("PolicyGradients::add: size mismatch");
        for (std::size_t k = 0; k < y.size(); ++k) y[k] += scale * x[k];
    };
    axpy(decision, other.decision);
    axpy(action, other.action);
    axpy(value, other.value);
}

namespace {

/// Forward pass of all three heads with tapes kept for backward.
struct Evaluated {
    DenseNet::Tape decision_tape;
    DenseNet::Tape action_tape;
    DenseNet::Tape value_tape;
    double z{0.0};
    std::vector<double> logits;
    double v{0.0};
};

void run_forward(const PolicyNetworks& nets, std::span<const double> x, Evaluated& e, bool need_value) {
    e.z = nets.decision.forward(x, e.decision_tape)[0];
    e.logits = nets.action.forward(x, e.action_tape);
    if (need_value) e.v = nets.value.forward(x, e.value_tape)[0];
}

/// log pi of a recorded (d, a) and its derivatives w.r.t. the decision logit and action logits.
double log_prob_and_grad(const Evaluated& e, const std::vector<bool>& mask, bool intervene, std::size_t action,
                         const std::vector<double>& probs, double& dz, std::vector<double>& dl) {
    const double s = sigmoid(e.z);
    std::fill(dl.begin(), dl.end(), 0.0);
    if (!intervene) {
        dz = -s;
        return log_sigmoid(-e.z);
    }
    if (action >= mask.size() || !mask[action]) {
        throw std::invalid_argument("recorded action is not admissible under its mask");
    }
    dz = 1.0 - s;
    for (std::size_t b = 0; b < mask.size(); ++b) {
        if (mask[b]) dl[b] = (b == action ? 1.0 : 0.0) - probs[b];
    }
    return log_sigmoid(e.z) + std::log(probs[action]);
}

} // namespace

LossResult ppo_loss(const PolicyNetworks& nets, std::span<const StepSample> batch, const TrainerConfig& config) {
    if (batch.empty()) {
        throw std::invalid_argument("ppo_loss: empty batch");
    }
    LossResult out;
    out.grad = PolicyGradients::zeros(nets);
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    const double eps = config.clip_epsilon;
    Evaluated e;
    std::vector<double> dl(nets.num_actions());
    std::vector<double> up_l(nets.num_actions());
    for (const StepSample& smp : batch) {
        run_forward(nets, smp.features, e, true);
        const auto probs = masked_softmax(e.logits, smp.mask);
        double dz_logp = 0.0;
        const double logp = log_prob_and_grad(e, smp.mask, smp.intervene, smp.action, probs, dz_logp, dl);
        const double ratio = std::exp(logp - smp.log_prob);
        if (!std::isfinite(ratio)) {
            throw std::domain_error("ppo_loss: non-finite probability ratio (old log-prob mismatch)");
        }
        const double a = smp.advantage;
        const double surr = clipped_surrogate(ratio, a, eps);
        const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
        // d surr / d log pi: the unclipped branch carries ratio * A, the clipped one is flat.
        const double dsurr = ratio * a <= clipped * a ? ratio * a : 0.0;

        // Entropy H = H_d + sigma * H_a and its derivatives.
        const double sg = sigmoid(e.z);
        double h_a = 0.0;
        for (double p : probs) {
            if (p > 0.0) h_a -= p * std::log(p);
        }
        const double h_d = -(sg * log_sigmoid(e.z) + (1.0 - sg) * log_sigmoid(-e.z));
        const double entropy = h_d + sg * h_a;
        const double dh_dz = sg * (1.0 - sg) * (h_a - e.z);

        const double diff = smp.ret - e.v;
        out.surrogate += surr * inv_n;
        out.value_loss += diff * diff * inv_n;
        out.entropy += entropy * inv_n;

        const double up_z = inv_n * (-dsurr * dz_logp - config.entropy_coef * dh_dz);
        bool any_l = false;
        for (std::size_t b = 0; b < up_l.size(); ++b) {
            double dh_dl = 0.0;
            if (probs[b] > 0.0) dh_dl = -sg * probs[b] * (std::log(probs[b]) + h_a);
            up_l[b] = inv_n * (-dsurr * dl[b] - config.entropy_coef * dh_dl);
            any_l = any_l || up_l[b] != 0.0;
        }
        const double up_v = inv_n * (-2.0 * config.value_coef * diff);
        nets.decision.backward(e.decision_tape, std::span<const double>(&up_z, 1), out.grad.decision);
        if (any_l) nets.action.backward(e.action_tape, up_l, out.grad.action);
        nets.value.backward(e.value_tape, std::span<const double>(&up_v, 1), out.grad.value);
    }
    out.total = -out.surrogate + config.value_coef * out.value_loss - config.entropy_coef * out.entropy;
    return out;
}

LossResult sil_loss(const PolicyNetworks& nets, std::span<const SilEntry> batch, const TrainerConfig& config) {
    LossResult out;
    out.grad = PolicyGradients::zeros(nets);
    if (batch.empty()) {
        return out;
    }
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    Evaluated e;
    std::vector<double> dl(nets.num_actions());
    for (const SilEntry& entry : batch) {
        const double v = nets.value.forward(entry.features)[0];
        const double w = config.sil_weighting == SilWeighting::Indicator ? (entry.ret > v ? 1.0 : 0.0)
                                                                          : std::max(entry.ret - v, 0.0);
        if (w == 0.0) continue;
        run_forward(nets, entry.features, e, false);
        const auto probs = masked_softmax(e.logits, entry.mask);
        double dz = 0.0;
        const double logp = log_prob_and_grad(e, entry.mask, entry.intervene, entry.action, probs, dz, dl);
        out.sil -= w * logp * inv_n;
        const double up_z = -w * dz * inv_n;
        for (double& d : dl) d *= -w * inv_n;
        nets.decision.backward(e.decision_tape, std::span<const double>(&up_z, 1), out.grad.decision);
        nets.action.backward(e.action_tape, dl, out.grad.action);
    }
    out.total = out.sil;
    return out;
}

LossResult combined_loss(const PolicyNetworks& nets, std::span<const StepSample> batch,
                         std::span<const SilEntry> sil_batch, const TrainerConfig& config) {
    LossResult out = ppo_loss(nets, batch, config);
    if (config.sil_coef > 0.0 && !sil_batch.empty()) {
        const LossResult s = sil_loss(nets, sil_batch, config);
        out.sil = s.sil;
        out.total += config.sil_coef * s.sil;
        out.grad.add(s.grad, config.sil_coef);
    }
    return out;
}

void SilBuffer::insert(SilEntry entry) {
    if (capacity_ == 0) return;
    auto cmp = [](const SilEntry& a, const SilEntry& b) { return a.priority > b.priority; };
    if (entries_.size() < capacity_) {
        entries_.push_back(std::move(entry));
        std::push_heap(entries_.begin(), entries_.end(), cmp);
        return;
    }
    if (entry.priority <= entries_.front().priority) {
        return;
    }
    std::pop_heap(entries_.begin(), entries_.end(), cmp);
    entries_.back() = std::move(entry);
    std::push_heap(entries_.begin(), entries_.end(), cmp);
}

double SilBuffer::min_priority() const {
    if (entries_.empty()) {
        throw std::logic_error("SilBuffer::min_priority on an empty buffer");
    }
    return entries_.front().priority;
}

std::vector<SilEntry> SilBuffer::sample(std::size_t n, Rng& rng) const {
    std::vector<SilEntry> out;
    if (entries_.empty()) return out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto i = std::min(entries_.size() - 1,
                                static_cast<std::size_t>(uniform01(rng) * static_cast<double>(entries_.size())));
        out.push_back(entries_[i]);
    }
    return out;
}

TrainerState TrainerState::create(std::size_t num_features, std::size_t num_actions, const TrainerConfig& config,
                                  const FeatureScaling& scaling, Rng& rng) {
    TrainerState s{PolicyNetworks::create(num_features, num_actions, config.hidden, config.activation, rng),
                   Adam{},
                   Adam{},
                   Adam{},
                   SilBuffer(config.sil_capacity),
                   0,
                   scaling,
                   config.ablation};
    s.policy.decision.params()[s.policy.decision.bias_offset(s.policy.decision.num_layers() - 1)] =
        config.initial_decision_bias;
    for (Adam* a : {&s.decision_opt, &s.action_opt, &s.value_opt}) a->learning_rate = config.learning_rate;
    return s;
}

namespace {

void clip_norm(std::vector<double>& g, double max_norm) {
    if (max_norm <= 0.0) return;
    double sq = 0.0;
    for (double x : g) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double k = max_norm / norm;
        for (double& x : g) x *= k;
    }
}

template <class T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = std::min(i - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i)));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace

UpdateStats ppo_update(TrainerState& state, std::vector<StepSample> batch, const TrainerConfig& config, Rng& rng) {
    UpdateStats stats;
    if (batch.empty() || config.epochs == 0) {
        return stats;
    }
    if (config.normalize_advantages && batch.size() > 1) {
        double mean = 0.0;
        for (const auto& s : batch) mean += s.advantage;
        mean /= static_cast<double>(batch.size());
        double var = 0.0;
        for (const auto& s : batch) var += (s.advantage - mean) * (s.advantage - mean);
        const double sd = std::sqrt(var / static_cast<double>(batch.size() - 1));
        for (auto& s : batch) s.advantage = (s.advantage - mean) / (sd + 1e-8);
    }
    const bool freeze = state.updates < config.freeze_decision_updates;
    std::size_t steps = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_in_place(batch, rng);
        for (std::size_t from = 0; from < batch.size(); from += config.minibatch_size) {
            const std::size_t n = std::min(config.minibatch_size, batch.size() - from);
            const std::span<const StepSample> mb(batch.data() + from, n);
            std::vector<SilEntry> sil_batch;
            if (config.sil_coef > 0.0) sil_batch = state.sil.sample(config.sil_batch_size, rng);
            LossResult loss = combined_loss(state.policy, mb, sil_batch, config);
            if (!std::isfinite(loss.total)) {
                throw std::domain_error("ppo_update: non-finite loss (surrogate " + std::to_string(loss.surrogate) +
                                        ", value " + std::to_string(loss.value_loss) + ", entropy " +
                                        std::to_string(loss.entropy) + ", sil " + std::to_string(loss.sil) + ")");
            }
            clip_norm(loss.grad.decision, config.max_grad_norm);
            clip_norm(loss.grad.action, config.max_grad_norm);
            clip_norm(loss.grad.value, config.max_grad_norm);
            if (!freeze) state.decision_opt.step(state.policy.decision.params(), loss.grad.decision);
            state.action_opt.step(state.policy.action.params(), loss.grad.action);
            state.value_opt.step(state.policy.value.params(), loss.grad.value);
            stats.surrogate += loss.surrogate;
            stats.value_loss += loss.value_loss;
            stats.entropy += loss.entropy;
            stats.sil += loss.sil;
            ++steps;
        }
    }
    const double k = 1.0 / static_cast<double>(steps);
    stats.surrogate *= k;
    stats.value_loss *= k;
    stats.entropy *= k;
    stats.sil *= k;
    ++state.updates;
    return stats;
}

void finish_episode(TrainerState& state, std::vector<StepSample>& episode, const TrainerConfig& config) {
    if (episode.empty()) return;
    std::vector<double> rewards(episode.size());
    std::vector<double> values(episode.size());
    for (std::size_t t = 0; t < episode.size(); ++t) {
        rewards[t] = episode[t].reward;
        values[t] = episode[t].value;
    }
    const GaeResult gae = compute_gae(rewards, values, config.discount, config.gae_lambda);
    for (std::size_t t = 0; t < episode.size(); ++t) {
        episode[t].advantage = gae.advantages[t];
        episode[t].ret = gae.returns[t];
    }
    if (config.sil_coef <= 0.0 || state.sil.capacity() == 0) return;
    const std::vector<double> mc = discounted_returns(rewards, config.discount);
    for (std::size_t t = 0; t < episode.size(); ++t) {
        const StepSample& s = episode[t];
        state.sil.insert(SilEntry{s.features, s.mask, s.intervene, s.action, mc[t], mc[t] - s.value});
    }
}

void write_training_log_csv(std::ostream& os, const std::vector<TrainingLogRow>& rows) {
    const auto old = os.precision();
    os << std::setprecision(17);
    os << "episode,update,pnl,total_reward,mean_abs_inventory,fills,interventions,surrogate,value_loss,entropy,sil,"
          "sil_size,sharpe_to_date\n";
    for (const auto& r : rows) {
        os << r.episode << ',' << r.update << ',' << r.pnl << ',' << r.total_reward << ',' << r.mean_abs_inventory
           << ',' << r.fills << ',' << r.interventions << ',' << r.surrogate << ',' << r.value_loss << ','
           << r.entropy << ',' << r.sil << ',' << r.sil_size << ',';
        if (std::isfinite(r.sharpe_to_date)) os << r.sharpe_to_date;
        os << '\n';
    }
    os.precision(old);
}

nlohmann::json checkpoint_json(const TrainerState& state, const EpisodeConfig& env_config) {
    return {{"format", "hawkes_mm-policy"},
            {"version", 1},
            {"policy", state.policy.to_json()},
            {"features", {{"scaling", state.scaling.to_json()}, {"ablation", ablation_name(state.ablation)}}},
            {"action_set", env_config.action_set == ActionSet::Restricted ? "restricted" : "full"},
            {"updates", state.updates},
            {"optimizers",
             {{"decision", state.decision_opt.to_json()},
              {"action", state.action_opt.to_json()},
              {"value", state.value_opt.to_json()}}}};
}

LoadedPolicy load_checkpoint(const nlohmann::json& j) {
    if (j.value("format", std::string{}) != "hawkes_mm-policy") {
        throw std::invalid_argument("load_checkpoint: not a policy checkpoint");
    }
    LoadedPolicy p;
    p.policy = PolicyNetworks::from_json(j.at("policy"));
    p.scaling = FeatureScaling::from_json(j.at("features").at("scaling"));
    p.ablation = parse_ablation(j.at("features").at("ablation").get<std::string>());
    const std::string set = j.at("action_set").get<std::string>();
    if (set != "restricted" && set != "full") {
        throw std::invalid_argument("load_checkpoint: unknown action set '" + set + "'");
    }
    p.action_set = set == "restricted" ? ActionSet::Restricted : ActionSet::Full;
    if (p.policy.num_actions() != action_count(p.action_set) || p.policy.num_features() != kNumFeatures) {
        throw std::invalid_argument("load_checkpoint: network shapes do not match the action set or feature layout");
    }
    return p;
}

Decider policy_decider(const LoadedPolicy& policy, std::uint64_t seed, bool greedy) {
    auto rng = std::make_shared<Rng>(seed);
    auto p = std::make_shared<const LoadedPolicy>(policy);
    return [p, rng, greedy](const Observation& obs, const std::vector<bool>& mask) {
        const auto features = make_features(obs, p->scaling, p->ablation);
        const ActResult r = act(p->policy, features, mask, *rng, greedy);
        return r.action ? Action::act(impulse_from_index(*r.action)) : Action::hold();
    };
}

std::uint64_t training_episode_seed(std::uint64_t seed, std::size_t index) noexcept {
    return derive_seed(seed, 0x10000 + index);
}

namespace {

struct Rollout {
    EpisodeResult result;
    std::vector<StepSample> samples;
};

Rollout rollout(const std::shared_ptr<const KernelParams>& kernel, const EpisodeConfig& env_config,
                const TrainerState& state, const TrainerConfig& config, std::uint64_t episode_seed) {
    MarketMakingEnv env(kernel, env_config);
    Rng rng(derive_seed(episode_seed, 7));
    Rollout out;
    out.samples.reserve(env_config.num_steps());
    const Decider decide = [&](const Observation& obs, const std::vector<bool>& mask) {
        StepSample s;
        s.features = make_features(obs, state.scaling, state.ablation);
        s.mask = mask;
        const ActResult r = act(state.policy, s.features, mask, rng);
        s.intervene = r.intervene;
        s.action = r.action.value_or(0);
        s.log_prob = r.log_prob;
        s.value = r.value;
        out.samples.push_back(std::move(s));
        return r.action ? Action::act(impulse_from_index(*r.action)) : Action::hold();
    };
    out.result = run_episode(env, episode_seed, decide);
    for (std::size_t t = 0; t < out.samples.size(); ++t) {
        out.samples[t].reward = out.result.rewards[t] * config.reward_scale;
    }
    return out;
}

} // namespace

TrainingResult train(std::shared_ptr<const KernelParams> kernel, const EpisodeConfig& env_config,
                     const TrainerConfig& config, std::uint64_t seed, const TrainingObserver& observer) {
    config.validate();
    env_config.validate();
    if (!kernel) throw std::invalid_argument("train: null kernel");
    Rng init_rng(derive_seed(seed, 0xA11CE));
    Rng update_rng(derive_seed(seed, 0xB0B));
    TrainingResult out{TrainerState::create(kNumFeatures, action_count(env_config.action_set), config,
                                            feature_scaling_for(env_config, *kernel), init_rng),
                       {}};
    TrainerState& state = out.state;
    std::vector<double> pnls;

    std::size_t episode = 0;
    while (episode < config.total_episodes) {
        const std::size_t wave = std::min(config.episodes_per_update, config.total_episodes - episode);
        std::vector<Rollout> rollouts(wave);
        const std::size_t workers = std::min(config.threads, wave);
        if (workers <= 1) {
            for (std::size_t k = 0; k < wave; ++k) {
                rollouts[k] = rollout(kernel, env_config, state, config, training_episode_seed(seed, episode + k));
            }
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::exception_ptr> errors(workers);
            std::vector<std::thread> pool;
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back([&, w] {
                    try {
                        for (std::size_t k = next++; k < wave; k = next++) {
                            rollouts[k] =
                                rollout(kernel, env_config, state, config, training_episode_seed(seed, episode + k));
                        }
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
            for (auto& t : pool) t.join();
            for (auto& e : errors) {
                if (e) std::rethrow_exception(e);
            }
        }

        std::vector<StepSample> batch;
        std::vector<TrainingLogRow> rows;
        for (std::size_t k = 0; k < wave; ++k) {
            Rollout& r = rollouts[k];
            finish_episode(state, r.samples, config);
            std::move(r.samples.begin(), r.samples.end(), std::back_inserter(batch));
            pnls.push_back(r.result.pnl);
            TrainingLogRow row;
            row.episode = episode + k;
            row.pnl = r.result.pnl;
            row.total_reward = r.result.total_reward;
            row.mean_abs_inventory = r.result.mean_abs_inventory;
            row.fills = r.result.fills;
            row.interventions = r.result.interventions;
            row.sharpe_to_date = annualized_sharpe(pnls, env_config.initial_cash, env_config.horizon)
                                     .value_or(std::numeric_limits<double>::quiet_NaN());
            rows.push_back(row);
        }
        const UpdateStats stats = ppo_update(state, std::move(batch), config, update_rng);
        for (auto& row : rows) {
            row.update = state.updates;
            row.surrogate = stats.surrogate;
            row.value_loss = stats.value_loss;
            row.entropy = stats.entropy;
            row.sil = stats.sil;
            row.sil_size = state.sil.size();
            out.log.push_back(row);
            if (observer) observer(state, row);
        }
        episode += wave;
    }
    return out;
}

} // namespace hawkesmm
