#include "tsc/critic.h"
#include "tsc/errors.h"
#include "tsc/util.h"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <map>
#include <mutex>

namespace tsc {

    ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity_ == 0)
            throw ConfigError("replay buffer capacity must be positive");
        items_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
    }

    void ReplayBuffer::push(const Transition &t) {
        if (items_.size() < capacity_) {
            items_.push_back(t);
        } else {
            items_[next_] = t;
        }
        next_ = (next_ + 1) % capacity_;
    }

    std::vector<Transition> ReplayBuffer::sample(std::size_t n, std::mt19937_64 &rng) const {
        if (n >= items_.size())
            return items_;
        std::vector<Transition> out;
        out.reserve(n);
        std::sample(items_.begin(), items_.end(), std::back_inserter(out), n, rng);
        return out;
    }

    void TrainConfig::validate() const {
        if (!(learningRate > 0.0))
            throw ConfigError("learning rate must be positive");
        if (!(gamma >= 0.0 && gamma <= 1.0))
            throw ConfigError("gamma must lie in [0, 1]");
        if (targetSyncSteps < 1)
            throw ConfigError("target sync period must be >= 1");
        if (steps < 0)
            throw ConfigError("steps must be >= 0");
        if (bufferCapacity == 0 || batchSize == 0)
            throw ConfigError("buffer capacity and batch size must be positive");
        if (!(divergenceThreshold > 0.0))
            throw ConfigError("divergence threshold must be positive");
    }

    TrainConfig TrainConfig::fromJson(const Json &j) {
        TrainConfig c;
        try {
            c.learningRate = j.value("learning_rate", c.learningRate);
            c.gamma = j.value("gamma", c.gamma);
            c.targetSyncSteps = j.value("target_sync_steps", c.targetSyncSteps);
            c.steps = j.value("steps", c.steps);
            c.bufferCapacity = j.value("buffer_capacity", c.bufferCapacity);
            c.batchSize = j.value("batch_size", c.batchSize);
            c.divergenceThreshold = j.value("divergence_threshold", c.divergenceThreshold);
            c.seed = j.value("seed", c.seed);
        } catch (const nlohmann::json::exception &e) {
            throw ConfigError(std::string("critic training config: ") + e.what());
        }
        c.validate();
        return c;
    }

    Json TrainConfig::toJson() const {
        return {{"learning_rate", learningRate},   {"gamma", gamma},
                {"target_sync_steps", targetSyncSteps}, {"steps", steps},
                {"buffer_capacity", bufferCapacity}, {"batch_size", batchSize},
                {"divergence_threshold", divergenceThreshold}, {"seed", seed}};
    }

    CriticTrainer::CriticTrainer(const TrainConfig &config, CriticParams init)
        : config_(config), params_(std::move(init)), target_(params_), buffer_(config.bufferCapacity),
          m_(params_.parameterCount(), 0.0), v_(params_.parameterCount(), 0.0), rng_(config.seed) {
        config_.validate();
        params_.validate();
    }

    void CriticTrainer::add(std::span<const Transition> transitions) {
        for (const auto &t : transitions)
            buffer_.push(t);
    }

    void CriticTrainer::trainSteps(int n) {
        if (buffer_.size() == 0)
            return;
        constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        for (int s = 0; s < n; s++) {
            auto batch = buffer_.sample(config_.batchSize, rng_);
            auto [loss, grad] = tdLoss(params_, target_, batch, config_.gamma);
            if (!std::isfinite(loss) || loss > config_.divergenceThreshold)
                throw DivergenceError("critic loss " + std::to_string(loss) + " exceeded the threshold at step " +
                                      std::to_string(stepCount_ + 1));
            losses_.push_back(loss);
            stepCount_++;
            auto theta = params_.flatten();
            auto g = grad.flatten();
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(stepCount_));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(stepCount_));
            for (std::size_t i = 0; i < theta.size(); i++) {
                m_[i] = beta1 * m_[i] + (1.0 - beta1) * g[i];
                v_[i] = beta2 * v_[i] + (1.0 - beta2) * g[i] * g[i];
                theta[i] -= config_.learningRate * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
            }
            params_.assign(theta);
            if (stepCount_ % config_.targetSyncSteps == 0)
                target_ = params_;
        }
    }

    TrainResult trainCritic(std::span<const Transition> transitions, const TrainConfig &config,
                            std::optional<CriticParams> init) {
        CriticParams start = init ? *init : CriticParams::randomInit(config.seed);
        if (transitions.empty()) {
            config.validate();
            return {start, {}};
        }
        CriticTrainer trainer(config, start);
        trainer.add(transitions);
        trainer.trainSteps(config.steps);
        return {trainer.params(), trainer.losses()};
    }

    std::vector<Transition> transitionsFromLog(const EpisodeLog &log) {
        std::map<std::string, std::vector<const SwitchRecord *>> byIntersection;
        for (const auto &s : log.switches)
            byIntersection[s.intersection].push_back(&s);
        std::vector<Transition> out;
        for (auto &[id, records] : byIntersection) {
            std::stable_sort(records.begin(), records.end(),
                             [](const SwitchRecord *a, const SwitchRecord *b) { return a->time < b->time; });
            for (std::size_t i = 0; i + 1 < records.size(); i++) {
                Transition t;
                t.obs = featurize(records[i]->observation);
                t.action = phaseIndex(records[i]->phase);
                t.reward = -static_cast<double>(records[i + 1]->observation.totalQueued());
                t.next = featurize(records[i + 1]->observation);
                out.push_back(t);
            }
        }
        return out;
    }

    namespace {

        class CriticController : public Controller {
        public:
            explicit CriticController(CriticParams params) : params_(std::move(params)) { params_.validate(); }
            PhaseId decide(const IntersectionObservation &obs, double) override {
                auto f = featurize(obs);
                return greedyAction(forward(params_, f));
            }
            std::string name() const override { return "critic"; }
            bool isDeterministic() const override { return true; }

        private:
            CriticParams params_;
        };

        class ExplorationController : public Controller {
        public:
            ExplorationController(CriticParams params, double epsilon, std::uint64_t seed)
                : params_(std::move(params)), epsilon_(epsilon), seed_(seed) {}
            PhaseId decide(const IntersectionObservation &obs, double) override {
                std::mt19937_64 *rng;
                {
                    std::lock_guard lock(mutex_);
                    auto it = rngs_.find(obs.intersection);
                    if (it == rngs_.end())
                        it = rngs_.emplace(obs.intersection, std::mt19937_64(seed_ ^ stableHash(obs.intersection)))
                                 .first;
                    rng = &it->second;
                }
                // Each intersection is decided by one thread at a time, so its generator
                // needs no further locking.
                std::uniform_real_distribution<double> coin(0.0, 1.0);
                if (coin(*rng) < epsilon_) {
                    std::uniform_int_distribution<int> pick(0, kPhaseCount - 1);
                    return kPhases[pick(*rng)];
                }
                return greedyAction(forward(params_, featurize(obs)));
            }
            std::string name() const override { return "critic-explore"; }
            bool isDeterministic() const override { return false; }

        private:
            CriticParams params_;
            double epsilon_;
            std::uint64_t seed_;
            std::mutex mutex_;
            std::map<std::string, std::mt19937_64> rngs_;
        };

    }

    std::unique_ptr<Controller> makeCriticController(CriticParams params) {
        return std::make_unique<CriticController>(std::move(params));
    }

    std::unique_ptr<Controller> makeExplorationController(const CriticParams &params, double epsilon,
                                                          std::uint64_t seed) {
        if (!(epsilon >= 0.0 && epsilon <= 1.0))
            throw ConfigError("epsilon must lie in [0, 1]");
        return std::make_unique<ExplorationController>(params, epsilon, seed);
    }

    TrainResult trainOnline(std::shared_ptr<const RoadNetwork> network,
                            const std::function<FlowSpec(int)> &flowForEpisode, const SimConfig &sim,
                            const TrainConfig &config, const OnlineTrainOptions &options) {
        if (options.episodes < 1)
            throw ConfigError("online training needs at least one episode");
        CriticTrainer trainer(config, CriticParams::randomInit(config.seed));
        for (int e = 0; e < options.episodes; e++) {
            double frac = options.episodes == 1 ? 1.0 : static_cast<double>(e) / (options.episodes - 1);
            double epsilon = options.epsilonStart + frac * (options.epsilonEnd - options.epsilonStart);
            auto explorer = makeExplorationController(trainer.params(), epsilon, config.seed + 7919u * (e + 1));
            EpisodeLog log = runEpisode(network, flowForEpisode(e), *explorer, sim);
            auto transitions = transitionsFromLog(log);
            trainer.add(transitions);
            trainer.trainSteps(options.stepsPerEpisode);
        }
        return {trainer.params(), trainer.losses()};
    }

    FlowSpec ToyEnvironment::flow(std::uint64_t seed) const {
        SynthFlowOptions options = flowOptions;
        options.seed = seed;
        return synthFlow(*network, options);
    }

    ToyEnvironment makeToyEnvironment() {
        ToyEnvironment env;
        env.network = std::make_shared<RoadNetwork>(synthGrid(1, 1, 300.0));
        env.flowOptions.defaultRate = 0.03;
        env.flowOptions.rateByApproach = {{Approach::East, 0.15}, {Approach::West, 0.15}};
        return env;
    }

}
