#pragma once

#include "tsc/controller.h"
#include "tsc/episode.h"
#include "tsc/json_io.h"
#include "tsc/observe.h"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace tsc {

    inline constexpr int kFeatureDim = kPhaseCount * 4;
    inline constexpr int kHiddenWidth = 20;

    using Features = std::array<double, kFeatureDim>;
    using ActionValues = std::array<double, kPhaseCount>;

    /// Per phase (ETWT, ELWL, NTST, NLSL): queued total, then segment 1..3 totals.
    /// Raw counts. Throws ShapeError unless the observation has three segments.
    Features featurize(const IntersectionObservation &obs);

    struct DenseLayer {
        int in = 0;
        int out = 0;
        std::vector<double> weights;  // out x in, row-major
        std::vector<double> bias;     // out
        bool operator==(const DenseLayer &) const = default;
    };

    /// 16 -> 20 -> 20 -> 4 with rectifiers between layers.
    struct CriticParams {
        std::array<DenseLayer, 3> layers;

        static CriticParams zeros();
        // He-uniform weights, zero biases.
        static CriticParams randomInit(std::uint64_t seed);

        std::size_t parameterCount() const;
        std::vector<double> flatten() const;
        // Throws ShapeError on a size mismatch.
        void assign(std::span<const double> values);
        // Throws ShapeError when layer shapes are inconsistent.
        void validate() const;
        bool allFinite() const;
        bool operator==(const CriticParams &) const = default;
    };

    ActionValues forward(const CriticParams &params, std::span<const double> features);
    double score(const CriticParams &params, const Features &features, PhaseId action);
    // Lowest index among maxima.
    PhaseId greedyAction(const ActionValues &values);

    struct Transition {
        Features obs{};
        int action = 0;
        double reward = 0.0;
        Features next{};
        bool terminal = false;
    };

    struct LossAndGradient {
        double loss = 0.0;
        CriticParams gradient;
    };

    /// Mean squared TD error against r + gamma * max_a' Q_target(o', a'), with no
    /// bootstrap on terminal transitions. Throws ShapeError on an empty batch.
    LossAndGradient tdLoss(const CriticParams &params, const CriticParams &target,
                           std::span<const Transition> batch, double gamma);

    class ReplayBuffer {
    public:
        explicit ReplayBuffer(std::size_t capacity = 12000);
        void push(const Transition &t);
        std::size_t size() const { return items_.size(); }
        std::size_t capacity() const { return capacity_; }
        // Uniform without replacement; returns min(n, size()) transitions.
        std::vector<Transition> sample(std::size_t n, std::mt19937_64 &rng) const;

    private:
        std::size_t capacity_;
        std::size_t next_ = 0;
        std::vector<Transition> items_;
    };

    struct TrainConfig {
        double learningRate = 1e-3;
        double gamma = 0.8;
        int targetSyncSteps = 200;
        int steps = 2000;  // gradient steps per train() call
        std::size_t bufferCapacity = 12000;
        std::size_t batchSize = 3000;
        double divergenceThreshold = 1e8;
        std::uint64_t seed = 0;

        void validate() const;  // ConfigError
        static TrainConfig fromJson(const Json &j);
        Json toJson() const;
    };

    /// Adam optimizer state plus replay buffer and target network.
    class CriticTrainer {
    public:
        CriticTrainer(const TrainConfig &config, CriticParams init);
        void add(std::span<const Transition> transitions);
        // Runs n gradient steps (none when the buffer is empty). Throws DivergenceError.
        void trainSteps(int n);
        const CriticParams &params() const { return params_; }
        const std::vector<double> &losses() const { return losses_; }
        std::size_t bufferSize() const { return buffer_.size(); }

    private:
        TrainConfig config_;
        CriticParams params_;
        CriticParams target_;
        ReplayBuffer buffer_;
        std::vector<double> m_;
        std::vector<double> v_;
        std::mt19937_64 rng_;
        long long stepCount_ = 0;
        std::vector<double> losses_;
    };

    struct TrainResult {
        CriticParams params;
        std::vector<double> losses;
    };

    /// Offline training. An empty transition set returns `init` unchanged.
    TrainResult trainCritic(std::span<const Transition> transitions, const TrainConfig &config,
                            std::optional<CriticParams> init = std::nullopt);

    /// Transitions between consecutive switch decisions of each intersection. Reward is
    /// the negated total queue of the next observation; the final decision of each
    /// intersection has no successor and is dropped.
    std::vector<Transition> transitionsFromLog(const EpisodeLog &log);

    /// Greedy policy over Q. Ties go to the lower phase index.
    std::unique_ptr<Controller> makeCriticController(CriticParams params);
    /// Epsilon-greedy exploration, seeded per intersection.
    std::unique_ptr<Controller> makeExplorationController(const CriticParams &params, double epsilon,
                                                          std::uint64_t seed);

    struct OnlineTrainOptions {
        int episodes = 20;
        double epsilonStart = 1.0;
        double epsilonEnd = 0.1;
        int stepsPerEpisode = 100;
    };

    /// Alternates exploration episodes in the simulator with gradient steps.
    /// `flowForEpisode(i)` supplies the demand of episode i.
    TrainResult trainOnline(std::shared_ptr<const RoadNetwork> network,
                            const std::function<FlowSpec(int)> &flowForEpisode, const SimConfig &sim,
                            const TrainConfig &config, const OnlineTrainOptions &options);

    /// Single intersection whose east-west through demand dominates the others.
    struct ToyEnvironment {
        std::shared_ptr<const RoadNetwork> network;
        SynthFlowOptions flowOptions;
        FlowSpec flow(std::uint64_t seed) const;
    };

    ToyEnvironment makeToyEnvironment();

    Json criticToJson(const CriticParams &params);
    CriticParams criticFromJson(const Json &j);  // ParseError / ShapeError
    void saveCritic(const CriticParams &params, const std::filesystem::path &path);
    CriticParams loadCritic(const std::filesystem::path &path);
    std::string criticHash(const CriticParams &params);
    std::string lossCurveCsv(const std::vector<double> &losses);

}
