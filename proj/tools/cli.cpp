#include "cli.h"

#include "tsc/agents.h"
#include "tsc/critic.h"
#include "tsc/episode.h"
#include "tsc/errors.h"
#include "tsc/finetune.h"
#include "tsc/llmclient.h"
#include "tsc/metrics.h"
#include "tsc/netmodel.h"
#include "tsc/prompting.h"
#include "tsc/reasoning_record.h"
#include "tsc/util.h"

#include "CLI11.hpp"

#include <filesystem>
#include <iostream>
#include <regex>
#include <set>

namespace fs = std::filesystem;

namespace tsc::cli {

    namespace {

        Json simConfigToJson(const SimConfig &c) {
            return {{"tick", c.tick},
                    {"green", c.greenDuration},
                    {"yellow", c.yellowDuration},
                    {"all_red", c.allRedDuration},
                    {"v_stop", c.vStop},
                    {"free_flow_speed", c.freeFlowSpeed},
                    {"discharge_headway", c.dischargeHeadway},
                    {"episode_length", c.episodeLength},
                    {"vehicle_slot", c.vehicleSlot}};
        }

        SimConfig simConfigFromJson(const Json &j, std::uint64_t seed) {
            SimConfig c;
            try {
                c.tick = j.at("tick").get<double>();
                c.greenDuration = j.at("green").get<double>();
                c.yellowDuration = j.at("yellow").get<double>();
                c.allRedDuration = j.at("all_red").get<double>();
                c.vStop = j.at("v_stop").get<double>();
                c.freeFlowSpeed = j.at("free_flow_speed").get<double>();
                c.dischargeHeadway = j.at("discharge_headway").get<double>();
                c.episodeLength = j.at("episode_length").get<double>();
                c.vehicleSlot = j.at("vehicle_slot").get<double>();
            } catch (const nlohmann::json::exception &e) {
                throw ConfigError(std::string("sim config: ") + e.what());
            }
            c.seed = seed;
            c.validate();
            return c;
        }

        Json readJsonFile(const std::string &path) {
            std::string text = readFile(path);
            try {
                return Json::parse(text);
            } catch (const nlohmann::json::parse_error &e) {
                throw ConfigError(path + ": malformed JSON (" + e.what() + ")");
            }
        }

        Json loadConfigFile(const std::string &path) {
            if (path.empty())
                return Json::object();
            Json j = readJsonFile(path);
            if (!j.is_object())
                throw ConfigError(path + ": configuration must be a JSON object");
            return j;
        }

        void requireExists(const std::string &path, const std::string &what) {
            if (!fs::exists(path))
                throw IoError(what + " not found: " + path);
        }

        void writeJson(const fs::path &path, const Json &j) { writeFile(path, j.dump(2) + "\n"); }

        // Records an override only for flags that appeared on the command line.
        class Overrides {
        public:
            template <typename T>
            void add(CLI::Option *opt, const std::string &pointer, const T &value) {
                pending_.push_back([opt, pointer, &value](Json &j) {
                    if (opt->count() > 0)
                        j[Json::json_pointer(pointer)] = value;
                });
            }
            Json collect() const {
                Json j = Json::object();
                for (const auto &f : pending_)
                    f(j);
                return j;
            }

        private:
            std::vector<std::function<void(Json &)>> pending_;
        };

        std::pair<int, int> parseGridSpec(const std::string &spec) {
            static const std::regex re(R"((\d+)x(\d+))");
            std::smatch m;
            if (!std::regex_match(spec, m, re))
                throw ConfigError("synthetic grid must look like RxC, got " + spec);
            return {std::stoi(m[1].str()), std::stoi(m[2].str())};
        }

        struct Scenario {
            std::shared_ptr<const RoadNetwork> network;
            FlowSpec flow;
        };

        Scenario loadScenario(const Json &cfg, std::uint64_t seed) {
            const Json &syn = cfg["synthetic"];
            const bool hasFiles = !cfg["roadnet"].is_null() || !cfg["flow"].is_null();
            if (!syn.is_null() && hasFiles)
                throw ConfigError("give either roadnet+flow or a synthetic grid, not both");
            if (syn.is_null()) {
                if (cfg["roadnet"].is_null() || cfg["flow"].is_null())
                    throw ConfigError("a run needs roadnet and flow files, or a synthetic grid");
                auto roadnet = cfg["roadnet"].get<std::string>();
                auto flowPath = cfg["flow"].get<std::string>();
                requireExists(roadnet, "roadnet file");
                requireExists(flowPath, "flow file");
                auto network = std::make_shared<RoadNetwork>(loadRoadnet(roadnet));
                FlowSpec flow = loadFlow(flowPath);
                validateFlow(flow, *network);
                return {network, std::move(flow)};
            }
            try {
                auto network = std::make_shared<RoadNetwork>(synthGrid(
                    syn.at("rows").get<int>(), syn.at("cols").get<int>(), syn.value("lane_length", 300.0)));
                SynthFlowOptions fo;
                fo.duration = syn.value("duration", cfg["sim"]["episode_length"].get<double>());
                fo.defaultRate = syn.value("rate", fo.defaultRate);
                if (syn.contains("rates"))
                    for (const auto &[name, rate] : syn["rates"].items()) {
                        bool found = false;
                        for (Approach a : {Approach::North, Approach::South, Approach::East, Approach::West})
                            if (toString(a) == name) {
                                fo.rateByApproach[a] = rate.get<double>();
                                found = true;
                            }
                        if (!found)
                            throw ConfigError("unknown approach in synthetic.rates: " + name);
                    }
                fo.leftProbability = syn.value("left", fo.leftProbability);
                fo.rightProbability = syn.value("right", fo.rightProbability);
                fo.seed = syn.value("seed", seed);
                FlowSpec flow = synthFlow(*network, fo);
                return {network, std::move(flow)};
            } catch (const nlohmann::json::exception &e) {
                throw ConfigError(std::string("synthetic: ") + e.what());
            }
        }

        BackendConfig loadBackendConfig(const Json &ref) {
            if (ref.is_null())
                throw ConfigError("the llm controller needs a backend (--backend)");
            if (ref.is_string())
                return BackendConfig::fromJson(readJsonFile(ref.get<std::string>()));
            return BackendConfig::fromJson(ref);
        }

        std::vector<PhaseId> parseOrder(const Json &order) {
            std::vector<PhaseId> out;
            for (const auto &p : order) {
                auto id = p.is_string() ? phaseFromString(p.get<std::string>()) : std::nullopt;
                if (!id)
                    throw ConfigError("unknown phase in controller.order: " + p.dump());
                out.push_back(*id);
            }
            return out;
        }

        struct BuiltController {
            std::unique_ptr<Controller> controller;
            LlmController *llm = nullptr;
            std::shared_ptr<LlmClient> client;
        };

        BuiltController buildController(const Json &cfg, std::uint64_t seed, bool strict,
                                        const std::shared_ptr<ChatBackend> &backendOverride = nullptr) {
            const Json &c = cfg["controller"];
            const std::string kind = c.value("kind", std::string());
            BuiltController out;
            if (kind == "random") {
                out.controller = makeRandomController(c.value("seed", seed));
            } else if (kind == "fixedtime") {
                out.controller = makeFixedTimeController(parseOrder(c["order"]));
            } else if (kind == "maxpressure") {
                out.controller = makeMaxPressureController();
            } else if (kind == "greedy") {
                out.controller = makeGreedyStubController();
            } else if (kind == "critic") {
                if (!c.contains("critic") || !c["critic"].is_string())
                    throw ConfigError("the critic controller needs controller.critic (weights file)");
                auto path = c["critic"].get<std::string>();
                requireExists(path, "critic weights");
                out.controller = makeCriticController(loadCritic(path));
            } else if (kind == "llm") {
                BackendConfig bc = loadBackendConfig(cfg["backend"]);
                auto backend = backendOverride ? backendOverride : makeBackend(bc);
                out.client = std::make_shared<LlmClient>(bc, backend);
                PromptSections sections = cfg["prompts"].is_null()
                                              ? PromptSections::defaults()
                                              : PromptSections::load(cfg["prompts"].get<std::string>());
                LlmControllerOptions options;
                options.samples = c.value("samples", 1);
                options.strict = strict || c.value("strict", false);
                auto llm = std::make_unique<LlmController>(out.client, sections, makeGreedyStubController(), options);
                out.llm = llm.get();
                out.controller = std::move(llm);
            } else {
                throw ConfigError("unknown controller kind: " + kind +
                                  " (random, fixedtime, maxpressure, greedy, critic, llm)");
            }
            return out;
        }

        struct RunFlags {
            std::string config, roadnet, flow, synthetic, controller, backend, critic, prompts, out, order;
            double rate = 0.0, episodeLength = 0.0;
            std::uint64_t seed = 0;
            int samples = 1;
            bool parallel = false;
        };

        void addRunFlags(CLI::App *cmd, RunFlags &f, Overrides &o) {
            cmd->add_option("--config", f.config, "JSON configuration file");
            o.add(cmd->add_option("--roadnet", f.roadnet, "CityFlow roadnet file"), "/roadnet", f.roadnet);
            o.add(cmd->add_option("--flow", f.flow, "CityFlow flow file"), "/flow", f.flow);
            cmd->add_option("--synthetic", f.synthetic, "Synthetic grid RxC instead of roadnet/flow");
            o.add(cmd->add_option("--rate", f.rate, "Synthetic arrivals per second per entry road"),
                  "/synthetic/rate", f.rate);
            o.add(cmd->add_option("--controller", f.controller,
                                  "random | fixedtime | maxpressure | greedy | critic | llm"),
                  "/controller/kind", f.controller);
            o.add(cmd->add_option("--backend", f.backend, "Backend config JSON (llm controller)"), "/backend",
                  f.backend);
            o.add(cmd->add_option("--critic", f.critic, "Critic weights (critic controller)"), "/controller/critic",
                  f.critic);
            o.add(cmd->add_option("--prompts", f.prompts, "Directory with prompt section files"), "/prompts",
                  f.prompts);
            o.add(cmd->add_option("--episode-length", f.episodeLength, "Episode length in seconds"),
                  "/sim/episode_length", f.episodeLength);
            o.add(cmd->add_option("--seed", f.seed, "Seed for flows and stochastic controllers"), "/seed", f.seed);
            o.add(cmd->add_flag("--parallel", f.parallel, "Decide intersections concurrently"), "/parallel",
                  f.parallel);
            o.add(cmd->add_option("--out", f.out, "Output directory"), "/output", f.out);
        }

        Json resolveRunFlags(const RunFlags &f, const Overrides &o) {
            Json flags = o.collect();
            if (!f.synthetic.empty()) {
                auto [rows, cols] = parseGridSpec(f.synthetic);
                flags["synthetic"]["rows"] = rows;
                flags["synthetic"]["cols"] = cols;
            }
            Json file = loadConfigFile(f.config);
            Json cfg = resolveConfig(defaultRunConfig(), file, flags);
            // A partially specified synthetic block (only a rate) is not a flow source.
            if (cfg["synthetic"].is_object() && !cfg["synthetic"].contains("rows"))
                cfg["synthetic"] = nullptr;
            return cfg;
        }

        void writeRunOutputs(const fs::path &out, const EpisodeLog &log, const BuiltController &built,
                             const MetricsReport &report) {
            saveEpisodeLog(log, out / "episode.jsonl");
            writeJson(out / "report.json", toJson(report));
            writeFile(out / "report.txt", formatTable({report}));
            if (built.client)
                built.client->saveTranscript(out / "transcript.jsonl");
        }

        int cmdRun(const Json &cfg) {
            const std::uint64_t seed = cfg["seed"].get<std::uint64_t>();
            SimConfig sim = simConfigFromJson(cfg["sim"], seed);
            Scenario scenario = loadScenario(cfg, seed);
            auto built = buildController(cfg, seed, false);
            const fs::path out = cfg["output"].get<std::string>();
            writeJson(out / "config.json", cfg);
            EpisodeOptions options;
            options.parallelDecisions = cfg["parallel"].get<bool>();
            EpisodeLog log = runEpisode(scenario.network, scenario.flow, *built.controller, sim, options);
            MetricsReport report = computeReport(log);
            writeRunOutputs(out, log, built, report);
            if (built.llm) {
                saveRecords(built.llm->records(), out / "records.jsonl");
                std::cerr << "llm fallbacks: " << built.llm->fallbackCount() << '\n';
            }
            std::cout << formatTable({report});
            return Ok;
        }

        int cmdCollect(Json cfg, bool resume) {
            cfg["controller"]["kind"] = "llm";
            const std::uint64_t seed = cfg["seed"].get<std::uint64_t>();
            SimConfig sim = simConfigFromJson(cfg["sim"], seed);
            Scenario scenario = loadScenario(cfg, seed);
            const fs::path out = cfg["output"].get<std::string>();

            std::shared_ptr<ChatBackend> backend;
            if (resume) {
                if (!fs::exists(out / "transcript.jsonl"))
                    throw IoError("nothing to resume: " + (out / "transcript.jsonl").string() + " is missing");
                auto replay = std::make_shared<ReplayBackend>(loadTranscript(out / "transcript.jsonl"));
                backend = std::make_shared<ResumeBackend>(replay, makeBackend(loadBackendConfig(cfg["backend"])));
            }
            auto built = buildController(cfg, seed, true, backend);
            writeJson(out / "config.json", cfg);
            EpisodeOptions options;
            options.parallelDecisions = cfg["parallel"].get<bool>();
            try {
                EpisodeLog log = runEpisode(scenario.network, scenario.flow, *built.controller, sim, options);
                // Keep the decisions whose green stage was served within the episode.
                auto completed = completedDecisions(log, sim);
                std::set<std::pair<std::string, double>> keep(completed.begin(), completed.end());
                std::vector<ReasoningRecord> records;
                for (auto &r : built.llm->records())
                    if (keep.count({r.intersection, r.time}))
                        records.push_back(std::move(r));
                saveRecords(records, out / "records.jsonl");
                writeRunOutputs(out, log, built, computeReport(log));
                if (fs::exists(out / "resume.json"))
                    fs::remove(out / "resume.json");
                std::cout << "collected " << records.size() << " reasoning records (" << built.llm->fallbackCount()
                          << " fallbacks) into " << (out / "records.jsonl").string() << '\n';
                return Ok;
            } catch (const BackendError &e) {
                auto partial = built.llm->records();
                saveRecords(partial, out / "records.partial.jsonl");
                built.client->saveTranscript(out / "transcript.jsonl");
                writeJson(out / "resume.json", {{"interrupted", true},
                                                {"error", e.what()},
                                                {"records", partial.size()},
                                                {"last_time", partial.empty() ? Json(nullptr) : Json(partial.back().time)},
                                                {"hint", "rerun collect with --resume to replay the transcript"}});
                throw;
            }
        }

        int cmdTrainCritic(const Json &cfg) {
            TrainConfig tc = TrainConfig::fromJson(cfg["train"]);
            const fs::path out = cfg["output"].get<std::string>();
            writeJson(out / "config.json", cfg);
            TrainResult result;
            std::optional<ToyEnvironment> toy;
            SimConfig sim = simConfigFromJson(cfg["sim"], tc.seed);
            if (!cfg["logs"].empty()) {
                std::vector<Transition> transitions;
                for (const auto &p : cfg["logs"]) {
                    auto path = p.get<std::string>();
                    requireExists(path, "episode log");
                    auto t = transitionsFromLog(loadEpisodeLog(path));
                    transitions.insert(transitions.end(), t.begin(), t.end());
                }
                std::cerr << "training on " << transitions.size() << " transitions\n";
                result = trainCritic(transitions, tc);
            } else {
                const Json &env = cfg["env"];
                OnlineTrainOptions oo;
                oo.episodes = env["episodes"].get<int>();
                oo.stepsPerEpisode = env["steps_per_episode"].get<int>();
                oo.epsilonStart = env["epsilon_start"].get<double>();
                oo.epsilonEnd = env["epsilon_end"].get<double>();
                std::shared_ptr<const RoadNetwork> network;
                std::function<FlowSpec(int)> flowFor;
                if (env["toy"].get<bool>()) {
                    toy = makeToyEnvironment();
                    network = toy->network;
                    flowFor = [&](int e) { return toy->flow(tc.seed * 1000003u + 1000u + e); };
                } else {
                    Json scenarioCfg = cfg;
                    network = loadScenario(scenarioCfg, tc.seed).network;
                    if (scenarioCfg["synthetic"].is_null())
                        throw ConfigError("online critic training needs a synthetic grid or the toy environment");
                    flowFor = [&, scenarioCfg](int e) mutable {
                        scenarioCfg["synthetic"]["seed"] = tc.seed * 1000003u + 1000u + e;
                        return loadScenario(scenarioCfg, tc.seed).flow;
                    };
                }
                result = trainOnline(network, flowFor, sim, tc, oo);
                if (toy) {
                    Json eval = Json::array();
                    for (std::uint64_t s = 0; s < 5; s++) {
                        auto flow = toy->flow(s);
                        auto critic = makeCriticController(result.params);
                        auto random = makeRandomController(s);
                        double a = computeAtt(runEpisode(toy->network, flow, *critic, sim));
                        double b = computeAtt(runEpisode(toy->network, flow, *random, sim));
                        eval.push_back({{"seed", s}, {"critic_att", a}, {"random_att", b}});
                        std::cout << "eval seed " << s << ": critic ATT " << a << ", random ATT " << b << '\n';
                    }
                    writeJson(out / "eval.json", eval);
                }
            }
            saveCritic(result.params, out / "weights.json");
            writeFile(out / "loss.csv", lossCurveCsv(result.losses));
            std::cout << "critic weights " << (out / "weights.json").string() << " sha256 "
                      << criticHash(result.params) << " after " << result.losses.size() << " steps\n";
            return Ok;
        }

        int cmdFilter(const std::string &recordsPath, const std::string &criticPath, const std::string &outPath) {
            auto records = loadRecords(recordsPath);
            auto kept = filterTrajectories(records, loadCritic(criticPath));
            saveRecords(kept, outPath);
            std::cout << "kept " << kept.size() << " of " << records.size() << " records\n";
            return Ok;
        }

        int cmdExport(const std::string &recordsPath, const std::string &criticPath, const std::string &outPath) {
            auto records = loadRecords(recordsPath);
            if (!criticPath.empty())
                records = filterTrajectories(records, loadCritic(criticPath));
            std::erase_if(records, [](const ReasoningRecord &r) { return r.fallback; });
            auto count = exportIftDataset(records, outPath);
            std::cout << "exported " << count << " examples to " << outPath << '\n';
            return Ok;
        }

        int cmdRbc(const std::string &batchesPath, const std::string &recordsPath, const std::string &criticPath,
                   const std::string &logprobsPath, double beta, const std::string &outPath) {
            std::vector<RankingBatch> batches;
            if (!batchesPath.empty()) {
                batches = loadRankingBatches(batchesPath);
            } else {
                if (recordsPath.empty() || criticPath.empty() || logprobsPath.empty())
                    throw ConfigError("rbc needs --batches, or --records with --critic and --logprobs");
                auto logprobs = loadLogProbs(logprobsPath);
                batches = buildRankingBatches(
                    loadRecords(recordsPath), loadCritic(criticPath),
                    [&](const ReasoningRecord &r) -> std::optional<TokenLogProbs> {
                        auto it = logprobs.find(trajectoryId(r));
                        if (it == logprobs.end())
                            return std::nullopt;
                        return it->second;
                    },
                    beta);
            }
            Json rows = Json::array();
            double total = 0.0;
            for (const auto &b : batches) {
                auto r = rbcLoss(b);
                total += r.loss;
                rows.push_back({{"group", b.group},
                                {"k", b.entries.size()},
                                {"pairs", r.pairs},
                                {"loss", r.loss},
                                {"gradient", r.gradient}});
                std::cout << (b.group.empty() ? std::string("batch") : b.group) << ": k=" << b.entries.size()
                          << " loss=" << r.loss << '\n';
            }
            Json report = {{"batches", rows},
                           {"mean_loss", batches.empty() ? 0.0 : total / static_cast<double>(batches.size())}};
            if (!outPath.empty())
                writeJson(outPath, report);
            return Ok;
        }

        int cmdReport(const std::vector<std::string> &logs, const std::string &csvPath, const std::string &jsonPath) {
            std::vector<MetricsReport> reports;
            for (const auto &p : logs)
                reports.push_back(computeReport(loadEpisodeLog(p)));
            std::cout << formatTable(reports);
            if (!csvPath.empty())
                writeFile(csvPath, comparisonCsv(reports));
            if (!jsonPath.empty()) {
                Json arr = Json::array();
                for (const auto &r : reports)
                    arr.push_back(toJson(r));
                writeJson(jsonPath, arr);
            }
            return Ok;
        }

    }

    Json resolveConfig(const Json &defaults, const Json &file, const Json &flags) {
        Json out = defaults;
        out.merge_patch(file);
        out.merge_patch(flags);
        return out;
    }

    Json defaultRunConfig() {
        return {{"roadnet", nullptr},
                {"flow", nullptr},
                {"synthetic", nullptr},
                {"controller",
                 {{"kind", "fixedtime"}, {"order", {"ETWT", "ELWL", "NTST", "NLSL"}}, {"samples", 1}, {"strict", false}}},
                {"sim", simConfigToJson(SimConfig{})},
                {"backend", nullptr},
                {"prompts", nullptr},
                {"output", "out"},
                {"seed", 0},
                {"parallel", false}};
    }

    Json defaultTrainConfig() {
        return {{"logs", Json::array()},
                {"env",
                 {{"toy", false},
                  {"episodes", 20},
                  {"steps_per_episode", 100},
                  {"epsilon_start", 1.0},
                  {"epsilon_end", 0.1}}},
                {"synthetic", nullptr},
                {"roadnet", nullptr},
                {"flow", nullptr},
                {"sim", simConfigToJson(SimConfig{})},
                {"train", TrainConfig{}.toJson()},
                {"output", "critic_out"}};
    }

    int runCli(const std::vector<std::string> &args) {
        CLI::App app{"Traffic signal control simulator and agent toolkit", "tscctl"};
        app.require_subcommand(1);

        RunFlags runFlags;
        Overrides runOverrides;
        auto *run = app.add_subcommand("run", "Run one episode and write its log and metrics");
        addRunFlags(run, runFlags, runOverrides);

        RunFlags collectFlags;
        Overrides collectOverrides;
        bool resume = false;
        auto *collect = app.add_subcommand("collect", "Collect reasoning trajectories with an LLM backend");
        addRunFlags(collect, collectFlags, collectOverrides);
        collectOverrides.add(collect->add_option("--samples", collectFlags.samples, "Trajectories per switch step"),
                             "/controller/samples", collectFlags.samples);
        collect->add_flag("--resume", resume, "Replay the existing transcript, then continue live");

        std::string trainConfigPath, trainOut, trainSynthetic;
        std::vector<std::string> trainLogs;
        double gamma = 0.0, lr = 0.0;
        int steps = 0, episodes = 0;
        std::uint64_t trainSeed = 0;
        bool toy = false;
        Overrides trainOverrides;
        auto *train = app.add_subcommand("train-critic", "Train the action-value critic");
        train->add_option("--config", trainConfigPath, "JSON configuration file");
        trainOverrides.add(train->add_option("--log", trainLogs, "Episode logs for offline training"), "/logs",
                           trainLogs);
        trainOverrides.add(train->add_flag("--toy", toy, "Train online in the toy environment"), "/env/toy", toy);
        train->add_option("--synthetic", trainSynthetic, "Train online on a synthetic RxC grid");
        trainOverrides.add(train->add_option("--gamma", gamma, "Discount factor"), "/train/gamma", gamma);
        trainOverrides.add(train->add_option("--lr", lr, "Learning rate"), "/train/learning_rate", lr);
        trainOverrides.add(train->add_option("--steps", steps, "Gradient steps (offline)"), "/train/steps", steps);
        trainOverrides.add(train->add_option("--episodes", episodes, "Exploration episodes (online)"),
                           "/env/episodes", episodes);
        trainOverrides.add(train->add_option("--seed", trainSeed, "Seed"), "/train/seed", trainSeed);
        trainOverrides.add(train->add_option("--out", trainOut, "Output directory"), "/output", trainOut);

        std::string recordsPath, criticPath, outPath;
        auto *filter = app.add_subcommand("filter", "Keep trajectories whose action the critic ranks best");
        filter->add_option("--records", recordsPath, "Reasoning records (JSONL)")->required();
        filter->add_option("--critic", criticPath, "Critic weights")->required();
        filter->add_option("--out", outPath, "Filtered records (JSONL)")->required();

        std::string exportRecords, exportCritic, exportOut;
        auto *exportCmd = app.add_subcommand("export-ift", "Write an instruction fine-tuning dataset");
        exportCmd->add_option("--records", exportRecords, "Reasoning records (JSONL)")->required();
        exportCmd->add_option("--critic", exportCritic, "Filter with this critic first");
        exportCmd->add_option("--out", exportOut, "Dataset (JSONL)")->required();

        std::string batchesPath, rbcRecords, rbcCritic, logprobsPath, rbcOut;
        double beta = 1.0;
        auto *rbc = app.add_subcommand("rbc", "Evaluate the ranking loss and its gradients");
        rbc->add_option("--batches", batchesPath, "Ranking batches (JSONL)");
        rbc->add_option("--records", rbcRecords, "Reasoning records grouped by prompt");
        rbc->add_option("--critic", rbcCritic, "Critic weights for q scores");
        rbc->add_option("--logprobs", logprobsPath, "Token log-probabilities per trajectory (JSONL)");
        rbc->add_option("--beta", beta, "Boundary margin");
        rbc->add_option("--out", rbcOut, "Loss report (JSON)");

        std::vector<std::string> reportLogs;
        std::string csvPath, jsonPath;
        auto *report = app.add_subcommand("report", "Compare metrics of episode logs");
        report->add_option("logs", reportLogs, "Episode logs")->required();
        report->add_option("--csv", csvPath, "Comparison CSV");
        report->add_option("--json", jsonPath, "Reports as JSON");

        std::vector<const char *> argv;
        argv.push_back("tscctl");
        for (const auto &a : args)
            argv.push_back(a.c_str());
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::ParseError &e) {
            int code = app.exit(e);
            return code == 0 ? Ok : ConfigFailure;
        }

        try {
            if (run->parsed())
                return cmdRun(resolveRunFlags(runFlags, runOverrides));
            if (collect->parsed())
                return cmdCollect(resolveRunFlags(collectFlags, collectOverrides), resume);
            if (train->parsed()) {
                Json flags = trainOverrides.collect();
                if (!trainSynthetic.empty()) {
                    auto [rows, cols] = parseGridSpec(trainSynthetic);
                    flags["synthetic"] = {{"rows", rows}, {"cols", cols}};
                }
                return cmdTrainCritic(resolveConfig(defaultTrainConfig(), loadConfigFile(trainConfigPath), flags));
            }
            if (filter->parsed())
                return cmdFilter(recordsPath, criticPath, outPath);
            if (exportCmd->parsed())
                return cmdExport(exportRecords, exportCritic, exportOut);
            if (rbc->parsed())
                return cmdRbc(batchesPath, rbcRecords, rbcCritic, logprobsPath, beta, rbcOut);
            if (report->parsed())
                return cmdReport(reportLogs, csvPath, jsonPath);
        } catch (const IoError &e) {
            std::cerr << "error: " << e.what() << '\n';
            return IoFailure;
        } catch (const BackendError &e) {
            std::cerr << "error: " << e.what() << '\n';
            return BackendFailure;
        } catch (const DivergenceError &e) {
            std::cerr << "error: " << e.what() << '\n';
            return Divergence;
        } catch (const Error &e) {
            std::cerr << "error: " << e.what() << '\n';
            return ConfigFailure;
        } catch (const nlohmann::json::exception &e) {
            std::cerr << "error: configuration: " << e.what() << '\n';
            return ConfigFailure;
        } catch (const fs::filesystem_error &e) {
            std::cerr << "error: " << e.what() << '\n';
            return IoFailure;
        }
        return ConfigFailure;
    }

}
