#include "tsc/critic.h"
#include "tsc/errors.h"
#include "tsc/util.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace tsc {

    namespace {

        constexpr std::array<std::array<int, 2>, 3> kShapes = {
            {{kFeatureDim, kHiddenWidth}, {kHiddenWidth, kHiddenWidth}, {kHiddenWidth, kPhaseCount}}};

        DenseLayer zeroLayer(int in, int out) {
            return {in, out, std::vector<double>(static_cast<std::size_t>(in * out), 0.0),
                    std::vector<double>(static_cast<std::size_t>(out), 0.0)};
        }

        // z = W x + b
        void affine(const DenseLayer &layer, const double *x, double *z) {
            for (int o = 0; o < layer.out; o++) {
                double sum = layer.bias[o];
                const double *row = &layer.weights[static_cast<std::size_t>(o * layer.in)];
                for (int i = 0; i < layer.in; i++)
                    sum += row[i] * x[i];
                z[o] = sum;
            }
        }

        struct Activations {
            std::array<double, kHiddenWidth> z1, h1, z2, h2;
            ActionValues q;
        };

        void forwardFull(const CriticParams &p, const double *x, Activations &a) {
            affine(p.layers[0], x, a.z1.data());
            for (int i = 0; i < kHiddenWidth; i++)
                a.h1[i] = std::max(0.0, a.z1[i]);
            affine(p.layers[1], a.h1.data(), a.z2.data());
            for (int i = 0; i < kHiddenWidth; i++)
                a.h2[i] = std::max(0.0, a.z2[i]);
            affine(p.layers[2], a.h2.data(), a.q.data());
        }

        // Accumulates dLoss/dparams given dLoss/dq into `g`.
        void backward(const CriticParams &p, const double *x, const Activations &a, const ActionValues &dq,
                      CriticParams &g) {
            std::array<double, kHiddenWidth> dh2{}, dz2{}, dh1{}, dz1{};
            const DenseLayer &l3 = p.layers[2];
            for (int o = 0; o < kPhaseCount; o++) {
                if (dq[o] == 0.0)
                    continue;
                g.layers[2].bias[o] += dq[o];
                for (int i = 0; i < kHiddenWidth; i++) {
                    g.layers[2].weights[o * kHiddenWidth + i] += dq[o] * a.h2[i];
                    dh2[i] += l3.weights[o * kHiddenWidth + i] * dq[o];
                }
            }
            for (int i = 0; i < kHiddenWidth; i++)
                dz2[i] = a.z2[i] > 0.0 ? dh2[i] : 0.0;
            const DenseLayer &l2 = p.layers[1];
            for (int o = 0; o < kHiddenWidth; o++) {
                if (dz2[o] == 0.0)
                    continue;
                g.layers[1].bias[o] += dz2[o];
                for (int i = 0; i < kHiddenWidth; i++) {
                    g.layers[1].weights[o * kHiddenWidth + i] += dz2[o] * a.h1[i];
                    dh1[i] += l2.weights[o * kHiddenWidth + i] * dz2[o];
                }
            }
            for (int i = 0; i < kHiddenWidth; i++)
                dz1[i] = a.z1[i] > 0.0 ? dh1[i] : 0.0;
            for (int o = 0; o < kHiddenWidth; o++) {
                if (dz1[o] == 0.0)
                    continue;
                g.layers[0].bias[o] += dz1[o];
                for (int i = 0; i < kFeatureDim; i++)
                    g.layers[0].weights[o * kFeatureDim + i] += dz1[o] * x[i];
            }
        }

    }

    Features featurize(const IntersectionObservation &obs) {
        if (obs.segmentCount() != 3)
            throw ShapeError("critic features need three segments per lane, got " +
                             std::to_string(obs.segmentCount()));
        Features f{};
        for (int p = 0; p < kPhaseCount; p++) {
            const PhaseObservation &po = obs.phases[p];
            f[p * 4] = po.queuedTotal();
            for (int s = 1; s <= 3; s++)
                f[p * 4 + s] = po.segmentTotal(s);
        }
        return f;
    }

    CriticParams CriticParams::zeros() {
        CriticParams p;
        for (int l = 0; l < 3; l++)
            p.layers[l] = zeroLayer(kShapes[l][0], kShapes[l][1]);
        return p;
    }

    CriticParams CriticParams::randomInit(std::uint64_t seed) {
        CriticParams p = zeros();
        std::mt19937_64 rng(seed);
        for (auto &layer : p.layers) {
            double bound = std::sqrt(6.0 / layer.in);
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (auto &w : layer.weights)
                w = dist(rng);
        }
        return p;
    }

    std::size_t CriticParams::parameterCount() const {
        std::size_t n = 0;
        for (const auto &l : layers)
            n += l.weights.size() + l.bias.size();
        return n;
    }

    std::vector<double> CriticParams::flatten() const {
        std::vector<double> out;
        out.reserve(parameterCount());
        for (const auto &l : layers) {
            out.insert(out.end(), l.weights.begin(), l.weights.end());
            out.insert(out.end(), l.bias.begin(), l.bias.end());
        }
        return out;
    }

    void CriticParams::assign(std::span<const double> values) {
        if (values.size() != parameterCount())
            throw ShapeError("expected " + std::to_string(parameterCount()) + " parameters, got " +
                             std::to_string(values.size()));
        std::size_t k = 0;
        for (auto &l : layers) {
            for (auto &w : l.weights)
                w = values[k++];
            for (auto &b : l.bias)
                b = values[k++];
        }
    }

    void CriticParams::validate() const {
        for (int l = 0; l < 3; l++) {
            const DenseLayer &layer = layers[l];
            if (layer.in != kShapes[l][0] || layer.out != kShapes[l][1] ||
                layer.weights.size() != static_cast<std::size_t>(layer.in * layer.out) ||
                layer.bias.size() != static_cast<std::size_t>(layer.out))
                throw ShapeError("critic layer " + std::to_string(l) + " has shape " + std::to_string(layer.in) +
                                 "x" + std::to_string(layer.out) + ", expected " +
                                 std::to_string(kShapes[l][0]) + "x" + std::to_string(kShapes[l][1]));
        }
    }

    bool CriticParams::allFinite() const {
        for (const auto &l : layers) {
            for (double w : l.weights)
                if (!std::isfinite(w))
                    return false;
            for (double b : l.bias)
                if (!std::isfinite(b))
                    return false;
        }
        return true;
    }

    ActionValues forward(const CriticParams &params, std::span<const double> features) {
        if (features.size() != static_cast<std::size_t>(kFeatureDim))
            throw ShapeError("critic input must have " + std::to_string(kFeatureDim) + " features, got " +
                             std::to_string(features.size()));
        params.validate();
        Activations a;
        forwardFull(params, features.data(), a);
        return a.q;
    }

    double score(const CriticParams &params, const Features &features, PhaseId action) {
        return forward(params, features)[phaseIndex(action)];
    }

    PhaseId greedyAction(const ActionValues &values) {
        int best = 0;
        for (int i = 1; i < kPhaseCount; i++)
            if (values[i] > values[best])
                best = i;
        return kPhases[best];
    }

    LossAndGradient tdLoss(const CriticParams &params, const CriticParams &target,
                           std::span<const Transition> batch, double gamma) {
        if (batch.empty())
            throw ShapeError("TD loss needs a non-empty batch");
        params.validate();
        target.validate();
        LossAndGradient out{0.0, CriticParams::zeros()};
        const double n = static_cast<double>(batch.size());
        Activations a, next;
        for (const Transition &t : batch) {
            if (t.action < 0 || t.action >= kPhaseCount)
                throw InvalidPhase("transition action " + std::to_string(t.action) + " out of range");
            double y = t.reward;
            if (!t.terminal) {
                forwardFull(target, t.next.data(), next);
                y += gamma * *std::max_element(next.q.begin(), next.q.end());
            }
            forwardFull(params, t.obs.data(), a);
            double delta = a.q[t.action] - y;
            out.loss += delta * delta / n;
            ActionValues dq{};
            dq[t.action] = 2.0 * delta / n;
            backward(params, t.obs.data(), a, dq, out.gradient);
        }
        return out;
    }

    Json criticToJson(const CriticParams &params) {
        Json layers = Json::array();
        for (const auto &l : params.layers)
            layers.push_back({{"in", l.in}, {"out", l.out}, {"weights", l.weights}, {"bias", l.bias}});
        return {{"architecture", "mlp-relu"},
                {"input_dim", kFeatureDim},
                {"hidden", {kHiddenWidth, kHiddenWidth}},
                {"output_dim", kPhaseCount},
                {"layers", layers}};
    }

    CriticParams criticFromJson(const Json &j) {
        const std::string where = "critic weights";
        const Json &layers = requireField(j, "layers", where);
        if (!layers.is_array() || layers.size() != 3)
            throw ShapeError(where + ": expected three layers");
        CriticParams p;
        for (int l = 0; l < 3; l++) {
            p.layers[l].in = requireAs<int>(layers[l], "in", where);
            p.layers[l].out = requireAs<int>(layers[l], "out", where);
            p.layers[l].weights = requireAs<std::vector<double>>(layers[l], "weights", where);
            p.layers[l].bias = requireAs<std::vector<double>>(layers[l], "bias", where);
        }
        p.validate();
        return p;
    }

    void saveCritic(const CriticParams &params, const std::filesystem::path &path) {
        writeFile(path, criticToJson(params).dump(1) + "\n");
    }

    CriticParams loadCritic(const std::filesystem::path &path) {
        try {
            return criticFromJson(Json::parse(readFile(path)));
        } catch (const nlohmann::json::parse_error &) {
            throw ParseError(path.string() + ": malformed JSON");
        }
    }

    std::string criticHash(const CriticParams &params) {
        return sha256Hex(criticToJson(params).dump());
    }

    std::string lossCurveCsv(const std::vector<double> &losses) {
        std::ostringstream out;
        out << "step,loss\n" << std::setprecision(17);
        for (std::size_t i = 0; i < losses.size(); i++)
            out << (i + 1) << ',' << losses[i] << '\n';
        return out.str();
    }

}
