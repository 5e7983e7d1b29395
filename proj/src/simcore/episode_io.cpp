#include "tsc/episode.h"
#include "tsc/errors.h"
#include "tsc/json_io.h"
#include "tsc/util.h"

#include <sstream>

namespace tsc {

    const Json &requireField(const Json &obj, const char *key, const std::string &where) {
        if (!obj.is_object())
            throw ParseError(where + ": expected an object");
        auto it = obj.find(key);
        if (it == obj.end())
            throw ParseError(where + ": missing \"" + key + "\"");
        return *it;
    }

    template <typename T>
    T requireAs(const Json &obj, const char *key, const std::string &where) {
        try {
            return requireField(obj, key, where).get<T>();
        } catch (const nlohmann::json::exception &) {
            throw ParseError(where + ": \"" + key + "\" has the wrong type");
        }
    }

    template double requireAs<double>(const Json &, const char *, const std::string &);
    template int requireAs<int>(const Json &, const char *, const std::string &);
    template bool requireAs<bool>(const Json &, const char *, const std::string &);
    template std::string requireAs<std::string>(const Json &, const char *, const std::string &);
    template std::vector<double> requireAs<std::vector<double>>(const Json &, const char *, const std::string &);
    template std::vector<int> requireAs<std::vector<int>>(const Json &, const char *, const std::string &);
    template std::vector<std::string> requireAs<std::vector<std::string>>(const Json &, const char *,
                                                                          const std::string &);

    PhaseId phaseFromJson(const Json &j, const std::string &where) {
        if (!j.is_string())
            throw ParseError(where + ": phase must be a string");
        auto p = phaseFromString(j.get<std::string>());
        if (!p)
            throw ParseError(where + ": unknown phase " + j.get<std::string>());
        return *p;
    }

    namespace {

        Approach approachFromString(const std::string &s, const std::string &where) {
            for (Approach a : {Approach::North, Approach::South, Approach::East, Approach::West})
                if (toString(a) == s)
                    return a;
            throw ParseError(where + ": unknown approach " + s);
        }

    }

    Json toJson(const IntersectionObservation &obs) {
        Json phases = Json::array();
        for (const auto &p : obs.phases) {
            Json lanes = Json::array();
            for (int k = 0; k < 2; k++) {
                lanes.push_back({{"approach", toString(p.approaches[k])},
                                 {"lane", p.lanes[k].laneId},
                                 {"queued", p.lanes[k].queued},
                                 {"approaching", p.lanes[k].approaching}});
            }
            phases.push_back({{"phase", toString(p.phase)},
                              {"lanes", lanes},
                              {"downstream_queued", p.downstreamQueued}});
        }
        return {{"intersection", obs.intersection}, {"time", obs.time}, {"phases", phases}};
    }

    IntersectionObservation observationFromJson(const Json &j) {
        const std::string where = "observation";
        IntersectionObservation obs;
        obs.intersection = requireAs<std::string>(j, "intersection", where);
        obs.time = requireAs<double>(j, "time", where);
        const Json &phases = requireField(j, "phases", where);
        if (!phases.is_array() || phases.size() != kPhaseCount)
            throw ParseError(where + ": expected four phases");
        for (int i = 0; i < kPhaseCount; i++) {
            const Json &pj = phases[i];
            PhaseObservation &po = obs.phases[i];
            po.phase = phaseFromJson(requireField(pj, "phase", where), where);
            if (po.phase != kPhases[i])
                throw ParseError(where + ": phases out of order");
            po.downstreamQueued = requireAs<int>(pj, "downstream_queued", where);
            const Json &lanes = requireField(pj, "lanes", where);
            if (!lanes.is_array() || lanes.size() != 2)
                throw ParseError(where + ": expected two lanes per phase");
            for (int k = 0; k < 2; k++) {
                po.approaches[k] = approachFromString(requireAs<std::string>(lanes[k], "approach", where), where);
                po.lanes[k].laneId = requireAs<std::string>(lanes[k], "lane", where);
                po.lanes[k].queued = requireAs<int>(lanes[k], "queued", where);
                po.lanes[k].approaching = requireAs<std::vector<int>>(lanes[k], "approaching", where);
            }
        }
        return obs;
    }

    std::string serializeEpisodeLog(const EpisodeLog &log) {
        std::ostringstream out;
        out << Json{{"type", "header"},
                    {"controller", log.controller},
                    {"episode_length", log.episodeLength}}
                   .dump()
            << '\n';
        for (const auto &t : log.ticks)
            out << Json{{"type", "tick"}, {"t", t.time}, {"queued", t.queued}, {"deferred", t.deferred}}.dump()
                << '\n';
        for (const auto &s : log.switches)
            out << Json{{"type", "switch"},
                        {"t", s.time},
                        {"intersection", s.intersection},
                        {"phase", toString(s.phase)},
                        {"observation", toJson(s.observation)}}
                       .dump()
                << '\n';
        for (const auto &v : log.vehicles) {
            Json waits = Json::array();
            for (const auto &[inter, w] : v.intersectionWaits)
                waits.push_back({{"intersection", inter}, {"wait", w}});
            out << Json{{"type", "vehicle"},
                        {"id", v.id},
                        {"spawn", v.spawnTime},
                        {"finish", v.finishTime ? Json(*v.finishTime) : Json(nullptr)},
                        {"wait", v.wait},
                        {"intersection_waits", waits}}
                       .dump()
                << '\n';
        }
        out << Json{{"type", "end"}, {"deferral_events", log.deferralEvents}}.dump() << '\n';
        return out.str();
    }

    EpisodeLog parseEpisodeLog(std::string_view text) {
        EpisodeLog log;
        std::istringstream in{std::string(text)};
        std::string line;
        std::size_t lineNo = 0;
        bool sawHeader = false;
        bool sawEnd = false;
        while (std::getline(in, line)) {
            lineNo++;
            if (line.empty())
                continue;
            const std::string where = "episode log line " + std::to_string(lineNo);
            Json j;
            try {
                j = Json::parse(line);
            } catch (const nlohmann::json::parse_error &) {
                throw ParseError(where + ": malformed JSON");
            }
            auto type = requireAs<std::string>(j, "type", where);
            if (type == "header") {
                log.controller = requireAs<std::string>(j, "controller", where);
                log.episodeLength = requireAs<double>(j, "episode_length", where);
                sawHeader = true;
            } else if (type == "tick") {
                log.ticks.push_back({requireAs<double>(j, "t", where), requireAs<int>(j, "queued", where),
                                     requireAs<int>(j, "deferred", where)});
            } else if (type == "switch") {
                SwitchRecord s;
                s.time = requireAs<double>(j, "t", where);
                s.intersection = requireAs<std::string>(j, "intersection", where);
                s.phase = phaseFromJson(requireField(j, "phase", where), where);
                try {
                    s.observation = observationFromJson(requireField(j, "observation", where));
                } catch (const ParseError &e) {
                    throw ParseError(where + ": " + e.what());
                }
                log.switches.push_back(std::move(s));
            } else if (type == "vehicle") {
                VehicleRecord v;
                v.id = requireAs<std::string>(j, "id", where);
                v.spawnTime = requireAs<double>(j, "spawn", where);
                const Json &fin = requireField(j, "finish", where);
                if (!fin.is_null())
                    v.finishTime = requireAs<double>(j, "finish", where);
                v.wait = requireAs<double>(j, "wait", where);
                for (const auto &w : requireField(j, "intersection_waits", where))
                    v.intersectionWaits.emplace_back(requireAs<std::string>(w, "intersection", where),
                                                     requireAs<double>(w, "wait", where));
                log.vehicles.push_back(std::move(v));
            } else if (type == "end") {
                log.deferralEvents = requireField(j, "deferral_events", where).get<std::size_t>();
                sawEnd = true;
            } else {
                throw ParseError(where + ": unknown record type " + type);
            }
        }
        if (!sawHeader || !sawEnd)
            throw ParseError("episode log is truncated (missing header or end record)");
        return log;
    }

    void saveEpisodeLog(const EpisodeLog &log, const std::filesystem::path &path) {
        writeFile(path, serializeEpisodeLog(log));
    }

    EpisodeLog loadEpisodeLog(const std::filesystem::path &path) {
        return parseEpisodeLog(readFile(path));
    }

    std::string episodeLogHash(const EpisodeLog &log) {
        return sha256Hex(serializeEpisodeLog(log));
    }

}
