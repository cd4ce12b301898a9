#include "vtnav/eval/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace vtnav::eval {

double success_rate(const std::vector<EpisodeRecord>& records) {
    if (records.empty()) throw MetricsError("success rate of an empty record set");
    std::size_t hits = 0;
    for (const auto& r : records) hits += r.success ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(records.size());
}

SplResult spl(const std::vector<EpisodeRecord>& records) {
    SplResult out;
    double total = 0.0;
    for (const auto& r : records) {
        if (!r.optimal_length) {
            ++out.excluded;
            continue;
        }
        ++out.episodes;
        if (!r.success) continue;
        const double opt = *r.optimal_length;
        total += opt / std::max(static_cast<double>(r.length), opt);
    }
    if (out.episodes > 0) out.spl = total / static_cast<double>(out.episodes);
    return out;
}

Splits split_long(const std::vector<EpisodeRecord>& records) {
    Splits s;
    s.all = records;
    for (const auto& r : records)
        if (r.optimal_length && *r.optimal_length >= kLongPathThreshold) s.long_paths.push_back(r);
    return s;
}

namespace {

SplitMetrics split_metrics(const std::vector<EpisodeRecord>& records) {
    SplitMetrics m;
    m.episodes = records.size();
    if (records.empty()) return m;
    m.success_rate = success_rate(records);
    const auto s = spl(records);
    m.spl = s.spl;
    m.excluded = s.excluded;
    return m;
}

}  // namespace

MetricsReport make_report(const std::vector<EpisodeRecord>& records) {
    const auto splits = split_long(records);
    MetricsReport r;
    r.all = split_metrics(splits.all);
    r.long_paths = split_metrics(splits.long_paths);
    return r;
}

std::string to_json_line(const EpisodeRecord& r) {
    std::vector<std::string> actions;
    for (auto a : r.actions) actions.emplace_back(env::to_string(a));
    nlohmann::ordered_json j = {{"scene", r.scene_id},
                                {"target", r.target_class},
                                {"start", {r.start.x, r.start.y, r.start.heading, r.start.pitch}},
                                {"actions", actions},
                                {"success", r.success},
                                {"length", r.length},
                                {"optimal_length", r.optimal_length ? nlohmann::ordered_json(*r.optimal_length) : nullptr},
                                {"terminal_distance", r.terminal_distance}};
    return j.dump();
}

EpisodeRecord record_from_json_line(const std::string& line) {
    try {
        const auto j = nlohmann::json::parse(line);
        EpisodeRecord r;
        r.scene_id = j.at("scene").get<std::string>();
        r.target_class = j.at("target").get<int>();
        const auto s = j.at("start").get<std::vector<int>>();
        if (s.size() != 4) throw MetricsError("start pose needs 4 values");
        r.start = {s[0], s[1], s[2], s[3]};
        for (const auto& a : j.at("actions")) {
            const auto parsed = env::parse_action(a.get<std::string>());
            if (!parsed) throw MetricsError("unknown action " + a.dump());
            r.actions.push_back(*parsed);
        }
        r.success = j.at("success").get<bool>();
        r.length = j.at("length").get<int>();
        if (!j.at("optimal_length").is_null()) r.optimal_length = j.at("optimal_length").get<int>();
        r.terminal_distance = j.at("terminal_distance").get<double>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw MetricsError(std::string("malformed episode record: ") + e.what());
    }
}

std::string report_table(const MetricsReport& r) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << "agent " << r.agent << "  seed " << r.seed;
    if (!r.checkpoint_hash.empty()) out << "  checkpoint " << r.checkpoint_hash;
    out << "\n";
    out << "split   episodes  success  spl     excluded\n";
    auto row = [&](const char* name, const SplitMetrics& m) {
        out << std::left << std::setw(8) << name << std::right << std::setw(8) << m.episodes << "  " << std::setw(7)
            << m.success_rate << "  " << std::setw(6) << m.spl << "  " << std::setw(8) << m.excluded << "\n";
    };
    row("ALL", r.all);
    row("L>=5", r.long_paths);
    return out.str();
}

std::string report_csv(const MetricsReport& r) {
    std::ostringstream out;
    out.precision(9);
    out << "split,episodes,success_rate,spl,excluded\n";
    out << "ALL," << r.all.episodes << ',' << r.all.success_rate << ',' << r.all.spl << ',' << r.all.excluded << "\n";
    out << "L>=5," << r.long_paths.episodes << ',' << r.long_paths.success_rate << ',' << r.long_paths.spl << ','
        << r.long_paths.excluded << "\n";
    return out.str();
}

std::string report_json(const MetricsReport& r) {
    auto split = [](const SplitMetrics& m) {
        return nlohmann::ordered_json{
            {"episodes", m.episodes}, {"success_rate", m.success_rate}, {"spl", m.spl}, {"excluded", m.excluded}};
    };
    const nlohmann::ordered_json j = {{"agent", r.agent},         {"seed", r.seed},
                                      {"checkpoint", r.checkpoint_hash}, {"scenes", r.scenes},
                                      {"ALL", split(r.all)},       {"L>=5", split(r.long_paths)}};
    return j.dump(2) + "\n";
}

}  // namespace vtnav::eval
