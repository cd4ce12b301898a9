#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vtnav/env/grid.hpp"

namespace vtnav::eval {

struct MetricsError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct EpisodeRecord {
    std::string scene_id;
    int target_class = 0;
    env::AgentPose start;
    std::vector<env::Action> actions;
    bool success = false;
    int length = 0;                     // actions taken, Done included
    std::optional<int> optimal_length;  // empty when the target is unreachable
    double terminal_distance = 0.0;     // metres to the nearest target instance at the end

    bool operator==(const EpisodeRecord&) const = default;
};

// (1/N) sum of success flags; empty input is an error.
double success_rate(const std::vector<EpisodeRecord>& records);

struct SplResult {
    double spl = 0.0;
    std::size_t episodes = 0;  // records that entered the mean
    std::size_t excluded = 0;  // records without an optimal length
};

// Mean of S * L_opt / max(L, L_opt) over records with a resolved optimal length.
SplResult spl(const std::vector<EpisodeRecord>& records);

inline constexpr int kLongPathThreshold = 5;

struct Splits {
    std::vector<EpisodeRecord> all;
    std::vector<EpisodeRecord> long_paths;  // optimal length >= 5
};
Splits split_long(const std::vector<EpisodeRecord>& records);

struct SplitMetrics {
    double success_rate = 0.0;
    double spl = 0.0;
    std::size_t episodes = 0;
    std::size_t excluded = 0;
};

struct MetricsReport {
    SplitMetrics all;
    SplitMetrics long_paths;
    std::string agent;
    std::string checkpoint_hash;
    std::uint64_t seed = 0;
    std::vector<std::string> scenes;
};

// Empty splits report zero episodes and zero rates.
MetricsReport make_report(const std::vector<EpisodeRecord>& records);

std::string to_json_line(const EpisodeRecord& record);
EpisodeRecord record_from_json_line(const std::string& line);

std::string report_table(const MetricsReport& report);
std::string report_csv(const MetricsReport& report);
std::string report_json(const MetricsReport& report);

}  // namespace vtnav::eval
