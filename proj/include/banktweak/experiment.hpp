#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "banktweak/attack.hpp"
#include "banktweak/metrics.hpp"
#include "banktweak/tracker.hpp"

namespace banktweak {

inline const std::vector<std::string> kKnownAttackers = {
    "clean", "fn", "fp", "ff", "banktweak", "banktweak_no_step2"};

struct ExperimentSpec {
    ScenarioConfig scenario;
    ExtractorConfig extractor;
    AssociationConfig assoc;
    Budget budget;

    std::vector<std::string> attackers{"clean"};
    std::vector<MatchProfile> profiles{MatchProfile::kGlobal};
    std::vector<MahaMultiplier> multipliers{MahaMultiplier{1.0, false}};
    int repetitions = 20;
    std::uint64_t master_seed = 1;
    int workers = 0;  // 0 = all available
    std::optional<std::pair<int, int>> pinned_pair;
    int attack_start = 15;
    int attack_len = 5;
    int fp_k = 3;
    FfOptions ff;

    void validate() const;
};

struct RunRow {
    std::uint64_t scenario_seed = 0;
    std::string profile;
    std::string attacker;
    std::string maha;
    double idf1 = 0.0;
    int idsw = 0;
    double rho_det = 0.0;
    double rho_id = 0.0;
    int frames_scored = 0;
    int repetition = 0;  // bookkeeping, not part of the CSV schema
};

struct ResultsTable {
    std::vector<std::string> columns;
    std::vector<RunRow> rows;

    static std::vector<std::string> schema() {
        return {"scenario_seed", "profile",  "attacker", "maha_multiplier", "idf1",
                "idsw",          "rho_det",  "rho_id",   "frames_scored"};
    }
};

// One tracker pass over a detection stream; returns the per-frame outputs.
PredStream track_stream(const DetectionStream& stream, const AssociationConfig& cfg);

// Scenario seed used for a repetition; pure in (master seed, repetition).
std::uint64_t scenario_seed_for_rep(std::uint64_t master_seed, int rep);

// Runs every (attacker, profile, multiplier, repetition) cell. Scenarios
// depend only on (master seed, repetition), so attackers are compared on
// identical worlds. Cells run in parallel; row order is deterministic.
ResultsTable run_experiment(const ExperimentSpec& spec);

std::string to_csv(const ResultsTable& table);
nlohmann::json summarize(const ResultsTable& table);

// figure is "threshold_sweep" (mean IDF1 per multiplier, one series per
// attacker) or "practicality" (mean rho ratios). Throws when the table
// lacks a required column, naming it.
nlohmann::json emit_plotdata(const ResultsTable& table, const std::string& figure);

// results.csv, summary.json and both plot_<figure>.json files.
void write_outputs(const ResultsTable& table, const std::filesystem::path& out_dir);

}  // namespace banktweak
