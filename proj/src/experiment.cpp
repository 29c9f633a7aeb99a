#include "banktweak/experiment.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "banktweak/rng.hpp"

namespace banktweak {

namespace {

constexpr std::uint64_t kTagScenario = 0x53434eull;
constexpr std::uint64_t kTagPair = 0x5052ull;
constexpr std::uint64_t kTagFp = 0x4650ull;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

struct Cell {
    int rep;
    int attacker;
    int profile;
    int multiplier;
};

}  // namespace

void ExperimentSpec::validate() const {
    scenario.validate();
    extractor.validate();
    assoc.validate();
    budget.validate();
    if (repetitions < 1) throw std::invalid_argument("experiment: repetitions must be >= 1");
    if (attackers.empty()) throw std::invalid_argument("experiment: attacker list is empty");
    if (multipliers.empty()) throw std::invalid_argument("experiment: multiplier list is empty");
    if (profiles.empty()) throw std::invalid_argument("experiment: profile list is empty");
    for (const std::string& a : attackers)
        if (std::find(kKnownAttackers.begin(), kKnownAttackers.end(), a) == kKnownAttackers.end())
            throw std::invalid_argument("experiment: unknown attacker '" + a + "'");
    if (attack_start < 1 || attack_len < 1 ||
        attack_start + attack_len > scenario.n_frames)
        throw std::invalid_argument("experiment: attack window does not fit the scenario");
    const bool has_banktweak =
        std::find_if(attackers.begin(), attackers.end(), [](const std::string& a) {
            return a == "banktweak" || a == "banktweak_no_step2";
        }) != attackers.end();
    if (has_banktweak && attack_len != AttackPlan::kSpan)
        throw std::invalid_argument("experiment: banktweak window must span 5 frames");
}

std::uint64_t scenario_seed_for_rep(std::uint64_t master_seed, int rep) {
    return derive_seed(master_seed, {kTagScenario, static_cast<std::uint64_t>(rep)});
}

PredStream track_stream(const DetectionStream& stream, const AssociationConfig& cfg) {
    Tracker tracker(cfg);
    PredStream pred(stream.size());
    for (size_t f = 0; f < stream.size(); ++f) {
        const auto outputs = tracker.step(stream[f]);
        for (const TrackOutput& o : outputs) pred[f].emplace_back(o.id, o.bbox);
    }
    return pred;
}

namespace {

RunRow run_cell(const ExperimentSpec& spec, const Extractor& extractor, const Cell& cell) {
    const std::uint64_t scenario_seed = scenario_seed_for_rep(spec.master_seed, cell.rep);
    ScenarioConfig cfg = spec.scenario;
    cfg.seed = scenario_seed;
    const Scenario scenario = generate(cfg, extractor);
    const std::vector<RenderedFrame> frames = render_stream(scenario, extractor);
    const DetectionStream clean = detections_only(frames);

    const AttackWindow window{spec.attack_start, spec.attack_len};
    const std::string& attacker = spec.attackers[cell.attacker];

    DetectionStream stream;
    if (attacker == "clean") {
        stream = clean;
    } else if (attacker == "fn") {
        stream = run_fn_attack(clean, window);
    } else if (attacker == "fp") {
        stream = run_fp_attack(clean, window, spec.fp_k,
                               derive_seed(spec.master_seed,
                                           {kTagFp, static_cast<std::uint64_t>(cell.rep)}));
    } else if (attacker == "ff") {
        stream = run_ff_attack(clean, window, spec.ff);
    } else {
        AttackPlan plan;
        plan.start_frame = window.start;
        if (spec.pinned_pair) {
            plan.object_a = spec.pinned_pair->first;
            plan.object_b = spec.pinned_pair->second;
        } else {
            Rng rng(derive_seed(spec.master_seed, {kTagPair, static_cast<std::uint64_t>(cell.rep)}));
            plan.object_a = rng.uniform_int(cfg.n_objects);
            plan.object_b = rng.uniform_int(cfg.n_objects - 1);
            if (plan.object_b >= plan.object_a) ++plan.object_b;
        }
        BankTweakOptions options;
        options.budget = spec.budget;
        options.lambda_app = spec.assoc.lambda_app;
        options.step2 = attacker == "banktweak";
        stream = run_banktweak(frames, extractor, plan, options);
    }

    AssociationConfig assoc = spec.assoc;
    assoc.profile = spec.profiles[cell.profile];
    assoc.maha = spec.multipliers[cell.multiplier];

    const PredStream pred = track_stream(stream, assoc);
    std::set<int> attack_frames;
    for (int f = window.start; f < window.end(); ++f) attack_frames.insert(f);
    const EvalResult eval = evaluate_run(gt_stream(scenario), pred, stream, attack_frames);

    RunRow row;
    row.scenario_seed = scenario_seed;
    row.profile = assoc.profile == MatchProfile::kCascade ? "cascade" : "global";
    row.attacker = attacker;
    row.maha = assoc.maha.str();
    row.idf1 = eval.idf1;
    row.idsw = eval.idsw;
    row.rho_det = eval.rho_det;
    row.rho_id = eval.rho_id;
    row.frames_scored = eval.frames_scored;
    row.repetition = cell.rep;
    return row;
}

}  // namespace

ResultsTable run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    const Extractor extractor(spec.extractor);

    std::vector<Cell> cells;
    for (int rep = 0; rep < spec.repetitions; ++rep)
        for (size_t a = 0; a < spec.attackers.size(); ++a)
            for (size_t p = 0; p < spec.profiles.size(); ++p)
                for (size_t m = 0; m < spec.multipliers.size(); ++m)
                    cells.push_back(Cell{rep, static_cast<int>(a), static_cast<int>(p),
                                         static_cast<int>(m)});

    ResultsTable table;
    table.columns = ResultsTable::schema();
    table.rows.resize(cells.size());
    std::vector<std::string> errors(cells.size());

    const int workers = spec.workers > 0 ? spec.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(cells.size()); ++i) {
        try {
            table.rows[i] = run_cell(spec, extractor, cells[i]);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }

    for (size_t i = 0; i < cells.size(); ++i)
        if (!errors[i].empty())
            throw std::runtime_error("experiment: cell " + std::to_string(i) + " (" +
                                     spec.attackers[cells[i].attacker] + ", rep " +
                                     std::to_string(cells[i].rep) + ") failed: " + errors[i]);
    return table;
}

std::string to_csv(const ResultsTable& table) {
    std::string out;
    for (size_t c = 0; c < table.columns.size(); ++c) {
        out += table.columns[c];
        out += c + 1 < table.columns.size() ? ',' : '\n';
    }
    for (const RunRow& r : table.rows) {
        out += std::to_string(r.scenario_seed) + "," + r.profile + "," + r.attacker + "," + r.maha +
               "," + format_double(r.idf1) + "," + std::to_string(r.idsw) + "," +
               format_double(r.rho_det) + "," + format_double(r.rho_id) + "," +
               std::to_string(r.frames_scored) + "\n";
    }
    return out;
}

namespace {

struct CellKey {
    std::string attacker;
    std::string profile;
    std::string maha;
    bool operator<(const CellKey& o) const {
        return std::tie(attacker, profile, maha) < std::tie(o.attacker, o.profile, o.maha);
    }
};

struct CellAgg {
    double idf1 = 0.0;
    double idsw = 0.0;
    double rho_det = 0.0;
    double rho_id = 0.0;
    int n = 0;
};

std::map<CellKey, CellAgg> aggregate(const ResultsTable& table) {
    std::map<CellKey, CellAgg> agg;
    for (const RunRow& r : table.rows) {
        CellAgg& a = agg[CellKey{r.attacker, r.profile, r.maha}];
        a.idf1 += r.idf1;
        a.idsw += r.idsw;
        a.rho_det += r.rho_det;
        a.rho_id += r.rho_id;
        a.n += 1;
    }
    return agg;
}

}  // namespace

nlohmann::json summarize(const ResultsTable& table) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& [key, a] : aggregate(table)) {
        nlohmann::json c;
        c["attacker"] = key.attacker;
        c["profile"] = key.profile;
        c["maha_multiplier"] = key.maha;
        c["n"] = a.n;
        c["idf1_mean"] = a.idf1 / a.n;
        c["idsw_mean"] = a.idsw / a.n;
        c["rho_det_mean"] = a.rho_det / a.n;
        c["rho_id_mean"] = a.rho_id / a.n;
        cells.push_back(std::move(c));
    }
    nlohmann::json j;
    j["cells"] = std::move(cells);
    return j;
}

nlohmann::json emit_plotdata(const ResultsTable& table, const std::string& figure) {
    if (table.rows.empty()) throw std::invalid_argument("plotdata: results table is empty");

    std::vector<std::string> required = {"attacker", "maha_multiplier"};
    if (figure == "threshold_sweep")
        required.push_back("idf1");
    else if (figure == "practicality") {
        required.push_back("rho_det");
        required.push_back("rho_id");
    } else {
        throw std::invalid_argument("plotdata: unknown figure '" + figure + "'");
    }
    for (const std::string& col : required)
        if (std::find(table.columns.begin(), table.columns.end(), col) == table.columns.end())
            throw std::invalid_argument("plotdata: results table lacks column '" + col + "'");

    // Axis values in first-appearance order.
    std::vector<std::string> axis;
    for (const RunRow& r : table.rows)
        if (std::find(axis.begin(), axis.end(), r.maha) == axis.end()) axis.push_back(r.maha);
    std::vector<std::string> attackers;
    for (const RunRow& r : table.rows)
        if (std::find(attackers.begin(), attackers.end(), r.attacker) == attackers.end())
            attackers.push_back(r.attacker);

    const auto agg = aggregate(table);
    auto mean_of = [&](const std::string& attacker, const std::string& maha,
                       auto member) -> std::optional<double> {
        double sum = 0.0;
        int n = 0;
        for (const auto& [key, a] : agg) {
            if (key.attacker != attacker || key.maha != maha) continue;
            sum += member(a) * a.n;
            n += a.n;
        }
        if (n == 0) return std::nullopt;
        return sum / n;
    };

    nlohmann::json j;
    j["figure"] = figure;
    j["x"] = axis;
    nlohmann::json series = nlohmann::json::array();
    for (const std::string& attacker : attackers) {
        nlohmann::json s;
        s["attacker"] = attacker;
        auto fill = [&](const char* name, auto member) {
            nlohmann::json ys = nlohmann::json::array();
            for (const std::string& m : axis) {
                const auto v = mean_of(attacker, m, member);
                ys.push_back(v ? nlohmann::json(*v) : nlohmann::json());
            }
            s[name] = std::move(ys);
        };
        if (figure == "threshold_sweep") {
            fill("idf1", [](const CellAgg& a) { return a.idf1 / a.n; });
        } else {
            fill("rho_det", [](const CellAgg& a) { return a.rho_det / a.n; });
            fill("rho_id", [](const CellAgg& a) { return a.rho_id / a.n; });
        }
        series.push_back(std::move(s));
    }
    j["series"] = std::move(series);
    return j;
}

void write_outputs(const ResultsTable& table, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream csv(out_dir / "results.csv", std::ios::binary);
        if (!csv) throw std::runtime_error("experiment: cannot write results.csv");
        csv << to_csv(table);
    }
    {
        std::ofstream js(out_dir / "summary.json");
        js << summarize(table).dump(2) << "\n";
    }
    for (const std::string figure : {"threshold_sweep", "practicality"}) {
        std::ofstream js(out_dir / ("plot_" + figure + ".json"));
        js << emit_plotdata(table, figure).dump(2) << "\n";
    }
}

}  // namespace banktweak
