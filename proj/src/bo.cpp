#include "ladder/bo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <unordered_set>

#include <json.hpp>

#include "ladder/errors.hpp"

namespace ladder {

std::string to_string(Method m)
{
    return m == Method::Ladder ? "ladder" : "naive-lsbo";
}

Method parse_method(const std::string& text)
{
    if (text == "ladder") return Method::Ladder;
    if (text == "naive-lsbo") return Method::NaiveLsbo;
    throw ConfigError("method: expected 'ladder' or 'naive-lsbo', got '" + text + "'");
}

void BOConfig::validate() const
{
    if (iterations < 0) throw ConfigError("iterations must be >= 0");
    if (init_count < 2) throw ConfigError("init_count must be >= 2");
    if (!(noise_floor > 0.0)) throw ConfigError("noise_floor must be positive");
    if (gp_restarts < 1 || gp_evals_per_restart < 1) throw ConfigError("GP fitting budget must be positive");
    cma.validate();
    structured.string.validate();
}

std::vector<EvaluatedTriple> init_dataset(const LatentModel& latent, const Objective& f, int init_count,
                                          std::uint64_t seed)
{
    const auto db = latent.database();
    if (init_count < 1 || static_cast<std::size_t>(init_count) > db.size())
        throw ConfigError("init_count " + std::to_string(init_count) + " exceeds database size " +
                          std::to_string(db.size()));
    std::vector<std::size_t> idx(db.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates: the first init_count slots form the sample.
    for (std::size_t i = 0; i < static_cast<std::size_t>(init_count); ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    std::vector<EvaluatedTriple> out;
    out.reserve(static_cast<std::size_t>(init_count));
    for (std::size_t i = 0; i < static_cast<std::size_t>(init_count); ++i) {
        const Structure& x = db[idx[i]];
        out.push_back({latent.encode(x), x, f(x)});
    }
    return out;
}

namespace {

constexpr std::uint64_t kInitStream = 0x1417;

double elapsed_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

BORunRecord run(const BOConfig& cfg, const LatentModel& latent, const Objective& f, const EntrySink& sink,
                const BORunRecord* resume)
{
    cfg.validate();
    BORunRecord record;
    record.init_count = cfg.init_count;
    std::vector<EvaluatedTriple> data;
    std::unordered_set<Structure, StructureHash> evaluated;
    double best = std::numeric_limits<double>::infinity();

    auto append = [&](RunEntry entry) {
        best = std::min(best, entry.y);
        entry.best = best;
        data.push_back({entry.z, entry.x, entry.y});
        evaluated.insert(entry.x);
        record.entries.push_back(entry);
        if (sink) sink(record.entries.back());
    };

    int first_iteration = 1;
    if (resume && !resume->entries.empty()) {
        if (resume->init_count != cfg.init_count) throw ConfigError("resume: init_count differs from the record");
        for (const auto& e : resume->entries) append(e);
        first_iteration = resume->entries.back().t + 1;
    } else {
        const auto start = std::chrono::steady_clock::now();
        for (auto& triple : init_dataset(latent, f, cfg.init_count, mix_seed(cfg.seed, kInitStream))) {
            RunEntry e;
            e.t = 0;
            e.z = std::move(triple.z);
            e.x = std::move(triple.x);
            e.y = triple.y;
            e.seconds = cfg.record_timing ? elapsed_since(start) : 0.0;
            append(std::move(e));
        }
    }

    CmaConfig cma = cfg.cma;
    if (!cma.bounds) cma.bounds = latent_bounds(latent);
    const AcquisitionOptions acq{cma, cfg.duplicate_penalty};

    GPConfig gp_cfg;
    gp_cfg.mode = cfg.method == Method::Ladder ? KernelMode::StructureCoupled : KernelMode::LatentOnly;
    gp_cfg.structured = cfg.structured;
    gp_cfg.noise_floor = cfg.noise_floor;
    gp_cfg.restarts = cfg.gp_restarts;
    gp_cfg.evals_per_restart = cfg.gp_evals_per_restart;
    gp_cfg.tune_structured = cfg.tune_structured;

    for (int t = first_iteration; t <= cfg.iterations; ++t) {
        const auto start = std::chrono::steady_clock::now();
        try {
            const std::uint64_t iteration_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(t));
            gp_cfg.seed = mix_seed(iteration_seed, 1);
            const GPModel model = fit_hyperparams(data, gp_cfg);
            gp_cfg.warm_start = model.hyperparams();

            std::mt19937_64 rng(mix_seed(iteration_seed, 2));
            AcquisitionResult chosen;
            bool duplicate = false;
            try {
                chosen = optimize_acquisition(model, latent, best, evaluated, acq, rng);
            } catch (const AllCandidatesDuplicate& e) {
                chosen = e.fallback();
                duplicate = true;
            }

            RunEntry e;
            e.t = t;
            e.z = chosen.z;
            e.x = latent.decode(chosen.z);
            e.y = f(e.x);
            e.duplicate = duplicate;
            e.jitter = model.coupled_state() ? model.coupled_state()->jitter_used() : 0.0;
            e.seconds = cfg.record_timing ? elapsed_since(start) : 0.0;
            append(std::move(e));
        } catch (const RunAborted&) {
            throw;
        } catch (const std::exception& ex) {
            throw RunAborted("iteration " + std::to_string(t) + ": " + ex.what(), record);
        }
    }
    return record;
}

std::pair<Structure, double> incumbent(const BORunRecord& record)
{
    if (record.entries.empty()) throw EmptyRecord("incumbent: empty record");
    const RunEntry* best = &record.entries.front();
    for (const auto& e : record.entries)
        if (e.y < best->y) best = &e;
    return {best->x, best->y};
}

std::string record_line(const RunEntry& entry)
{
    nlohmann::ordered_json j;
    j["t"] = entry.t;
    j["z"] = std::vector<double>(entry.z.data(), entry.z.data() + entry.z.size());
    j["x"] = to_string(entry.x);
    j["y"] = entry.y;
    j["best"] = entry.best;
    j["seconds"] = entry.seconds;
    return j.dump();
}

RunEntry parse_record_line(const std::string& line)
{
    const auto j = nlohmann::json::parse(line);
    RunEntry e;
    e.t = j.at("t").get<int>();
    const auto z = j.at("z").get<std::vector<double>>();
    e.z = Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
    e.x = tokenize(j.at("x").get<std::string>());
    e.y = j.at("y").get<double>();
    e.best = j.at("best").get<double>();
    e.seconds = j.at("seconds").get<double>();
    return e;
}

BORunRecord read_record(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot read record '" + path.string() + "'");
    BORunRecord record;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            record.entries.push_back(parse_record_line(line));
        } catch (const std::exception& e) {
            throw ParseError(line_no, e.what());
        }
        if (record.entries.back().t == 0) ++record.init_count;
    }
    return record;
}

}  // namespace ladder
