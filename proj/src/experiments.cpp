#include "ladder/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "ladder/errors.hpp"
#include "ladder/gp.hpp"

namespace ladder {

namespace fs = std::filesystem;

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& value)
{
    T out{};
    const auto v = trim(value);
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || v.empty())
        throw ConfigError(key + ": cannot parse '" + value + "' as a number");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value)
{
    const auto v = trim(value);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": expected a boolean, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value)
{
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class T>
std::string join(const std::vector<T>& xs)
{
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_same_v<T, std::string>)
            out += xs[i];
        else
            out += std::to_string(xs[i]);
    }
    return out;
}

std::string str(bool b) { return b ? "true" : "false"; }
std::string str(double d) { return format_double(d); }
std::string str(int i) { return std::to_string(i); }
std::string str(std::uint64_t u) { return std::to_string(u); }
std::string str(const std::string& s) { return s; }

void assign(int& dst, const std::string& k, const std::string& v) { dst = parse_number<int>(k, v); }
void assign(double& dst, const std::string& k, const std::string& v) { dst = parse_number<double>(k, v); }
void assign(std::uint64_t& dst, const std::string& k, const std::string& v)
{
    dst = parse_number<std::uint64_t>(k, v);
}
void assign(bool& dst, const std::string& k, const std::string& v) { dst = parse_bool(k, v); }
void assign(std::string& dst, const std::string&, const std::string& v) { dst = trim(v); }
void assign(std::vector<std::string>& dst, const std::string&, const std::string& v) { dst = split_list(v); }
void assign(std::vector<int>& dst, const std::string& k, const std::string& v)
{
    dst.clear();
    for (const auto& item : split_list(v)) dst.push_back(parse_number<int>(k, item));
}

template <class F>
void for_each_field(ExperimentConfig& c, F&& f)
{
    f("experiment", c.experiment);
    f("benchmark", c.benchmark);
    f("method", c.method);
    f("methods", c.methods);
    f("kernel", c.kernel);
    f("train-sizes", c.train_sizes);
    f("train-sets", c.train_sets);
    f("test-sets", c.test_sets);
    f("test-size", c.test_size);
    f("seeds", c.seeds);
    f("iters", c.iters);
    f("init-count", c.init_count);
    f("seed", c.seed);
    f("out", c.out);
    f("latent", c.latent);
    f("workers", c.workers);
    f("resume", c.resume);
    f("latent-dim", c.latent_dim);
    f("database-size", c.database_size);
    f("max-depth", c.max_depth);
    f("database-seed", c.database_seed);
    f("codebook-seed", c.codebook_seed);
    f("sigma0", c.sigma0);
    f("population", c.population);
    f("cma-iters", c.cma_iters);
    f("cma-restarts", c.cma_restarts);
    f("gap-decay", c.gap_decay);
    f("match-decay", c.match_decay);
    f("max-subseq-len", c.max_subseq_len);
    f("exact-length", c.exact_length);
    f("normalize", c.normalize);
    f("tune-structured", c.tune_structured);
    f("duplicate-penalty", c.duplicate_penalty);
    f("timing", c.timing);
    f("gp-restarts", c.gp_restarts);
    f("gp-evals", c.gp_evals);
    f("noise-floor", c.noise_floor);
    f("mse-floor", c.mse_floor);
    f("penalty-mse", c.penalty_mse);
}

void require(bool ok, const std::string& field, const std::string& what)
{
    if (!ok) throw ConfigError(field + ": " + what);
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value)
{
    bool found = false;
    for_each_field(*this, [&](const char* name, auto& field) {
        if (key == name) {
            assign(field, key, value);
            found = true;
        }
    });
    if (!found) throw ConfigError(key + ": unknown configuration key");
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::resolved() const
{
    std::vector<std::pair<std::string, std::string>> out;
    auto copy = *this;
    for_each_field(copy, [&](const char* name, auto& field) {
        if constexpr (std::is_same_v<std::decay_t<decltype(field)>, std::vector<int>> ||
                      std::is_same_v<std::decay_t<decltype(field)>, std::vector<std::string>>)
            out.emplace_back(name, join(field));
        else
            out.emplace_back(name, str(field));
    });
    return out;
}

void ExperimentConfig::validate() const
{
    require(experiment == "surrogate-fit" || experiment == "bo-compare" || experiment == "run", "experiment",
            "must be surrogate-fit, bo-compare or run");
    require(benchmark == "expr", "benchmark", "only 'expr' is available");
    try {
        parse_method(method);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("method: ") + e.what());
    }
    require(!methods.empty(), "methods", "must list at least one method");
    for (const auto& m : methods) {
        try {
            parse_method(m);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("methods: ") + e.what());
        }
    }
    try {
        parse_structured_kernel_kind(kernel);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("kernel: ") + e.what());
    }
    require(!train_sizes.empty(), "train-sizes", "must list at least one size");
    for (int s : train_sizes) require(s >= 1, "train-sizes", "sizes must be positive");
    require(train_sets >= 1, "train-sets", "must be positive");
    require(test_sets >= 1, "test-sets", "must be positive");
    require(test_size >= 1, "test-size", "must be positive");
    require(seeds >= 1, "seeds", "must be positive");
    require(iters >= 1, "iters", "must be positive");
    require(init_count >= 1, "init-count", "must be positive");
    require(!out.empty(), "out", "must not be empty");
    require(!latent.empty(), "latent", "must be 'codebook' or a file path");
    require(workers >= 1, "workers", "must be positive");
    require(latent_dim >= 1, "latent-dim", "must be positive");
    require(database_size >= 1, "database-size", "must be positive");
    require(max_depth >= 1, "max-depth", "must be positive");
    require(sigma0 > 0.0, "sigma0", "must be positive");
    require(population >= 2, "population", "must be at least 2");
    require(cma_iters >= 1, "cma-iters", "must be positive");
    require(cma_restarts >= 1, "cma-restarts", "must be positive");
    require(gap_decay > 0.0 && gap_decay <= 1.0, "gap-decay", "must lie in (0, 1]");
    require(match_decay > 0.0 && match_decay <= 1.0, "match-decay", "must lie in (0, 1]");
    require(max_subseq_len >= 1, "max-subseq-len", "must be positive");
    require(gp_restarts >= 1, "gp-restarts", "must be positive");
    require(gp_evals >= 1, "gp-evals", "must be positive");
    require(noise_floor > 0.0, "noise-floor", "must be positive");
    require(mse_floor > 0.0, "mse-floor", "must be positive");
    require(penalty_mse > mse_floor, "penalty-mse", "must exceed mse-floor");
}

BOConfig ExperimentConfig::bo_config(Method m, std::uint64_t run_seed) const
{
    BOConfig c;
    c.method = m;
    c.structured.kind = parse_structured_kernel_kind(kernel);
    c.structured.string.gap_decay = gap_decay;
    c.structured.string.match_decay = match_decay;
    c.structured.string.max_subseq_len = max_subseq_len;
    c.structured.string.exact_length = exact_length;
    c.structured.normalize = normalize;
    c.iterations = iters;
    c.init_count = init_count;
    c.seed = run_seed;
    c.cma.sigma0 = sigma0;
    c.cma.population = population;
    c.cma.iterations = cma_iters;
    c.cma.restarts = cma_restarts;
    c.duplicate_penalty = duplicate_penalty;
    c.noise_floor = noise_floor;
    c.gp_restarts = gp_restarts;
    c.gp_evals_per_restart = gp_evals;
    c.tune_structured = tune_structured;
    c.record_timing = timing;
    return c;
}

ObjectiveConfig ExperimentConfig::objective_config() const
{
    ObjectiveConfig c;
    c.mse_floor = mse_floor;
    c.penalty_mse = penalty_mse;
    return c;
}

void load_config_file(const fs::path& path, ExperimentConfig& cfg)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read '" + path.string() + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(line_no) + " is not 'key = value'");
        cfg.set(trim(std::string_view(text).substr(0, eq)), trim(std::string_view(text).substr(eq + 1)));
    }
}

ExperimentContext make_context(const ExperimentConfig& cfg)
{
    ExperimentContext ctx{nullptr, ExprObjective(cfg.objective_config()), {}};
    if (cfg.latent == "codebook") {
        const auto db = generate_database(static_cast<std::size_t>(cfg.database_size), cfg.max_depth, cfg.database_seed);
        ctx.latent = std::make_unique<CodebookModel>(build_codebook(db, cfg.latent_dim, cfg.codebook_seed));
    } else {
        ctx.latent = std::make_unique<CodebookModel>(load_external_model(cfg.latent));
    }
    const auto db = ctx.latent->database();
    ctx.database_values.reserve(db.size());
    for (const auto& s : db) ctx.database_values.push_back(ctx.objective(s));
    return ctx;
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn)
{
    const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), count);
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

SummaryRow summarize(std::string group, int key, std::vector<double> values)
{
    SummaryRow row;
    row.group = std::move(group);
    row.key = key;
    row.count = static_cast<int>(values.size());
    if (values.empty()) return row;
    const double n = static_cast<double>(values.size());
    row.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - row.mean) * (v - row.mean);
        row.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    row.median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
    return row;
}

namespace {

void write_header(std::ostream& out, const ExperimentConfig& cfg)
{
    for (const auto& [k, v] : cfg.resolved()) out << "# " << k << " = " << v << '\n';
}

void write_config_txt(const fs::path& dir, const ExperimentConfig& cfg)
{
    std::ofstream out(dir / "config.txt", std::ios::binary);
    for (const auto& [k, v] : cfg.resolved()) out << k << " = " << v << '\n';
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("out: cannot create directory '" + dir.string() + "'");
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows, const char* group_name,
                   const char* key_name)
{
    out << group_name << ',' << key_name << ",count,mean,stderr,lower,upper,median\n";
    for (const auto& r : rows)
        out << r.group << ',' << r.key << ',' << r.count << ',' << format_double(r.mean) << ','
            << format_double(r.std_error) << ',' << format_double(r.lower()) << ',' << format_double(r.upper())
            << ',' << format_double(r.median) << '\n';
}

std::vector<std::size_t> sample_indices(std::size_t pool, std::size_t count, std::mt19937_64& rng,
                                        const std::vector<char>* excluded = nullptr)
{
    std::vector<std::size_t> candidates;
    candidates.reserve(pool);
    for (std::size_t i = 0; i < pool; ++i)
        if (!excluded || !(*excluded)[i]) candidates.push_back(i);
    if (count > candidates.size()) throw ConfigError("sample size exceeds the available database entries");
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
        std::swap(candidates[i], candidates[pick(rng)]);
    }
    candidates.resize(count);
    return candidates;
}

constexpr const char* kMaternModel = "matern-only";
constexpr const char* kCoupledModel = "structure-coupled";

}  // namespace

SurrogateFitResult cmd_surrogate_fit(const ExperimentConfig& cfg, const ExperimentContext& ctx)
{
    cfg.validate();
    const fs::path dir(cfg.out);
    ensure_dir(dir);

    const auto db = ctx.latent->database();
    const BOConfig bo = cfg.bo_config(Method::Ladder, cfg.seed);
    const StructuredKernel structured(bo.structured);

    struct Unit {
        int size;
        int train_set;
    };
    std::vector<Unit> units;
    for (int size : cfg.train_sizes)
        for (int s = 0; s < cfg.train_sets; ++s) units.push_back({size, s});

    std::vector<std::vector<SurrogateCell>> unit_cells(units.size());
    auto triple_of = [&](std::size_t i) {
        return EvaluatedTriple{ctx.latent->encode(db[i]), db[i], ctx.database_values[i]};
    };

    parallel_for(units.size(), cfg.workers, [&](std::size_t u) {
        const auto [size, train_set] = units[u];
        const std::uint64_t unit_seed =
            mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(size)), static_cast<std::uint64_t>(train_set));
        std::mt19937_64 rng(mix_seed(unit_seed, 0));
        std::vector<char> in_train(db.size(), 0);
        std::vector<EvaluatedTriple> train;
        for (std::size_t i : sample_indices(db.size(), static_cast<std::size_t>(size), rng)) {
            in_train[i] = 1;
            train.push_back(triple_of(i));
        }

        GPConfig gp_cfg;
        gp_cfg.mode = KernelMode::LatentOnly;
        gp_cfg.structured = bo.structured;
        gp_cfg.noise_floor = cfg.noise_floor;
        gp_cfg.restarts = cfg.gp_restarts;
        gp_cfg.evals_per_restart = cfg.gp_evals;
        gp_cfg.seed = mix_seed(unit_seed, 1);
        const GPModel matern = fit_hyperparams(train, gp_cfg);
        GPModel coupled = [&] {
            if (!cfg.tune_structured)
                return GPModel::condition(train, matern.hyperparams(), KernelMode::StructureCoupled, structured,
                                          cfg.noise_floor);
            GPConfig tuned = gp_cfg;
            tuned.mode = KernelMode::StructureCoupled;
            tuned.tune_structured = true;
            return fit_hyperparams(train, tuned);
        }();

        auto& cells = unit_cells[u];
        for (int t = 0; t < cfg.test_sets; ++t) {
            std::mt19937_64 test_rng(mix_seed(unit_seed, 1000 + static_cast<std::uint64_t>(t)));
            std::vector<EvaluatedTriple> test;
            for (std::size_t i : sample_indices(db.size(), static_cast<std::size_t>(cfg.test_size), test_rng, &in_train))
                test.push_back(triple_of(i));
            cells.push_back({kMaternModel, size, train_set, t, surrogate_mae(matern, test)});
            cells.push_back({kCoupledModel, size, train_set, t, surrogate_mae(coupled, test)});
        }
    });

    SurrogateFitResult result;
    for (auto& cells : unit_cells)
        for (auto& c : cells) result.cells.push_back(std::move(c));

    for (const char* model : {kMaternModel, kCoupledModel})
        for (int size : cfg.train_sizes) {
            std::vector<double> values;
            for (const auto& c : result.cells)
                if (c.model == model && c.train_size == size) values.push_back(c.mae);
            result.summary.push_back(summarize(model, size, std::move(values)));
        }

    {
        std::ofstream out(dir / "surrogate_fit_cells.csv", std::ios::binary);
        write_header(out, cfg);
        out << "model,train_size,train_set,test_set,mae\n";
        for (const auto& c : result.cells)
            out << c.model << ',' << c.train_size << ',' << c.train_set << ',' << c.test_set << ','
                << format_double(c.mae) << '\n';
    }
    {
        std::ofstream out(dir / "surrogate_fit_summary.csv", std::ios::binary);
        write_header(out, cfg);
        write_summary(out, result.summary, "model", "train_size");
    }
    return result;
}

bool BoCompareResult::all_ok() const
{
    return std::all_of(runs.begin(), runs.end(), [](const RunStatus& r) { return r.ok; });
}

std::vector<double> incumbent_trace(const BORunRecord& record)
{
    std::vector<double> trace;
    for (const auto& e : record.entries) {
        const auto t = static_cast<std::size_t>(e.t);
        if (trace.size() <= t) trace.resize(t + 1, e.best);
        trace[t] = e.best;
    }
    return trace;
}

fs::path trace_path(const fs::path& dir, const std::string& method, std::uint64_t seed)
{
    return dir / (method + "_seed" + std::to_string(seed) + ".jsonl");
}

namespace {

RunStatus run_streamed(const ExperimentConfig& cfg, const ExperimentContext& ctx, const std::string& method,
                       std::uint64_t seed, const fs::path& path, bool resume)
{
    RunStatus status;
    status.method = method;
    status.seed = seed;
    const BOConfig bo = cfg.bo_config(parse_method(method), seed);
    const Objective f = [&](const Structure& x) { return ctx.objective(x); };

    std::optional<BORunRecord> previous;
    if (resume && fs::exists(path)) previous = read_record(path);
    std::ofstream out(path, previous ? std::ios::binary | std::ios::app : std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("out: cannot write '" + path.string() + "'");
    const std::size_t replayed = previous ? previous->entries.size() : 0;
    std::size_t seen = 0;
    const EntrySink sink = [&](const RunEntry& e) {
        if (seen++ < replayed) return;
        out << record_line(e) << '\n';
        out.flush();
    };
    try {
        status.record = run(bo, *ctx.latent, f, sink, previous ? &*previous : nullptr);
    } catch (const RunAborted& e) {
        status.ok = false;
        status.message = e.what();
        status.record = e.partial();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        status.ok = false;
        status.message = e.what();
    }
    return status;
}

}  // namespace

BoCompareResult cmd_bo_compare(const ExperimentConfig& cfg, const ExperimentContext& ctx)
{
    cfg.validate();
    const fs::path dir(cfg.out);
    const fs::path traces = dir / "traces";
    ensure_dir(traces);
    write_config_txt(dir, cfg);

    std::vector<std::pair<std::string, std::uint64_t>> jobs;
    for (const auto& m : cfg.methods)
        for (int s = 0; s < cfg.seeds; ++s) jobs.emplace_back(to_string(parse_method(m)), cfg.seed + static_cast<std::uint64_t>(s));

    BoCompareResult result;
    result.runs.resize(jobs.size());
    parallel_for(jobs.size(), cfg.workers, [&](std::size_t i) {
        const auto& [method, seed] = jobs[i];
        result.runs[i] = run_streamed(cfg, ctx, method, seed, trace_path(traces, method, seed), false);
    });

    {
        std::ofstream out(dir / "bo_compare_status.csv", std::ios::binary);
        write_header(out, cfg);
        out << "method,seed,status,entries,message\n";
        for (const auto& r : result.runs) {
            std::string msg = r.message;
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            out << r.method << ',' << r.seed << ',' << (r.ok ? "ok" : "failed") << ',' << r.record.entries.size()
                << ',' << msg << '\n';
        }
    }

    std::vector<std::string> method_order;
    for (const auto& m : cfg.methods) {
        const auto name = to_string(parse_method(m));
        if (std::find(method_order.begin(), method_order.end(), name) == method_order.end())
            method_order.push_back(name);
    }
    for (const auto& method : method_order) {
        std::vector<std::vector<double>> traces_of;
        for (const auto& r : result.runs)
            if (r.method == method && r.ok) traces_of.push_back(incumbent_trace(r.record));
        for (int t = 0; t <= cfg.iters; ++t) {
            std::vector<double> values;
            for (const auto& tr : traces_of)
                if (static_cast<std::size_t>(t) < tr.size()) values.push_back(tr[static_cast<std::size_t>(t)]);
            if (!values.empty()) result.summary.push_back(summarize(method, t, std::move(values)));
        }
    }
    {
        std::ofstream out(dir / "bo_compare_summary.csv", std::ios::binary);
        write_header(out, cfg);
        write_summary(out, result.summary, "method", "t");
    }
    return result;
}

RunStatus cmd_single_run(const ExperimentConfig& cfg, const ExperimentContext& ctx)
{
    cfg.validate();
    const fs::path dir(cfg.out);
    ensure_dir(dir);
    write_config_txt(dir, cfg);
    const auto method = to_string(parse_method(cfg.method));
    return run_streamed(cfg, ctx, method, cfg.seed, dir / ("run_" + method + "_seed" + std::to_string(cfg.seed) + ".jsonl"),
                        cfg.resume);
}

}  // namespace ladder
