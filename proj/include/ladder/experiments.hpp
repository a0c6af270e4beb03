#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ladder/bo.hpp"
#include "ladder/expr.hpp"
#include "ladder/latent.hpp"

namespace ladder {

/// Every tunable of the three experiment commands. Keys accepted by set()
/// match the long CLI flag names (e.g. "train-sizes", "iters").
struct ExperimentConfig {
    std::string experiment = "run";  ///< surrogate-fit | bo-compare | run
    std::string benchmark = "expr";
    std::string method = "ladder";
    std::vector<std::string> methods = {"ladder", "naive-lsbo"};
    std::string kernel = "string";
    std::vector<int> train_sizes = {10, 20, 50, 100, 200};
    int train_sets = 50;
    int test_sets = 20;
    int test_size = 50;
    int seeds = 10;
    int iters = 100;
    int init_count = 10;
    std::uint64_t seed = 0;
    std::string out = "results";
    std::string latent = "codebook";
    int workers = 1;
    bool resume = false;

    int latent_dim = 16;
    int database_size = 5000;
    int max_depth = 6;
    std::uint64_t database_seed = 20221;
    std::uint64_t codebook_seed = 7;

    double sigma0 = 0.2;
    int population = 50;
    int cma_iters = 10;
    int cma_restarts = 10;

    double gap_decay = 0.75;
    double match_decay = 1.0;
    int max_subseq_len = 3;
    bool exact_length = false;
    bool normalize = true;
    bool tune_structured = false;
    bool duplicate_penalty = true;
    bool timing = false;

    int gp_restarts = 5;
    int gp_evals = 200;
    double noise_floor = 1e-6;
    double mse_floor = 1e-10;
    double penalty_mse = 1e10;

    /// Throws ConfigError naming the key on unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
    /// (key, value) pairs of every field in a fixed order.
    std::vector<std::pair<std::string, std::string>> resolved() const;
    /// Throws ConfigError naming the first offending field.
    void validate() const;

    BOConfig bo_config(Method method, std::uint64_t run_seed) const;
    ObjectiveConfig objective_config() const;
};

/// Reads `key = value` lines ('#' comments and blank lines skipped) into cfg.
void load_config_file(const std::filesystem::path& path, ExperimentConfig& cfg);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

/// Latent model and objective shared by every cell of an experiment.
struct ExperimentContext {
    std::unique_ptr<CodebookModel> latent;
    ExprObjective objective;
    std::vector<double> database_values;  ///< objective of each database entry
};

ExperimentContext make_context(const ExperimentConfig& cfg);

/// Runs fn(0..count-1) on up to `workers` threads; rethrows the first error.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

struct SurrogateCell {
    std::string model;  ///< matern-only | structure-coupled
    int train_size = 0;
    int train_set = 0;
    int test_set = 0;
    double mae = 0.0;
};

struct SummaryRow {
    std::string group;  ///< model or method name
    int key = 0;        ///< train size or iteration index
    int count = 0;
    double mean = 0.0;
    double std_error = 0.0;
    double median = 0.0;
    double lower() const { return mean - 2.0 * std_error; }
    double upper() const { return mean + 2.0 * std_error; }
};

/// mean, standard error (sample standard deviation / sqrt(n)) and median.
SummaryRow summarize(std::string group, int key, std::vector<double> values);

struct SurrogateFitResult {
    std::vector<SurrogateCell> cells;
    std::vector<SummaryRow> summary;
};

/// Surrogate-fit protocol: for every train size and training set, fit the
/// Matern hyperparameters once, condition both the Matern-only and the
/// structure-coupled GP, and score each on test_sets random test sets drawn
/// from the rest of the database. Writes surrogate_fit_cells.csv and
/// surrogate_fit_summary.csv to cfg.out.
SurrogateFitResult cmd_surrogate_fit(const ExperimentConfig& cfg, const ExperimentContext& ctx);

struct RunStatus {
    std::string method;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string message;
    BORunRecord record;
};

struct BoCompareResult {
    std::vector<RunStatus> runs;  ///< sorted by (method order, seed)
    std::vector<SummaryRow> summary;
    bool all_ok() const;
};

/// Incumbent after initialization (index 0) and after each iteration.
std::vector<double> incumbent_trace(const BORunRecord& record);

/// Every (method, seed) pair with the initialization shared per seed.
/// Writes traces/<method>_seed<S>.jsonl, bo_compare_status.csv,
/// bo_compare_summary.csv and config.txt to cfg.out.
BoCompareResult cmd_bo_compare(const ExperimentConfig& cfg, const ExperimentContext& ctx);

/// One run streamed to run_<method>_seed<S>.jsonl (resumed from that file
/// when cfg.resume is set and it exists).
RunStatus cmd_single_run(const ExperimentConfig& cfg, const ExperimentContext& ctx);

std::filesystem::path trace_path(const std::filesystem::path& dir, const std::string& method, std::uint64_t seed);

}  // namespace ladder
