#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ladder/acquisition.hpp"
#include "ladder/coupled_kernel.hpp"
#include "ladder/gp.hpp"
#include "ladder/latent.hpp"

namespace ladder {

/// Black-box objective over structures (minimized).
using Objective = std::function<double(const Structure&)>;

enum class Method { Ladder, NaiveLsbo };

std::string to_string(Method m);
Method parse_method(const std::string& text);

struct BOConfig {
    Method method = Method::Ladder;
    StructuredKernelConfig structured;  ///< used by Method::Ladder only
    int iterations = 100;
    int init_count = 10;
    std::uint64_t seed = 0;
    CmaConfig cma;
    bool duplicate_penalty = true;
    double noise_floor = 1e-6;
    int gp_restarts = 5;
    int gp_evals_per_restart = 200;
    bool tune_structured = false;
    bool record_timing = false;  ///< wall-clock seconds in the record (0 otherwise)

    void validate() const;
};

/// One evaluated point of a run. Initialization entries carry t = 0.
struct RunEntry {
    int t = 0;
    LatentVector z;
    Structure x;
    double y = 0.0;
    double best = 0.0;     ///< incumbent value after this entry
    double seconds = 0.0;  ///< wall-clock time of the iteration
    // In-memory diagnostics; not part of the streamed format.
    double jitter = 0.0;
    bool duplicate = false;
};

struct BORunRecord {
    int init_count = 0;
    std::vector<RunEntry> entries;
};

/// Raised when a run fails after some entries were produced.
class RunAborted : public Error {
public:
    RunAborted(const std::string& what, BORunRecord partial) : Error(what), partial_(std::move(partial)) {}
    const BORunRecord& partial() const noexcept { return partial_; }

private:
    BORunRecord partial_;
};

/// `init_count` distinct database structures drawn uniformly without
/// replacement, encoded and evaluated.
std::vector<EvaluatedTriple> init_dataset(const LatentModel& latent, const Objective& f, int init_count,
                                          std::uint64_t seed);

/// Called after every appended entry (initialization entries included).
using EntrySink = std::function<void(const RunEntry&)>;

/// Latent-space BO loop: fit the GP on D_t, maximize EI with restarted
/// CMA-ES, decode, evaluate, append. Method::NaiveLsbo differs only in using
/// the Matern kernel for prediction. `resume` continues a previously
/// streamed record (its entries are replayed to the sink first).
BORunRecord run(const BOConfig& cfg, const LatentModel& latent, const Objective& f, const EntrySink& sink = {},
                const BORunRecord* resume = nullptr);

/// Minimum-value entry, earliest on ties. Throws EmptyRecord.
std::pair<Structure, double> incumbent(const BORunRecord& record);

/// One JSON object per line with fields t, z, x, y, best, seconds in that
/// order.
std::string record_line(const RunEntry& entry);
RunEntry parse_record_line(const std::string& line);

/// Reads a streamed record. Entries with t = 0 count as initialization.
BORunRecord read_record(const std::filesystem::path& path);

}  // namespace ladder
