#ifndef STORMBO_OPTIMIZER_HPP
#define STORMBO_OPTIMIZER_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stormbo/acquisition.hpp"
#include "stormbo/gp.hpp"
#include "stormbo/types.hpp"

namespace stormbo {

struct EvalOutcome {
    double value = 0.0;
    int storm_id = -1;
};

/// A black-box objective over [0,1]^dimension, minimized by every optimizer
/// here. Implementations must be deterministic for a fresh instance (any
/// internal storm randomization is seeded at construction).
struct Objective {
    int dimension = 1;
    std::function<EvalOutcome(const ControlDecision&)> evaluate;
};

struct EvaluationRecord {
    ControlDecision decision;
    double value = 0.0;
    int storm_id = -1;
};

struct Trace {
    std::vector<EvaluationRecord> records;
    std::vector<double> best_so_far;  // running minimum, same length as records

    void push(EvaluationRecord rec);
    int size() const { return static_cast<int>(records.size()); }
};

/// Raised when the objective throws mid-run; carries the evaluations made so
/// far.
class ObjectiveFailure : public std::runtime_error {
public:
    ObjectiveFailure(const std::string& what, Trace partial)
        : std::runtime_error(what), partial_trace(std::move(partial)) {}
    Trace partial_trace;
};

struct BOConfig {
    int n_initial = 0;  // 0 selects max(5, 2*d)
    int n_total = 30;
    AcquisitionConfig acquisition;
    std::uint64_t seed = 0;
    int gp_restarts = 3;
    bool latin_hypercube = false;  // initial design; default is uniform iid
};

struct BOResult {
    ControlDecision best;
    Trace trace;
    GPModel model;
};

/// Algorithm: evaluate n_initial random decisions, then iterate
/// fit -> maximize-EI -> evaluate -> augment until n_total evaluations. The
/// returned best minimizes the final surrogate mean over a 201-per-dimension
/// grid for d <= 2, or is the best evaluated point otherwise.
BOResult bayes_optimize(const Objective& obj, const BOConfig& cfg);

struct SearchResult {
    ControlDecision best;
    Trace trace;
};

struct GAOperators {
    int tournament = 3;
    double blend_alpha = 0.5;
    double crossover_prob = 0.9;
    double mutation_sigma = 0.1;
    double mutation_prob = 0.2;  // per gene
};

/// Real-coded GA: tournament selection, blend crossover, Gaussian mutation,
/// offspring clipped to [0,1]. Evaluation stops exactly at eval_budget
/// objective calls.
SearchResult ga_optimize(const Objective& obj, int population, int generations,
                         std::uint64_t rng_seed, int eval_budget,
                         const GAOperators& ops = {});

SearchResult random_search(const Objective& obj, int n, std::uint64_t rng_seed);

enum class Method { bo, ga, random };

Method method_from_string(const std::string& name);
std::string method_name(Method m);

struct SweepRun {
    std::uint64_t seed = 0;
    double best = 0.0;
    bool ok = false;
    std::string error;
};

struct SweepSummary {
    std::vector<SweepRun> runs;
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation over successful runs
    int n_failed = 0;
    bool complete = true;
};

/// Runs `method` once per seed (base_seed, base_seed+1, ...) with the same
/// evaluation budget and summarizes the final best metrics. Failed runs are
/// excluded from the summary and flagged. Seeds may run concurrently.
SweepSummary seed_sweep(const std::function<Objective(std::uint64_t)>& objective_factory,
                        Method method, int n_seeds, int eval_budget, std::uint64_t base_seed,
                        int jobs = 1);

} // namespace stormbo

#endif
