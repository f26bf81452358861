#include "stormbo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

#include "stormbo/rng.hpp"

namespace stormbo {

void Trace::push(EvaluationRecord rec) {
    const double prev = best_so_far.empty() ? rec.value : best_so_far.back();
    best_so_far.push_back(std::min(prev, rec.value));
    records.push_back(std::move(rec));
}

namespace {

Dataset dataset_from(const Trace& trace, int dim) {
    Dataset ds;
    const int n = trace.size();
    ds.inputs.resize(n, dim);
    ds.targets.resize(n);
    ds.storm_ids.resize(n);
    for (int i = 0; i < n; ++i) {
        ds.inputs.row(i) = trace.records[i].decision.transpose();
        ds.targets[i] = trace.records[i].value;
        ds.storm_ids[i] = trace.records[i].storm_id;
    }
    return ds;
}

EvaluationRecord evaluate_checked(const Objective& obj, const ControlDecision& x,
                                  const Trace& trace) {
    try {
        EvalOutcome out = obj.evaluate(x);
        return {x, out.value, out.storm_id};
    } catch (const std::exception& e) {
        throw ObjectiveFailure(std::string("objective evaluation failed: ") + e.what(), trace);
    }
}

ControlDecision best_evaluated(const Trace& trace) {
    int best = 0;
    for (int i = 1; i < trace.size(); ++i)
        if (trace.records[i].value < trace.records[best].value) best = i;
    return trace.records[best].decision;
}

// Minimizer of the surrogate posterior mean over a dense grid (d <= 2 only).
ControlDecision surrogate_grid_min(const GPModel& model, int grid) {
    const int d = model.dim();
    ControlDecision best(d);
    double best_mean = std::numeric_limits<double>::infinity();
    if (d == 1) {
        for (int i = 0; i < grid; ++i) {
            ControlDecision x(1);
            x[0] = static_cast<double>(i) / (grid - 1);
            const double m = model.posterior(x).mean;
            if (m < best_mean) {
                best_mean = m;
                best = x;
            }
        }
    } else {
        for (int i = 0; i < grid; ++i) {
            for (int j = 0; j < grid; ++j) {
                ControlDecision x(2);
                x[0] = static_cast<double>(i) / (grid - 1);
                x[1] = static_cast<double>(j) / (grid - 1);
                const double m = model.posterior(x).mean;
                if (m < best_mean) {
                    best_mean = m;
                    best = x;
                }
            }
        }
    }
    return best;
}

std::vector<ControlDecision> initial_design(int n, int d, bool lhs, Rng& rng) {
    std::vector<ControlDecision> pts;
    pts.reserve(n);
    if (!lhs) {
        for (int i = 0; i < n; ++i) {
            ControlDecision x(d);
            for (int k = 0; k < d; ++k) x[k] = rng.uniform();
            pts.push_back(x);
        }
        return pts;
    }
    // Latin hypercube: one stratum per point and dimension, shuffled.
    std::vector<std::vector<int>> perm(d, std::vector<int>(n));
    for (int k = 0; k < d; ++k) {
        std::iota(perm[k].begin(), perm[k].end(), 0);
        for (int i = n - 1; i > 0; --i)
            std::swap(perm[k][i], perm[k][rng.uniform_int(i + 1)]);
    }
    for (int i = 0; i < n; ++i) {
        ControlDecision x(d);
        for (int k = 0; k < d; ++k) x[k] = (perm[k][i] + rng.uniform()) / n;
        pts.push_back(x);
    }
    return pts;
}

} // namespace

BOResult bayes_optimize(const Objective& obj, const BOConfig& cfg) {
    const int d = obj.dimension;
    if (d < 1) throw std::invalid_argument("bayes_optimize: dimension must be >= 1");
    if (cfg.n_total < 1) throw std::invalid_argument("bayes_optimize: n_total must be >= 1");
    int n0 = cfg.n_initial > 0 ? cfg.n_initial : std::max(5, 2 * d);
    n0 = std::min(n0, cfg.n_total);

    Rng rng(derive_seed(cfg.seed, 0xb0));
    Trace trace;
    for (const auto& x : initial_design(n0, d, cfg.latin_hypercube, rng))
        trace.push(evaluate_checked(obj, x, trace));

    Dataset ds0 = dataset_from(trace, d);
    GPModel model =
        GPModel::fit(ds0, default_init(ds0), cfg.gp_restarts, derive_seed(cfg.seed, 1));
    int last_refit = trace.size();
    while (trace.size() < cfg.n_total) {
        const int n = trace.size();
        Dataset ds = dataset_from(trace, d);
        // Full hyperparameter refits every iteration while the dataset is
        // small, then every 5 evaluations (warm-started); in between only the
        // factorization is updated.
        if (n <= 60 || n - last_refit >= 5) {
            model = GPModel::fit(ds, model.raw_hyperparams(), cfg.gp_restarts,
                                 derive_seed(cfg.seed, 1000 + n));
            last_refit = n;
        } else {
            model = GPModel::with_hyperparams(ds, model.raw_hyperparams());
        }
        const ControlDecision x_next =
            maximize(model, cfg.acquisition, derive_seed(cfg.seed, 2000 + n));
        trace.push(evaluate_checked(obj, x_next, trace));
    }

    model = GPModel::fit(dataset_from(trace, d), model.raw_hyperparams(), cfg.gp_restarts,
                         derive_seed(cfg.seed, 3000));
    const ControlDecision best =
        d <= 2 ? surrogate_grid_min(model, 201) : best_evaluated(trace);
    return {best, std::move(trace), std::move(model)};
}

SearchResult random_search(const Objective& obj, int n, std::uint64_t rng_seed) {
    if (n < 1) throw std::invalid_argument("random_search: n must be >= 1");
    Rng rng(derive_seed(rng_seed, 0x4a));
    Trace trace;
    for (int i = 0; i < n; ++i) {
        ControlDecision x(obj.dimension);
        for (int k = 0; k < obj.dimension; ++k) x[k] = rng.uniform();
        trace.push(evaluate_checked(obj, x, trace));
    }
    ControlDecision best = best_evaluated(trace);
    return {std::move(best), std::move(trace)};
}

SearchResult ga_optimize(const Objective& obj, int population, int generations,
                         std::uint64_t rng_seed, int eval_budget, const GAOperators& ops) {
    if (population < 2) throw std::invalid_argument("ga_optimize: population must be >= 2");
    if (eval_budget < 1) throw std::invalid_argument("ga_optimize: eval_budget must be >= 1");
    const int d = obj.dimension;

    Rng rng(derive_seed(rng_seed, 0x6a));
    Trace trace;

    struct Individual {
        ControlDecision x;
        double fitness;
    };
    std::vector<Individual> pop;

    auto evaluate = [&](const ControlDecision& x) -> double {
        EvaluationRecord rec = evaluate_checked(obj, x, trace);
        trace.push(rec);
        return rec.value;
    };

    for (int i = 0; i < population && trace.size() < eval_budget; ++i) {
        ControlDecision x(d);
        for (int k = 0; k < d; ++k) x[k] = rng.uniform();
        pop.push_back({x, evaluate(x)});
    }

    auto tournament = [&]() -> const Individual& {
        const Individual* best = &pop[rng.uniform_int(pop.size())];
        for (int i = 1; i < ops.tournament; ++i) {
            const Individual& cand = pop[rng.uniform_int(pop.size())];
            if (cand.fitness < best->fitness) best = &cand;
        }
        return *best;
    };

    for (int g = 0; g < generations && trace.size() < eval_budget; ++g) {
        std::vector<Individual> offspring;
        offspring.reserve(pop.size());
        while (offspring.size() < pop.size() && trace.size() < eval_budget) {
            ControlDecision child = tournament().x;
            if (rng.uniform() < ops.crossover_prob) {
                const ControlDecision& other = tournament().x;
                for (int k = 0; k < d; ++k) {
                    const double lo = std::min(child[k], other[k]);
                    const double hi = std::max(child[k], other[k]);
                    const double span = hi - lo;
                    child[k] = rng.uniform(lo - ops.blend_alpha * span,
                                           hi + ops.blend_alpha * span);
                }
            }
            for (int k = 0; k < d; ++k)
                if (rng.uniform() < ops.mutation_prob) child[k] += ops.mutation_sigma * rng.normal();
            child = child.cwiseMax(0.0).cwiseMin(1.0);
            offspring.push_back({child, evaluate(child)});
        }
        if (offspring.size() == pop.size()) pop = std::move(offspring);
    }
    ControlDecision best = best_evaluated(trace);
    return {std::move(best), std::move(trace)};
}

Method method_from_string(const std::string& name) {
    if (name == "bo") return Method::bo;
    if (name == "ga") return Method::ga;
    if (name == "random") return Method::random;
    throw std::invalid_argument("unknown method '" + name + "' (expected bo, ga or random)");
}

std::string method_name(Method m) {
    switch (m) {
        case Method::bo: return "bo";
        case Method::ga: return "ga";
        default: return "random";
    }
}

SweepSummary seed_sweep(const std::function<Objective(std::uint64_t)>& objective_factory,
                        Method method, int n_seeds, int eval_budget, std::uint64_t base_seed,
                        int jobs) {
    if (n_seeds < 2) throw std::invalid_argument("seed_sweep: n_seeds must be >= 2");
    SweepSummary summary;
    summary.runs.resize(n_seeds);

    auto run_one = [&](int i) {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
        SweepRun run;
        run.seed = seed;
        try {
            const Objective obj = objective_factory(seed);
            double best_value = 0.0;
            switch (method) {
                case Method::bo: {
                    BOConfig cfg;
                    cfg.n_total = eval_budget;
                    cfg.seed = seed;
                    BOResult res = bayes_optimize(obj, cfg);
                    best_value = res.trace.best_so_far.back();
                    break;
                }
                case Method::ga: {
                    const int pop = std::clamp(eval_budget / 3, 2, 20);
                    SearchResult res = ga_optimize(obj, pop, 1 << 20, seed, eval_budget);
                    best_value = res.trace.best_so_far.back();
                    break;
                }
                case Method::random: {
                    SearchResult res = random_search(obj, eval_budget, seed);
                    best_value = res.trace.best_so_far.back();
                    break;
                }
            }
            run.best = best_value;
            run.ok = true;
        } catch (const std::exception& e) {
            run.ok = false;
            run.error = e.what();
        }
        summary.runs[i] = std::move(run);
    };

    if (jobs <= 1) {
        for (int i = 0; i < n_seeds; ++i) run_one(i);
    } else {
        std::mutex mu;
        int next = 0;
        auto worker = [&]() {
            for (;;) {
                int i;
                {
                    std::lock_guard<std::mutex> lock(mu);
                    if (next >= n_seeds) return;
                    i = next++;
                }
                run_one(i);
            }
        };
        std::vector<std::thread> threads;
        const int n_threads = std::min(jobs, n_seeds);
        threads.reserve(n_threads);
        for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    double sum = 0.0;
    int n_ok = 0;
    for (const auto& r : summary.runs) {
        if (r.ok) {
            sum += r.best;
            ++n_ok;
        } else {
            ++summary.n_failed;
        }
    }
    summary.complete = summary.n_failed == 0;
    summary.mean = n_ok > 0 ? sum / n_ok : 0.0;
    double ss = 0.0;
    for (const auto& r : summary.runs)
        if (r.ok) ss += (r.best - summary.mean) * (r.best - summary.mean);
    summary.stddev = n_ok > 1 ? std::sqrt(ss / (n_ok - 1)) : 0.0;
    return summary;
}

} // namespace stormbo
