#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "stormbo/optimizer.hpp"

using namespace stormbo;

namespace {

Objective quadratic_1d() {
    Objective obj;
    obj.dimension = 1;
    obj.evaluate = [](const ControlDecision& x) {
        return EvalOutcome{(x[0] - 0.3) * (x[0] - 0.3), -1};
    };
    return obj;
}

Objective constant_obj(double c = 7.0) {
    Objective obj;
    obj.dimension = 1;
    obj.evaluate = [c](const ControlDecision&) { return EvalOutcome{c, -1}; };
    return obj;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

} // namespace

TEST_CASE("bayes_optimize: locates the quadratic minimum at desk budget") {
    std::vector<double> bests;
    for (int seed = 0; seed < 10; ++seed) {
        BOConfig cfg;
        cfg.n_initial = 5;
        cfg.n_total = 25;
        cfg.seed = seed;
        BOResult res = bayes_optimize(quadratic_1d(), cfg);
        CHECK(res.trace.size() == 25);
        bests.push_back(res.best[0]);
    }
    CHECK(std::abs(median(bests) - 0.3) <= 0.05);
}

TEST_CASE("bayes_optimize: n_total = n_initial degenerates to random search + surrogate") {
    BOConfig cfg;
    cfg.n_initial = 8;
    cfg.n_total = 8;
    cfg.seed = 3;
    BOResult res = bayes_optimize(quadratic_1d(), cfg);
    CHECK(res.trace.size() == 8);
    CHECK(res.best[0] >= 0.0);
    CHECK(res.best[0] <= 1.0);
    // the returned best minimizes the surrogate mean over the grid
    double grid_min = 1e300;
    for (int i = 0; i <= 200; ++i) {
        ControlDecision x(1);
        x[0] = i / 200.0;
        grid_min = std::min(grid_min, res.model.posterior(x).mean);
    }
    CHECK(res.model.posterior(res.best).mean <= grid_min + 1e-12);
}

TEST_CASE("bayes_optimize: constant objective is harmless") {
    BOConfig cfg;
    cfg.n_initial = 4;
    cfg.n_total = 10;
    cfg.seed = 5;
    BOResult res = bayes_optimize(constant_obj(), cfg);
    for (double b : res.trace.best_so_far) CHECK(b == 7.0);
    CHECK(res.best[0] >= 0.0);
    CHECK(res.best[0] <= 1.0);
}

TEST_CASE("bayes_optimize: bit-identical traces for the same seed") {
    BOConfig cfg;
    cfg.n_total = 15;
    cfg.seed = 42;
    BOResult a = bayes_optimize(quadratic_1d(), cfg);
    BOResult b = bayes_optimize(quadratic_1d(), cfg);
    REQUIRE(a.trace.size() == b.trace.size());
    for (int i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace.records[i].decision[0] == b.trace.records[i].decision[0]);
        CHECK(a.trace.records[i].value == b.trace.records[i].value);
    }
}

TEST_CASE("bayes_optimize: objective failure carries the partial trace") {
    Objective flaky;
    flaky.dimension = 1;
    int calls = 0;
    flaky.evaluate = [&calls](const ControlDecision& x) {
        if (++calls > 7) throw std::runtime_error("simulator exploded");
        return EvalOutcome{x[0], -1};
    };
    BOConfig cfg;
    cfg.n_initial = 5;
    cfg.n_total = 20;
    cfg.seed = 1;
    try {
        bayes_optimize(flaky, cfg);
        FAIL("expected ObjectiveFailure");
    } catch (const ObjectiveFailure& e) {
        CHECK(e.partial_trace.size() == 7);
    }
}

TEST_CASE("bayes_optimize: latin hypercube initial design covers all strata") {
    Objective probe;
    probe.dimension = 1;
    std::vector<double> seen;
    probe.evaluate = [&seen](const ControlDecision& x) {
        seen.push_back(x[0]);
        return EvalOutcome{0.0, -1};
    };
    BOConfig cfg;
    cfg.n_initial = 10;
    cfg.n_total = 10;
    cfg.seed = 9;
    cfg.latin_hypercube = true;
    bayes_optimize(probe, cfg);
    std::vector<int> strata(10, 0);
    for (double x : seen) strata[std::min(9, static_cast<int>(x * 10))]++;
    for (int count : strata) CHECK(count == 1);
}

TEST_CASE("ga_optimize: locates the quadratic minimum") {
    std::vector<double> bests;
    for (int seed = 0; seed < 10; ++seed) {
        SearchResult res = ga_optimize(quadratic_1d(), 20, 1 << 20, seed, 200);
        CHECK(res.trace.size() == 200);
        bests.push_back(res.best[0]);
    }
    CHECK(std::abs(median(bests) - 0.3) <= 0.05);
}

TEST_CASE("ga_optimize: budget below the population truncates the initial sweep") {
    SearchResult res = ga_optimize(quadratic_1d(), 20, 100, 5, 7);
    CHECK(res.trace.size() == 7);
    double best = 1e300;
    for (const auto& rec : res.trace.records) best = std::min(best, rec.value);
    CHECK(res.trace.best_so_far.back() == best);
}

TEST_CASE("ga_optimize: no variation operators means no improvement after gen 0") {
    GAOperators ops;
    ops.mutation_prob = 0.0;
    ops.crossover_prob = 0.0;
    SearchResult res = ga_optimize(quadratic_1d(), 10, 1 << 20, 3, 60, ops);
    const double best_after_init = res.trace.best_so_far[9];
    for (int i = 10; i < 60; ++i) CHECK(res.trace.best_so_far[i] == best_after_init);
}

TEST_CASE("random_search: order statistics and determinism") {
    Objective identity;
    identity.dimension = 1;
    identity.evaluate = [](const ControlDecision& x) { return EvalOutcome{x[0], -1}; };

    SearchResult one = random_search(identity, 1, 11);
    CHECK(one.trace.size() == 1);
    CHECK(one.best[0] == one.trace.records[0].decision[0]);

    SearchResult big = random_search(identity, 10000, 17);
    CHECK(big.trace.best_so_far.back() <= 0.01);

    SearchResult again = random_search(identity, 10000, 17);
    for (int i = 0; i < 100; ++i)
        CHECK(big.trace.records[i].decision[0] == again.trace.records[i].decision[0]);
}

TEST_CASE("all methods: budget exactness and monotone best_so_far") {
    for (int budget : {1, 5, 23}) {
        BOConfig cfg;
        cfg.n_total = budget;
        cfg.seed = 7;
        BOResult bo = bayes_optimize(quadratic_1d(), cfg);
        CHECK(bo.trace.size() == budget);
        SearchResult ga = ga_optimize(quadratic_1d(), 4, 1 << 20, 7, budget);
        CHECK(ga.trace.size() == budget);
        SearchResult rs = random_search(quadratic_1d(), budget, 7);
        CHECK(rs.trace.size() == budget);
        for (const Trace* tr : {&bo.trace, &ga.trace, &rs.trace}) {
            for (size_t i = 1; i < tr->best_so_far.size(); ++i)
                CHECK(tr->best_so_far[i] <= tr->best_so_far[i - 1]);
        }
    }
}

TEST_CASE("seed_sweep: constant objective has zero spread; failures are flagged") {
    auto factory = [](std::uint64_t) { return constant_obj(3.5); };
    for (Method m : {Method::random, Method::ga, Method::bo}) {
        SweepSummary s = seed_sweep(factory, m, 5, 10, 100, 2);
        CHECK(s.complete);
        CHECK(s.mean == doctest::Approx(3.5));
        CHECK(s.stddev == 0.0);
    }

    auto flaky_factory = [](std::uint64_t seed) {
        Objective obj;
        obj.dimension = 1;
        obj.evaluate = [seed](const ControlDecision& x) -> EvalOutcome {
            if (seed % 2 == 0) throw std::runtime_error("bad seed");
            return {x[0], -1};
        };
        return obj;
    };
    SweepSummary f = seed_sweep(flaky_factory, Method::random, 6, 5, 100, 1);
    CHECK_FALSE(f.complete);
    CHECK(f.n_failed == 3);
    for (const auto& run : f.runs) {
        if (run.seed % 2 == 0) CHECK_FALSE(run.ok);
        else CHECK(run.ok);
    }
}

TEST_CASE("seed_sweep: concurrent execution matches sequential") {
    auto factory = [](std::uint64_t) { return quadratic_1d(); };
    SweepSummary seq = seed_sweep(factory, Method::ga, 6, 30, 50, 1);
    SweepSummary par = seed_sweep(factory, Method::ga, 6, 30, 50, 4);
    REQUIRE(seq.runs.size() == par.runs.size());
    for (size_t i = 0; i < seq.runs.size(); ++i) CHECK(seq.runs[i].best == par.runs[i].best);
    CHECK(seq.mean == par.mean);
    CHECK(seq.stddev == par.stddev);
}

TEST_CASE("desk-scale dominance: BO beats random search on standard objectives") {
    struct Case {
        const char* name;
        Objective obj;
    };
    std::vector<Case> cases;
    cases.push_back({"quadratic", quadratic_1d()});
    {
        Objective o;
        o.dimension = 1;
        o.evaluate = [](const ControlDecision& x) {
            return EvalOutcome{std::abs(x[0] - 0.7), -1};
        };
        cases.push_back({"vee", o});
    }
    {
        Objective o;
        o.dimension = 1;
        o.evaluate = [](const ControlDecision& x) {
            const double q = (x[0] - 0.4) * (x[0] - 0.4);
            return EvalOutcome{q + (x[0] > 0.8 ? 0.5 : 0.0), -1};
        };
        cases.push_back({"step-penalized quadratic", o});
    }
    {
        Objective o;  // Branin rescaled to the unit square
        o.dimension = 2;
        o.evaluate = [](const ControlDecision& u) {
            const double x1 = 15.0 * u[0] - 5.0;
            const double x2 = 15.0 * u[1];
            const double a = 1.0, b = 5.1 / (4.0 * M_PI * M_PI), c = 5.0 / M_PI;
            const double r = 6.0, s = 10.0, t = 1.0 / (8.0 * M_PI);
            const double v = a * std::pow(x2 - b * x1 * x1 + c * x1 - r, 2) +
                             s * (1.0 - t) * std::cos(x1) + s;
            return EvalOutcome{v, -1};
        };
        cases.push_back({"branin", o});
    }
    {
        Objective o;
        o.dimension = 2;
        o.evaluate = [](const ControlDecision& x) {
            return EvalOutcome{(x[0] - 0.25) * (x[0] - 0.25) +
                                   2.0 * (x[1] - 0.65) * (x[1] - 0.65),
                               -1};
        };
        cases.push_back({"bowl-2d", o});
    }

    for (auto& c : cases) {
        std::vector<double> bo_best, rs_best;
        for (int seed = 0; seed < 20; ++seed) {
            BOConfig cfg;
            cfg.n_total = 30;
            cfg.seed = seed;
            cfg.gp_restarts = 2;
            bo_best.push_back(bayes_optimize(c.obj, cfg).trace.best_so_far.back());
            rs_best.push_back(random_search(c.obj, 30, seed).trace.best_so_far.back());
        }
        INFO(c.name);
        CHECK(median(bo_best) <= median(rs_best));
    }
}
