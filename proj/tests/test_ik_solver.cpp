#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fk_oracle.hpp"
#include "partner/ik_solver.hpp"

using namespace partner;

namespace {

Chromosome random_genes(Rng& rng, const JointLimitTable& limits = {}) {
    Chromosome c{};
    for (std::size_t i = 0; i < kJointCount; ++i) {
        c[i] = std::uniform_real_distribution<double>(limits[i].min, limits[i].max)(rng);
    }
    return c;
}

Pose9 oracle_pose(const Chromosome& c) { return Pose9::from_flat(oracle::fk<double>(c, oracle::Links{})); }

double sq_norm(const Gradient& g) {
    double s = 0.0;
    for (double v : g) s += v * v;
    return s;
}

Population random_population(Rng& rng, const Objective& obj, int n) {
    Population pop(static_cast<std::size_t>(n));
    for (auto& b : pop) {
        b.genes = random_genes(rng);
        b.cost = obj.evaluate(b.genes);
    }
    return pop;
}

}  // namespace

TEST_SUITE("ik_solver") {

TEST_CASE("default parameters") {
    const BmaParams p;
    CHECK(p.n_gen == 35);
    CHECK(p.n_ind == 12);
    CHECK(p.n_clones == 10);
    CHECK(p.l_bm == 1);
    CHECK(p.n_inf == 15);
    CHECK(p.l_gt == 1);
    CHECK(p.lm_prob == 0.20);
    CHECK(p.lm_iter == 8);
    CHECK(p.gamma_init == 1.0);
    CHECK(p.tau == 0.0001);
    CHECK_NOTHROW(p.validate());
}

TEST_CASE("parameter validation") {
    auto bad = [](auto mutate) {
        BmaParams p;
        mutate(p);
        return p;
    };
    CHECK_THROWS_AS(bad([](BmaParams& p) { p.n_ind = 1; }).validate(), InvalidParameters);
    CHECK_THROWS_AS(bad([](BmaParams& p) { p.n_clones = 0; }).validate(), InvalidParameters);
    CHECK_THROWS_AS(bad([](BmaParams& p) { p.l_bm = 9; }).validate(), InvalidParameters);
    CHECK_THROWS_AS(bad([](BmaParams& p) { p.l_gt = 0; }).validate(), InvalidParameters);
    CHECK_THROWS_AS(bad([](BmaParams& p) { p.lm_prob = 1.5; }).validate(), InvalidParameters);
    CHECK_THROWS_AS(bad([](BmaParams& p) { p.gamma_init = 0.0; }).validate(), InvalidParameters);
    CHECK_THROWS_AS(bad([](BmaParams& p) { p.tau = -1.0; }).validate(), InvalidParameters);
    CHECK_THROWS_AS(bad([](BmaParams& p) { p.fd_step = 0.0; }).validate(), InvalidParameters);

    // Rejected before any work, including for targets that would otherwise be fine.
    const RobotModel model;
    CHECK_THROWS_AS(solve_ik(Pose9{}, bad([](BmaParams& p) { p.n_ind = 0; }), model), InvalidParameters);
}

TEST_CASE("evaluate is the squared pose error") {
    const RobotModel model;
    Rng rng(1);
    const Chromosome star = random_genes(rng);
    const Pose9 target = forward_kinematics(JointAngles{star}, model.links);
    CHECK(evaluate(star, target, model) == 0.0);

    Chromosome zeroish{};
    zeroish[7] = 0.5;
    Pose9 shifted = forward_kinematics(JointAngles{zeroish}, model.links);
    shifted.left_hand.z += 0.1;
    CHECK(evaluate(zeroish, shifted, model) == doctest::Approx(0.01).epsilon(1e-12));

    for (int i = 0; i < 100; ++i) {
        const Chromosome a = random_genes(rng);
        const Chromosome b = random_genes(rng);
        const auto want = oracle::cost<double>(a, oracle::fk<double>(b, oracle::Links{}), oracle::Links{});
        CHECK(evaluate(a, oracle_pose(b), model) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("checked builds reject chromosomes outside the limits") {
    const RobotModel model;
    const Objective obj(model, Pose9{});
    Chromosome c{};
    c[7] = 0.0;  // below the head minimum
    CHECK_THROWS_AS(obj.cost(c), LimitViolation);
}

TEST_CASE("central gradient tracks the exact gradient") {
    const RobotModel model;
    Rng rng(2);
    for (int i = 0; i < 20; ++i) {
        const Chromosome at = random_genes(rng);
        const Chromosome goal = random_genes(rng);
        // Keep probes inside the limits so no one-sided clamping kicks in.
        Chromosome x = at;
        for (std::size_t j = 0; j < kJointCount; ++j) {
            x[j] = std::clamp(x[j], model.limits[j].min + 1e-3, model.limits[j].max - 1e-3);
        }
        const Objective obj(model, oracle_pose(goal));
        const Gradient g = central_gradient(obj, x, 1e-5);
        const auto exact = oracle::exact_gradient(x, oracle::fk<double>(goal, oracle::Links{}), oracle::Links{});
        for (std::size_t j = 0; j < kJointCount; ++j) CHECK(std::abs(g[j] - exact[j]) < 1e-8);
    }
}

TEST_CASE("gradient probes are clamped at the limits") {
    const RobotModel model;
    Rng rng(3);
    Chromosome x = random_genes(rng);
    x[0] = model.limits[0].max;
    x[7] = model.limits[7].min;
    const Objective obj(model, oracle_pose(random_genes(rng)));
    // Would throw LimitViolation in this checked build if a probe escaped.
    const Gradient g = central_gradient(obj, x, 1e-5);
    CHECK(std::isfinite(g[0]));
    CHECK(std::isfinite(g[7]));
}

TEST_CASE("damped step equals the rank-one closed form") {
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        Gradient g{};
        for (auto& v : g) v = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
        const double gamma = std::exp(std::uniform_real_distribution<double>(-6.0, 6.0)(rng));
        const auto s = damped_step(g, gamma);
        REQUIRE(s);
        // (g gᵀ + γI)⁻¹ g = g / (γ + |g|²)
        const double scale = 1.0 / (gamma + sq_norm(g));
        for (std::size_t j = 0; j < kJointCount; ++j) {
            CHECK((*s)[j] == doctest::Approx(-g[j] * scale).epsilon(1e-10));
        }
    }
}

TEST_CASE("damped step refuses ill-conditioned systems") {
    Gradient g{};
    g[0] = 1.0;
    CHECK_FALSE(damped_step(g, 1e-13));
    CHECK(damped_step(g, 1e-11));
    CHECK_FALSE(damped_step(g, 0.0));
    CHECK(damped_step(Gradient{}, 1.0));  // zero gradient: identity system, zero step
}

TEST_CASE("trust-ratio damping rules") {
    CHECK(update_gamma(1.0, 0.1) == 4.0);
    CHECK(update_gamma(1.0, 0.8) == 0.5);
    CHECK(update_gamma(1.0, 0.5) == 1.0);
    CHECK(update_gamma(1.0, 0.25) == 1.0);
    CHECK(update_gamma(1.0, 0.75) == 1.0);
    CHECK(update_gamma(2.0, -3.0) == 8.0);
}

TEST_CASE("local search at a stationary point stops at once") {
    const RobotModel model;
    Rng rng(5);
    Bacterium b;
    b.genes = random_genes(rng);
    const Objective obj(model, forward_kinematics(b.angles(), model.links));
    b.cost = obj.evaluate(b.genes);
    const Chromosome before = b.genes;
    const LmReport r = lm_local_search(b, obj, BmaParams{});
    CHECK(r.converged);
    CHECK(r.iterations == 1);
    CHECK(r.steps.empty());
    CHECK(b.genes == before);
    CHECK(*b.cost == 0.0);
}

TEST_CASE("local search only accepts improving steps") {
    const RobotModel model;
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        Chromosome star = random_genes(rng);
        for (std::size_t j = 0; j < kJointCount; ++j) {
            star[j] = std::clamp(star[j], model.limits[j].min + 0.06, model.limits[j].max - 0.06);
        }
        const Objective obj(model, forward_kinematics(JointAngles{star}, model.links));
        Bacterium b;
        b.genes = star;
        b.genes[1] += 0.05;
        b.genes[5] -= 0.05;
        b.cost = obj.evaluate(b.genes);
        const double start = *b.cost;

        const LmReport r = lm_local_search(b, obj, BmaParams{});
        double current = start;
        for (const auto& it : r.steps) {
            CHECK(it.gamma > 0.0);
            CHECK(it.cost_before == current);
            if (it.accepted) {
                CHECK(it.cost_candidate < it.cost_before);
                current = it.cost_candidate;
            }
        }
        CHECK(r.final_gamma > 0.0);
        CHECK(*b.cost == current);
        CHECK(*b.cost <= start);
        CHECK(obj.cost(b.genes) == *b.cost);
        CHECK(model.limits.contains(b.angles()));
    }
}

TEST_CASE("mutation with a single clone leaves the population alone") {
    const RobotModel model;
    Rng rng(7);
    const Objective obj(model, oracle_pose(random_genes(rng)));
    Population pop = random_population(rng, obj, 6);
    const Population before = pop;
    BmaParams p;
    p.n_clones = 1;
    bacterial_mutation(pop, obj, p, rng);
    for (std::size_t i = 0; i < pop.size(); ++i) {
        CHECK(pop[i].genes == before[i].genes);
        CHECK(*pop[i].cost == *before[i].cost);
    }
}

TEST_CASE("mutation keeps a perfect bacterium perfect") {
    const RobotModel model;
    Rng rng(8);
    const Chromosome star = random_genes(rng);
    const Objective obj(model, forward_kinematics(JointAngles{star}, model.links));
    Population pop(1);
    pop[0].genes = star;
    pop[0].cost = 0.0;
    bacterial_mutation(pop, obj, BmaParams{}, rng);
    CHECK(*pop[0].cost == 0.0);
}

TEST_CASE("mutation never increases cost and keeps costs fresh") {
    const RobotModel model;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        const Objective obj(model, oracle_pose(random_genes(rng)));
        Population pop = random_population(rng, obj, 1);
        const double before = *pop[0].cost;
        BmaParams p;
        p.l_bm = 1 + static_cast<int>(seed % 3);
        bacterial_mutation(pop, obj, p, rng);
        CHECK(*pop[0].cost <= before);
        CHECK(obj.cost(pop[0].genes) == *pop[0].cost);
        CHECK(model.limits.contains(pop[0].angles()));
    }
}

TEST_CASE("gene transfer with no infections only sorts") {
    const RobotModel model;
    Rng rng(9);
    const Objective obj(model, oracle_pose(random_genes(rng)));
    Population pop = random_population(rng, obj, 8);
    sort_population(pop);
    const Population before = pop;
    BmaParams p;
    p.n_inf = 0;
    gene_transfer(pop, obj, p, rng);
    for (std::size_t i = 0; i < pop.size(); ++i) CHECK(pop[i].genes == before[i].genes);
}

TEST_CASE("gene transfer between identical bacteria is a no-op") {
    const RobotModel model;
    Rng rng(10);
    const Objective obj(model, oracle_pose(random_genes(rng)));
    Population pop = random_population(rng, obj, 1);
    pop.push_back(pop[0]);
    gene_transfer(pop, obj, BmaParams{}, rng);
    CHECK(pop[0].genes == pop[1].genes);
    CHECK(*pop[0].cost == *pop[1].cost);
}

TEST_CASE("gene transfer protects the better half") {
    const RobotModel model;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        const Objective obj(model, oracle_pose(random_genes(rng)));
        Population pop = random_population(rng, obj, 5);
        sort_population(pop);
        const Population before = pop;

        BmaParams one;
        one.n_inf = 1;
        gene_transfer(pop, obj, one, rng);
        // With an odd size the median is in the better half: the top three
        // are sources only and must still be present.
        for (std::size_t i = 0; i < 3; ++i) {
            const bool present = std::any_of(pop.begin(), pop.end(),
                                             [&](const Bacterium& b) { return b.genes == before[i].genes; });
            CHECK(present);
        }

        const double best_before = *pop.front().cost;
        gene_transfer(pop, obj, BmaParams{}, rng);
        CHECK(*pop.front().cost <= best_before);
        CHECK(std::is_sorted(pop.begin(), pop.end(),
                             [](const Bacterium& a, const Bacterium& b) { return *a.cost < *b.cost; }));
        for (const auto& b : pop) CHECK(obj.cost(b.genes) == *b.cost);
    }
}

TEST_CASE("sorting is stable on ties") {
    Population pop(4);
    for (std::size_t i = 0; i < pop.size(); ++i) {
        pop[i].genes[0] = static_cast<double>(i);
        pop[i].cost = i == 2 ? 0.5 : 1.0;
    }
    sort_population(pop);
    CHECK(pop[0].genes[0] == 2.0);
    CHECK(pop[1].genes[0] == 0.0);
    CHECK(pop[2].genes[0] == 1.0);
    CHECK(pop[3].genes[0] == 3.0);
}

TEST_CASE("solve is deterministic per seed") {
    const RobotModel model;
    Rng rng(11);
    const Pose9 target = oracle_pose(random_genes(rng));
    BmaParams p;
    p.rng_seed = 99;
    const SolveReport a = solve_ik(target, p, model);
    const SolveReport b = solve_ik(target, p, model);
    CHECK(a.trace == b.trace);
    CHECK(a.best_angles == b.best_angles);
    CHECK(a.best_cost == b.best_cost);
    CHECK(a.evaluations == b.evaluations);

    std::ostringstream sa, sb;
    write_report_jsonl(a, sa);
    write_report_jsonl(b, sb);
    CHECK(sa.str() == sb.str());

    p.rng_seed = 100;
    CHECK_FALSE(solve_ik(target, p, model).trace == a.trace);
}

TEST_CASE("unreachable targets return a best effort") {
    const RobotModel model;
    const Pose9 far = Pose9::from_flat({10, 10, 10, 10, 10, 10, 10, 10, 10});
    const SolveReport r = solve_ik(far, BmaParams{}, model);
    CHECK(r.best_cost > 0.0);
    CHECK(r.generations_run == 35);
    CHECK(model.limits.contains(r.best_angles));
}

TEST_CASE("solve traces are monotone and round-trip") {
    const RobotModel model;
    Rng rng(12);
    int successes = 0;
    for (int i = 0; i < 30; ++i) {
        const Chromosome star = random_genes(rng);
        const Pose9 target = oracle_pose(star);
        BmaParams p;
        p.rng_seed = derive_seed(12, static_cast<std::uint64_t>(i));
        p.target_cost = 1e-6;
        const SolveReport r = solve_ik(target, p, model);
        for (std::size_t g = 1; g < r.trace.size(); ++g) CHECK(r.trace[g].best_cost <= r.trace[g - 1].best_cost);
        CHECK(r.best_cost == evaluate(r.best_angles.q, target, model));
        CHECK(model.limits.contains(r.best_angles));
        if (r.succeeded(p.target_cost)) {
            ++successes;
            CHECK(pose_error(oracle_pose(star), oracle_pose(r.best_angles.q)) <= p.target_cost);
        }
    }
    CHECK(successes > 0);
}

TEST_CASE("early stop at the target cost") {
    const RobotModel model;
    Rng rng(13);
    BmaParams p;
    p.target_cost = 1.0;  // any random population already satisfies this
    const SolveReport r = solve_ik(oracle_pose(random_genes(rng)), p, model);
    CHECK(r.generations_run == 0);
    CHECK(r.trace.empty());
    CHECK(r.succeeded(1.0));
}

TEST_CASE("report log has one line per generation plus a summary") {
    const RobotModel model;
    Rng rng(14);
    BmaParams p;
    p.n_gen = 5;
    p.target_cost = 0.0;
    const SolveReport r = solve_ik(oracle_pose(random_genes(rng)), p, model);
    std::ostringstream out;
    write_report_jsonl(r, out);
    const std::string text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 6);
    CHECK(text.find("\"summary\":true") != std::string::npos);
    CHECK(text.find("wall") == std::string::npos);
}

TEST_CASE("seed derivation spreads nearby indices") {
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    static_assert(derive_seed(5, 3) == derive_seed(5, 3));
}

}  // TEST_SUITE
