#include "partner/ik_solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <span>
#include <string>

#include "json.hpp"
#include "partner/parallel.hpp"

namespace partner {

namespace {

void require(bool condition, const char* message) {
    if (!condition) throw InvalidParameters(message);
}

double norm(const Gradient& g) {
    double sum = 0.0;
    for (double v : g) sum += v * v;
    return std::sqrt(sum);
}

}  // namespace

void BmaParams::validate() const {
    require(n_gen >= 0, "n_gen must be >= 0");
    require(n_ind >= 2, "n_ind must be >= 2");
    require(n_clones >= 1, "n_clones must be >= 1");
    require(l_bm >= 1 && l_bm <= static_cast<int>(kJointCount), "l_bm must be in [1, 8]");
    require(n_inf >= 0, "n_inf must be >= 0");
    require(l_gt >= 1 && l_gt <= static_cast<int>(kJointCount), "l_gt must be in [1, 8]");
    require(lm_prob >= 0.0 && lm_prob <= 1.0, "lm_prob must be in [0, 1]");
    require(lm_iter >= 0, "lm_iter must be >= 0");
    require(std::isfinite(gamma_init) && gamma_init > 0.0, "gamma_init must be > 0");
    require(std::isfinite(tau) && tau > 0.0, "tau must be > 0");
    require(std::isfinite(fd_step) && fd_step > 0.0, "fd_step must be > 0");
    require(std::isfinite(target_cost) && target_cost >= 0.0, "target_cost must be >= 0");
}

Objective::Objective(const RobotModel& model, const Pose9& target) : model_(&model), target_(target) {}

double Objective::cost(const Chromosome& genes) const {
#if defined(PARTNER_CHECKED_LIMITS)
    if (!model_->limits.contains(JointAngles{genes})) {
        throw LimitViolation("chromosome outside joint limits reached the objective");
    }
#endif
    return pose_error(target_, forward_kinematics(JointAngles{genes}, model_->links, model_->variant));
}

double evaluate(const Chromosome& genes, const Pose9& target, const RobotModel& model) {
    return Objective(model, target).cost(genes);
}

Gradient central_gradient(const Objective& objective, const Chromosome& genes, double step) {
    const auto& limits = objective.model().limits;
    Gradient g{};
    for (std::size_t i = 0; i < kJointCount; ++i) {
        Chromosome plus = genes;
        Chromosome minus = genes;
        plus[i] = std::min(genes[i] + step, limits[i].max);
        minus[i] = std::max(genes[i] - step, limits[i].min);
        const double spacing = plus[i] - minus[i];
        if (spacing <= 0.0) continue;
        g[i] = (objective.evaluate(plus) - objective.evaluate(minus)) / spacing;
    }
    return g;
}

std::optional<Gradient> damped_step(const Gradient& gradient, double gamma) {
    using Mat8 = Eigen::Matrix<double, kJointCount, kJointCount>;
    using Vec8 = Eigen::Matrix<double, kJointCount, 1>;

    const Vec8 g = Eigen::Map<const Vec8>(gradient.data());
    // Eigenvalues are gamma (seven times) and gamma + |g|^2.
    const double condition = (gamma + g.squaredNorm()) / gamma;
    if (!(gamma > 0.0) || !std::isfinite(condition) || condition > kMaxConditionNumber) return std::nullopt;

    const Mat8 system = g * g.transpose() + gamma * Mat8::Identity();
    const Eigen::LLT<Mat8> llt(system);
    if (llt.info() != Eigen::Success) return std::nullopt;
    const Vec8 s = llt.solve(-g);

    Gradient out{};
    Eigen::Map<Vec8>(out.data()) = s;
    return out;
}

double update_gamma(double gamma, double trust_ratio) {
    if (trust_ratio < 0.25) return 4.0 * gamma;
    if (trust_ratio > 0.75) return gamma / 2.0;
    return gamma;
}

LmReport lm_local_search(Bacterium& bacterium, const Objective& objective, const BmaParams& params) {
    const auto& limits = objective.model().limits;
    LmReport report;
    double cost = bacterium.cost ? *bacterium.cost : objective.evaluate(bacterium.genes);
    double gamma = params.gamma_init;

    for (int k = 0; k < params.lm_iter; ++k) {
        const Gradient g = central_gradient(objective, bacterium.genes, params.fd_step);
        ++report.iterations;
        const double g_norm = norm(g);
        if (g_norm <= params.tau) {
            report.converged = true;
            break;
        }
        const auto step = damped_step(g, gamma);
        if (!step) {
            report.degenerate = true;
            break;
        }

        Chromosome candidate{};
        double predicted = 0.0;
        for (std::size_t i = 0; i < kJointCount; ++i) {
            candidate[i] = std::clamp(bacterium.genes[i] + (*step)[i], limits[i].min, limits[i].max);
            predicted += g[i] * (candidate[i] - bacterium.genes[i]);
        }
        const double candidate_cost = objective.evaluate(candidate);
        // A clamped-away or non-descent step predicts no decrease; treat it as
        // a failed trust test so the damping grows.
        const double ratio = predicted < 0.0 ? (candidate_cost - cost) / predicted : 0.0;

        LmIteration it;
        it.gamma = gamma;
        it.gradient_norm = g_norm;
        it.cost_before = cost;
        it.cost_candidate = candidate_cost;
        it.trust_ratio = ratio;
        it.accepted = candidate_cost < cost;
        report.steps.push_back(it);

        gamma = update_gamma(gamma, ratio);
        if (it.accepted) {
            bacterium.genes = candidate;
            cost = candidate_cost;
        }
    }
    bacterium.cost = cost;
    report.final_gamma = gamma;
    return report;
}

void bacterial_mutation(Population& population, const Objective& objective, const BmaParams& params, Rng& rng) {
    const auto& limits = objective.model().limits;
    const auto segment_length = static_cast<std::size_t>(params.l_bm);
    const std::size_t segment_count = (kJointCount + segment_length - 1) / segment_length;
    const auto clone_count = static_cast<std::size_t>(params.n_clones);

    std::vector<std::size_t> order(segment_count);
    std::vector<Chromosome> clones(clone_count);
    std::vector<double> costs(clone_count);

    for (auto& bacterium : population) {
        if (!bacterium.cost) bacterium.cost = objective.evaluate(bacterium.genes);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        std::fill(clones.begin(), clones.end(), bacterium.genes);
        double best_cost = *bacterium.cost;

        for (const std::size_t segment : order) {
            const std::size_t first = segment * segment_length;
            const std::size_t last = std::min(kJointCount, first + segment_length);
            if (clone_count < 2) break;

            // Clone 0 stays as the original. All draws happen before any
            // evaluation so the batch may run in parallel.
            for (std::size_t c = 1; c < clone_count; ++c) {
                for (std::size_t gene = first; gene < last; ++gene) {
                    std::uniform_real_distribution<double> dist(limits[gene].min, limits[gene].max);
                    clones[c][gene] = dist(rng);
                }
            }
            costs[0] = best_cost;
            evaluate_batch(objective, std::span<const Chromosome>(clones).subspan(1),
                           std::span<double>(costs).subspan(1));

            const auto best = static_cast<std::size_t>(
                std::distance(costs.begin(), std::min_element(costs.begin(), costs.end())));
            for (std::size_t c = 0; c < clone_count; ++c) {
                if (c == best) continue;
                std::copy(clones[best].begin() + first, clones[best].begin() + last, clones[c].begin() + first);
            }
            best_cost = costs[best];
        }
        bacterium.genes = clones[0];
        bacterium.cost = best_cost;
    }
}

void sort_population(Population& population) {
    std::stable_sort(population.begin(), population.end(),
                     [](const Bacterium& a, const Bacterium& b) { return *a.cost < *b.cost; });
}

void gene_transfer(Population& population, const Objective& objective, const BmaParams& params, Rng& rng) {
    for (auto& b : population) {
        if (!b.cost) b.cost = objective.evaluate(b.genes);
    }
    sort_population(population);
    const std::size_t n = population.size();
    const std::size_t better = (n + 1) / 2;  // odd sizes put the median in the better half
    if (n < 2 || better >= n) return;

    std::array<std::size_t, kJointCount> positions{};
    for (int t = 0; t < params.n_inf; ++t) {
        std::uniform_int_distribution<std::size_t> pick_source(0, better - 1);
        std::uniform_int_distribution<std::size_t> pick_dest(better, n - 1);
        const std::size_t source = pick_source(rng);
        const std::size_t dest = pick_dest(rng);

        std::iota(positions.begin(), positions.end(), std::size_t{0});
        for (std::size_t k = 0; k < static_cast<std::size_t>(params.l_gt); ++k) {
            std::uniform_int_distribution<std::size_t> pick(k, kJointCount - 1);
            std::swap(positions[k], positions[pick(rng)]);
            const std::size_t gene = positions[k];
            population[dest].genes[gene] = population[source].genes[gene];
        }
        population[dest].cost = objective.evaluate(population[dest].genes);
        sort_population(population);
    }
}

SolveReport solve_ik(const Pose9& target, const BmaParams& params, const RobotModel& model) {
    params.validate();
    model.links.validate();
    if (!target.all_finite()) throw std::invalid_argument("IK target must be finite");

    const auto started = std::chrono::steady_clock::now();
    Rng rng(params.rng_seed);
    const Objective objective(model, target);
    const auto& limits = model.limits;

    Population population(static_cast<std::size_t>(params.n_ind));
    for (auto& b : population) {
        for (std::size_t gene = 0; gene < kJointCount; ++gene) {
            std::uniform_real_distribution<double> dist(limits[gene].min, limits[gene].max);
            b.genes[gene] = dist(rng);
        }
        b.cost = objective.evaluate(b.genes);
    }

    SolveReport report;
    Chromosome best_genes = population.front().genes;
    double best_cost = *population.front().cost;
    auto track_best = [&] {
        for (const auto& b : population) {
            if (*b.cost < best_cost) {
                best_cost = *b.cost;
                best_genes = b.genes;
            }
        }
    };
    track_best();

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int gen = 1; gen <= params.n_gen && best_cost > params.target_cost; ++gen) {
        bacterial_mutation(population, objective, params, rng);

        GenerationRecord record;
        record.generation = gen;
        for (auto& b : population) {
            if (unit(rng) >= params.lm_prob) continue;
            const LmReport lm = lm_local_search(b, objective, params);
            ++record.lm_invocations;
            record.gamma_min = std::min(record.gamma_min.value_or(lm.final_gamma), lm.final_gamma);
            record.gamma_max = std::max(record.gamma_max.value_or(lm.final_gamma), lm.final_gamma);
        }

        gene_transfer(population, objective, params, rng);
        track_best();

        report.lm_invocations += record.lm_invocations;
        record.best_cost = best_cost;
        record.evaluations = objective.evaluations();
        report.trace.push_back(record);
        report.generations_run = gen;
    }

    report.best_angles = JointAngles{best_genes};
    report.best_cost = best_cost;
    report.evaluations = objective.evaluations();
    report.wall_time = std::chrono::steady_clock::now() - started;
    return report;
}

void write_report_jsonl(const SolveReport& report, std::ostream& out) {
    using nlohmann::json;
    for (const auto& r : report.trace) {
        json line = {
            {"generation", r.generation},
            {"best_cost", r.best_cost},
            {"evaluations", r.evaluations},
            {"lm_invocations", r.lm_invocations},
            {"gamma_min", r.gamma_min ? json(*r.gamma_min) : json(nullptr)},
            {"gamma_max", r.gamma_max ? json(*r.gamma_max) : json(nullptr)},
        };
        out << line.dump() << '\n';
    }
    json summary = {
        {"summary", true},
        {"best_cost", report.best_cost},
        {"best_angles", report.best_angles.q},
        {"generations_run", report.generations_run},
        {"lm_invocations", report.lm_invocations},
        {"evaluations", report.evaluations},
    };
    out << summary.dump() << '\n';
}

}  // namespace partner
