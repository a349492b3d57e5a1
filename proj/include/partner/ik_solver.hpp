#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "partner/kinematics.hpp"
#include "partner/random.hpp"

namespace partner {

using Chromosome = std::array<double, kJointCount>;
using Gradient = std::array<double, kJointCount>;

/// Bacterial memetic algorithm settings. Defaults are the tuned values used on
/// the robot; `rng_seed`, `target_cost` and `fd_step` are artifact knobs.
struct BmaParams {
    int n_gen = 35;
    int n_ind = 12;
    int n_clones = 10;
    int l_bm = 1;
    int n_inf = 15;
    int l_gt = 1;
    double lm_prob = 0.20;
    int lm_iter = 8;
    double gamma_init = 1.0;
    double tau = 0.0001;
    std::uint64_t rng_seed = 1;
    double target_cost = 1e-8;
    double fd_step = 1e-5;

    /// Throws InvalidParameters naming the first violated constraint.
    void validate() const;
};

class InvalidParameters : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Squared pose error of a chromosome against a fixed target. `cost` is pure and
/// thread-safe; `evaluate` additionally counts the call.
class Objective {
public:
    Objective(const RobotModel& model, const Pose9& target);

    double cost(const Chromosome& genes) const;
    double evaluate(const Chromosome& genes) const {
        ++evaluations_;
        return cost(genes);
    }
    void add_evaluations(std::uint64_t n) const { evaluations_ += n; }
    std::uint64_t evaluations() const { return evaluations_; }

    const RobotModel& model() const { return *model_; }
    const Pose9& target() const { return target_; }

private:
    const RobotModel* model_;
    Pose9 target_;
    mutable std::uint64_t evaluations_ = 0;
};

/// Thrown by checked builds when a chromosome outside the joint limits reaches
/// the objective.
class LimitViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct Bacterium {
    Chromosome genes{};
    std::optional<double> cost;  // empty means stale

    JointAngles angles() const { return JointAngles{genes}; }
};

using Population = std::vector<Bacterium>;

double evaluate(const Chromosome& genes, const Pose9& target, const RobotModel& model);

/// Central-difference gradient of the objective. Probe points are clamped to
/// the joint limits and the quotient uses the actual probe spacing.
Gradient central_gradient(const Objective& objective, const Chromosome& genes, double step);

/// Solves (g gᵀ + γ I) s = -g densely. Returns nullopt when the system's
/// condition number exceeds `kMaxConditionNumber`.
std::optional<Gradient> damped_step(const Gradient& gradient, double gamma);
inline constexpr double kMaxConditionNumber = 1e12;

/// Trust-ratio damping rule: ×4 below 0.25, ÷2 above 0.75, otherwise kept.
double update_gamma(double gamma, double trust_ratio);

struct LmIteration {
    double gamma = 0.0;          // damping used for this step
    double gradient_norm = 0.0;
    double cost_before = 0.0;
    double cost_candidate = 0.0;
    double trust_ratio = 0.0;
    bool accepted = false;
};

struct LmReport {
    int iterations = 0;
    bool converged = false;   // stopped on the gradient-norm test
    bool degenerate = false;  // linear solve refused; no step taken
    double final_gamma = 0.0;
    std::vector<LmIteration> steps;
};

/// Levenberg-Marquardt refinement of one bacterium (cost must be fresh).
LmReport lm_local_search(Bacterium& bacterium, const Objective& objective, const BmaParams& params);

/// Clone-and-select over every chromosome segment of every bacterium.
void bacterial_mutation(Population& population, const Objective& objective, const BmaParams& params, Rng& rng);

/// `n_inf` transfers of `l_gt` genes from the better half into the worse half.
/// Leaves the population sorted by cost.
void gene_transfer(Population& population, const Objective& objective, const BmaParams& params, Rng& rng);

/// Stable sort by cost; bacteria must have fresh costs.
void sort_population(Population& population);

struct GenerationRecord {
    int generation = 0;
    double best_cost = 0.0;
    std::uint64_t evaluations = 0;
    std::uint64_t lm_invocations = 0;
    std::optional<double> gamma_min;
    std::optional<double> gamma_max;

    friend bool operator==(const GenerationRecord&, const GenerationRecord&) = default;
};

struct SolveReport {
    JointAngles best_angles;
    double best_cost = 0.0;
    int generations_run = 0;
    std::uint64_t lm_invocations = 0;
    std::uint64_t evaluations = 0;
    std::chrono::duration<double> wall_time{0.0};
    std::vector<GenerationRecord> trace;

    bool succeeded(double target_cost) const { return best_cost <= target_cost; }
};

SolveReport solve_ik(const Pose9& target, const BmaParams& params, const RobotModel& model);

/// One JSON object per generation, then a summary object. Wall time is left
/// out so identical seeds give identical bytes.
void write_report_jsonl(const SolveReport& report, std::ostream& out);

}  // namespace partner
