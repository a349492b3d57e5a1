#include "partner/parallel.hpp"

#include <cstddef>
#include <exception>
#include <stdexcept>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace partner {

namespace {

void require_same_size(std::size_t in, std::size_t out) {
    if (in != out) throw std::invalid_argument("batch input and output sizes differ");
}

// Exceptions must not escape an OpenMP region; the first one is kept and
// rethrown on the calling thread.
class FirstError {
public:
    void capture() {
#pragma omp critical(partner_first_error)
        if (!error_) error_ = std::current_exception();
    }
    void rethrow() const {
        if (error_) std::rethrow_exception(error_);
    }

private:
    std::exception_ptr error_;
};

BmaParams params_for(const BmaParams& params, std::size_t index) {
    BmaParams p = params;
    p.rng_seed = derive_seed(params.rng_seed, index);
    return p;
}

}  // namespace

int parallel_threads() {
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void forward_kinematics_batch(std::span<const JointAngles> angles, const LinkLengths& links, FkVariant variant,
                              std::span<Pose9> out) {
    require_same_size(angles.size(), out.size());
    const auto n = static_cast<std::ptrdiff_t>(angles.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[i] = forward_kinematics(angles[i], links, variant);
    }
}

void forward_kinematics_batch_serial(std::span<const JointAngles> angles, const LinkLengths& links,
                                     FkVariant variant, std::span<Pose9> out) {
    require_same_size(angles.size(), out.size());
    for (std::size_t i = 0; i < angles.size(); ++i) {
        out[i] = forward_kinematics(angles[i], links, variant);
    }
}

void evaluate_batch(const Objective& objective, std::span<const Chromosome> genes, std::span<double> costs) {
    require_same_size(genes.size(), costs.size());
    const auto n = static_cast<std::ptrdiff_t>(genes.size());
    // cost() throws LimitViolation in checked builds.
    FirstError error;
#pragma omp parallel for schedule(static) if (genes.size() >= kParallelEvalThreshold)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            costs[i] = objective.cost(genes[i]);
        } catch (...) {
            error.capture();
        }
    }
    error.rethrow();
    objective.add_evaluations(genes.size());
}

void evaluate_batch_serial(const Objective& objective, std::span<const Chromosome> genes,
                           std::span<double> costs) {
    require_same_size(genes.size(), costs.size());
    for (std::size_t i = 0; i < genes.size(); ++i) {
        costs[i] = objective.evaluate(genes[i]);
    }
}

std::vector<SolveReport> solve_batch(std::span<const Pose9> targets, const BmaParams& params,
                                     const RobotModel& model) {
    params.validate();
    std::vector<SolveReport> reports(targets.size());
    const auto n = static_cast<std::ptrdiff_t>(targets.size());
    FirstError error;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            reports[i] = solve_ik(targets[i], params_for(params, static_cast<std::size_t>(i)), model);
        } catch (...) {
            error.capture();
        }
    }
    error.rethrow();
    return reports;
}

std::vector<SolveReport> solve_batch_serial(std::span<const Pose9> targets, const BmaParams& params,
                                            const RobotModel& model) {
    params.validate();
    std::vector<SolveReport> reports;
    reports.reserve(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        reports.push_back(solve_ik(targets[i], params_for(params, i), model));
    }
    return reports;
}

}  // namespace partner
