#pragma once

#include <span>
#include <vector>

#include "partner/ik_solver.hpp"
#include "partner/kinematics.hpp"

// Data-parallel kernels. Each OpenMP kernel has a serial twin with identical
// results; the serial versions are the reference the tests compare against.

namespace partner {

/// Batches smaller than this are evaluated on the calling thread.
inline constexpr std::size_t kParallelEvalThreshold = 64;

void forward_kinematics_batch(std::span<const JointAngles> angles, const LinkLengths& links, FkVariant variant,
                              std::span<Pose9> out);
void forward_kinematics_batch_serial(std::span<const JointAngles> angles, const LinkLengths& links,
                                     FkVariant variant, std::span<Pose9> out);

/// Writes objective.cost(genes[i]) into costs[i] and counts the evaluations.
void evaluate_batch(const Objective& objective, std::span<const Chromosome> genes, std::span<double> costs);
void evaluate_batch_serial(const Objective& objective, std::span<const Chromosome> genes, std::span<double> costs);

/// Independent solves; target i uses seed derive_seed(params.rng_seed, i).
std::vector<SolveReport> solve_batch(std::span<const Pose9> targets, const BmaParams& params,
                                     const RobotModel& model);
std::vector<SolveReport> solve_batch_serial(std::span<const Pose9> targets, const BmaParams& params,
                                            const RobotModel& model);

int parallel_threads();

}  // namespace partner
