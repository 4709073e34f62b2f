#pragma once

// One function per CLI verb. Each writes its CSV outputs and the effective
// configuration (config.effective) into the output directory and returns a
// short human-readable summary.

#include <string>

#include "ngf/config.hpp"

namespace ngf {

std::string cmd_train(const RunConfig& config);
std::string cmd_solve(const RunConfig& config);
std::string cmd_precondition(const RunConfig& config);
std::string cmd_hybrid(const RunConfig& config);
std::string cmd_eigs(const RunConfig& config);
std::string cmd_bias(const RunConfig& config);

/// The configured kernel: the problem's closed form or a checkpoint.
KernelSource kernel_source_for(const RunConfig& config, const ProblemSpec& spec);

}  // namespace ngf
