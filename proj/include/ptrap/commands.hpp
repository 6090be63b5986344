#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "ptrap/bem.hpp"
#include "ptrap/compensation.hpp"
#include "ptrap/config.hpp"
#include "ptrap/crystal.hpp"

namespace ptrap {

enum class Command { Validate, Map, Characterize, Compensate, Crystal, Stability };

std::optional<Command> command_from_string(const std::string& name);
std::string to_string(Command command);

/// Layout, mesh and unit-potential solution for a config.
BasisSolution build_basis(const RunConfig& config, const TrapLayout& layout);

/// The configured drive, with the layout's RF electrodes filled in when none
/// are named.
DriveParams resolved_drive(const RunConfig& config, const TrapLayout& layout);

/// Axial potential of the configured trap, sampled along x through the RF
/// null. Electrodes in null_field_electrodes are first solved (least squares)
/// to cancel the static field at the null; `voltages` receives the set used.
AxialPotential sampled_axial_potential(const RunConfig& config, const TrapLayout& layout, const BasisSolution& basis,
                                       bool include_pseudo, VoltageSet* voltages = nullptr);

/// Runs one subcommand and writes its artifacts into config.output_dir.
/// Returns 0 on success, 1 on a domain error and 2 on a configuration error,
/// printing one diagnostic line to `err` on failure.
int run_command(Command command, const RunConfig& config, std::ostream& err);

}  // namespace ptrap
