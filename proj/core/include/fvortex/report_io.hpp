#pragma once

// Plain-text artifacts. Numbers are printed with 17 significant digits so
// files round-trip exactly and identical runs give identical bytes.

#include <filesystem>
#include <string>
#include <string_view>

#include "fvortex/dynamics.hpp"
#include "fvortex/stability.hpp"
#include "fvortex/vortex_energy.hpp"

namespace fvortex {

std::string format_number(double v);

/// Writes to a sibling temporary and renames it over `path`. Creates missing
/// parent directories. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// i,j,G_ij,contribution
std::string pairs_csv(const EnergyReport& report);
/// k,lambda
std::string spectrum_csv(const StabilityReport& report);
/// t,i,x1,x2,d,W,grad_norm,diss_lhs,diss_rhs in long format, one row per
/// state and vortex. The dissipation columns describe the step that ended at
/// the state and are empty on the initial one.
std::string flow_csv(const FlowTrajectory& trajectory);

}  // namespace fvortex
