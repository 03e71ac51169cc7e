#include "fvortex/report_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <system_error>

#include <fmt/format.h>

#include "fvortex/errors.hpp"

namespace fvortex {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // folds -0
  return fmt::format("{:.17g}", v);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.parent_path().string(), ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp.string(), std::strerror(errno));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      throw IoError(tmp.string(), "write failed");
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoError(path.string(), ec.message());
  }
}

std::string pairs_csv(const EnergyReport& report) {
  std::string out = "i,j,G_ij,contribution\n";
  for (const PairTerm& p : report.pairs) {
    out += fmt::format("{},{},{},{}\n", p.i, p.j, format_number(p.g),
                       format_number(p.contribution));
  }
  return out;
}

std::string spectrum_csv(const StabilityReport& report) {
  std::string out = "k,lambda\n";
  for (Eigen::Index k = 0; k < report.eigenvalues.size(); ++k) {
    out += fmt::format("{},{}\n", k, format_number(report.eigenvalues[k]));
  }
  return out;
}

std::string flow_csv(const FlowTrajectory& trajectory) {
  std::string out = "t,i,x1,x2,d,W,grad_norm,diss_lhs,diss_rhs\n";
  for (std::size_t k = 0; k < trajectory.states.size(); ++k) {
    const VortexConfiguration& c = trajectory.states[k];
    std::string lhs, rhs;
    if (k > 0 && k - 1 < trajectory.dissipation_lhs.size()) {
      lhs = format_number(trajectory.dissipation_lhs[k - 1]);
      rhs = format_number(trajectory.dissipation_rhs[k - 1]);
    }
    for (std::size_t i = 0; i < c.size(); ++i) {
      out += fmt::format("{},{},{},{},{},{},{},{},{}\n", format_number(trajectory.times[k]), i,
                         format_number(c.positions[i][0]), format_number(c.positions[i][1]),
                         c.degrees[i], format_number(trajectory.energies[k]),
                         format_number(trajectory.gradient_norms[k]), lhs, rhs);
    }
  }
  return out;
}

}  // namespace fvortex
