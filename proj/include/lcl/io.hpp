#pragma once

#include "lcl/diagnostics.hpp"
#include "lcl/particle.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lcl::io {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 17 significant digits, '.' decimal separator, independent of the locale.
std::string format_real(double x);

/// Shortest text that reads back to the same double; integral values keep a
/// trailing ".0".
std::string format_shortest(double x);

/// RFC 4180 writer: comma separated, CRLF line ends, fields quoted only when needed.
class CsvWriter {
public:
    explicit CsvWriter(const std::vector<std::string>& header);

    CsvWriter& field(const std::string& text);
    CsvWriter& field(double x);
    CsvWriter& field(const std::optional<double>& x);  ///< empty field when absent
    CsvWriter& field(std::size_t x);
    CsvWriter& field(bool x);
    /// Throws IoError if the row width differs from the header.
    void end_row();

    const std::string& text() const { return text_; }

private:
    std::size_t columns_;
    std::size_t in_row_ = 0;
    std::string text_;
};

/// Parsed RFC 4180 table. Throws IoError with a line number on malformed input.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable parse_csv(const std::string& text);

/// Writes to a temporary file in the same directory, then renames over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

inline const std::vector<std::string> kTrajectoryColumns = {
    "t", "mass", "px", "py", "pz", "energy", "entropy_est", "linf_est", "rho_hat", "w2_est", "skipped_pairs"};
inline const std::vector<std::string> kSnapshotColumns = {"vx", "vy", "vz"};
inline const std::vector<std::string> kResidualColumns = {"phi", "t0", "t1", "lhs", "rhs", "residual", "stderr"};
inline const std::vector<std::string> kEnvelopeColumns = {"t", "gamma", "integral_gamma", "envelope", "rho_hat"};
inline const std::vector<std::string> kStabilityColumns = {"gap",       "initial_w2_sq", "sup_rho_hat",
                                                           "sup_w2_sq", "gamma_total",   "certificate"};
inline const std::vector<std::string> kOracleColumns = {"name", "parameter", "value", "lhs", "budget",
                                                        "ratio", "stderr", "holds"};

std::string trajectory_csv(const std::vector<TrajectoryRow>& rows);
std::string snapshot_csv(const std::vector<Velocity>& velocities);
std::string residual_csv(const std::vector<WeakResidual>& residuals);
std::string envelope_csv(const std::vector<EnvelopeRow>& rows);
std::string stability_csv(const std::vector<StabilityRow>& rows);

/// Velocities from a snapshot CSV with header vx,vy,vz. Throws IoError.
std::vector<Velocity> read_snapshot(const std::filesystem::path& path);

}  // namespace lcl::io
