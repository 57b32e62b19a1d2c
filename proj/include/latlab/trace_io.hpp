#pragma once
// Trace serialization: CSV with full double round-trip fidelity and a
// self-contained SVG time-series plot. All writes are atomic (temp file +
// rename) and byte-deterministic.

#include <stdexcept>
#include <string>
#include <vector>

#include "latlab/sim.hpp"

namespace latlab {

struct UnknownChannelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Column/channel names for a trace: t, vy_true, r_true, vy_nom, r_nom,
/// mz_nom, mz_inj, delta_nom, delta_inj, then y_true_k, y_recv_k, y_nom_k per
/// output channel k, then clipped.
std::vector<std::string> trace_channels(const Trace& trace);

/// One header line plus one line per row; numeric fields with 17 significant
/// digits so parsing restores the exact doubles.
void emit_csv(const Trace& trace, const std::string& path);

std::string trace_to_csv(const Trace& trace);

/// Inverse of emit_csv (bit-exact for finite values).
Trace parse_csv(const std::string& path);
Trace trace_from_csv(const std::string& text);

/// Time-series plot of the named channels. Unknown names throw
/// UnknownChannelError; an empty channel list yields an axes-only figure.
void emit_plot(const Trace& trace, const std::vector<std::string>& channels,
               const std::string& path);

std::string trace_to_svg(const Trace& trace, const std::vector<std::string>& channels);

/// Write-to-temp-then-rename in the target directory.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace latlab
