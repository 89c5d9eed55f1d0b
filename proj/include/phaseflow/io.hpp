#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>

#include "phaseflow/moments.hpp"
#include "phaseflow/states.hpp"

namespace phaseflow::io {

// Snapshot container: the 8-byte magic "PFGRID1\n", a little-endian uint64 header
// length, a UTF-8 JSON header, then the payload as little-endian float64
// (complex values interleaved re, im).

void write_wavefunction(const std::filesystem::path& path, const WavefunctionGrid& w);
WavefunctionGrid read_wavefunction(const std::filesystem::path& path);

/// Writes a classical grid, or a Wigner grid when `hbar` is given.
void write_phase_grid(const std::filesystem::path& path, const PhaseSpaceGrid& g,
                      std::optional<double> hbar = std::nullopt);

struct PhaseGridSnapshot {
  PhaseSpaceGrid grid;
  std::optional<double> hbar;  // set for Wigner grids
};
PhaseGridSnapshot read_phase_grid(const std::filesystem::path& path);

/// Long-format moment table `t,n,k,value,flavor[,closure]`.
class MomentCsv {
 public:
  MomentCsv(const std::filesystem::path& path, bool with_closure = false);
  void write(double t, const MomentSet& m, std::string_view closure = {});

 private:
  std::ofstream out_;
  bool with_closure_;
};

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

}  // namespace phaseflow::io
