#pragma once

#include <iosfwd>
#include <string>

#include "climrl/nn/mlp.hpp"

namespace climrl::nn {

inline constexpr int kCheckpointVersion = 1;

// Text format: a "climrl-mlp <version>" line, the network spec, then every
// parameter value (%.17g) in declaration order. Round trips are exact.
void write_checkpoint(std::ostream& out, const Mlp& net);
Mlp read_checkpoint(std::istream& in);

// Atomic on POSIX: writes a temporary file and renames it over `path`.
void save_checkpoint(const std::string& path, const Mlp& net);
Mlp load_checkpoint(const std::string& path);

}  // namespace climrl::nn
