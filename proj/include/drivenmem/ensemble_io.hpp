#pragma once

#include <iosfwd>
#include <string>

#include "drivenmem/spectral.hpp"

namespace drivenmem {

/// Plain-text spin table: '#' header lines (gamma, scheme, truncated mass),
/// then one "omega coupling" row per spin in 17 significant digits, so a
/// write/read cycle reproduces every double exactly.
void write_ensemble(std::ostream& out, const Ensemble& ens);
Ensemble read_ensemble(std::istream& in);

void save_ensemble(const std::string& path, const Ensemble& ens);
Ensemble load_ensemble(const std::string& path);

}  // namespace drivenmem
