#pragma once

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "drivenmem/dynamics.hpp"
#include "drivenmem/memory.hpp"

namespace drivenmem {

/// 12 significant digits, the precision of every CSV column.
std::string csv_number(double x);

/// omega,re_t,im_t,abs_t2
void write_spectrum_csv(const std::string& path, const TransmissionSpectrum& spec);
/// t,re_f,im_f,F
void write_overlap_csv(const std::string& path, const std::vector<double>& t, const std::vector<cplx>& f);
/// Two named columns.
void write_columns_csv(const std::string& path, const std::string& x_name, const std::string& y_name,
                       const std::vector<double>& x, const std::vector<double>& y);

/// F(t) table at `path` plus a key = value metadata file at `path + ".meta"`.
void write_fidelity_report(const std::string& path, const FidelityReport& rep,
                           const std::vector<std::pair<std::string, std::string>>& extra = {});

}  // namespace drivenmem
