#include "drivenmem/csv.hpp"

#include <cstdio>
#include <fstream>

#include "drivenmem/error.hpp"

namespace drivenmem {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    return out;
}

}  // namespace

std::string csv_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

void write_spectrum_csv(const std::string& path, const TransmissionSpectrum& spec) {
    auto out = open_out(path);
    out << "omega,re_t,im_t,abs_t2\n";
    for (std::size_t i = 0; i < spec.omega.size(); ++i) {
        out << csv_number(spec.omega[i]) << ',' << csv_number(spec.t[i].real()) << ','
            << csv_number(spec.t[i].imag()) << ',' << csv_number(spec.abs2[i]) << '\n';
    }
}

void write_overlap_csv(const std::string& path, const std::vector<double>& t, const std::vector<cplx>& f) {
    detail::require(t.size() == f.size(), "time and overlap columns differ in length");
    auto out = open_out(path);
    out << "t,re_f,im_f,F\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
        out << csv_number(t[i]) << ',' << csv_number(f[i].real()) << ',' << csv_number(f[i].imag()) << ','
            << csv_number(std::norm(f[i])) << '\n';
    }
}

void write_columns_csv(const std::string& path, const std::string& x_name, const std::string& y_name,
                       const std::vector<double>& x, const std::vector<double>& y) {
    detail::require(x.size() == y.size(), "CSV columns differ in length");
    auto out = open_out(path);
    out << x_name << ',' << y_name << '\n';
    for (std::size_t i = 0; i < x.size(); ++i) out << csv_number(x[i]) << ',' << csv_number(y[i]) << '\n';
}

void write_fidelity_report(const std::string& path, const FidelityReport& rep,
                           const std::vector<std::pair<std::string, std::string>>& extra) {
    write_overlap_csv(path, rep.t, rep.f);
    auto meta = open_out(path + ".meta");
    meta << "detuning = " << csv_number(rep.detuning) << '\n';
    if (rep.optimal_detuning) meta << "optimal_detuning = " << csv_number(*rep.optimal_detuning) << '\n';
    meta << "target_time = " << csv_number(rep.target_time) << '\n';
    meta << "target_fidelity = " << csv_number(rep.target_fidelity) << '\n';
    meta << "collective = " << csv_number(rep.collective) << '\n';
    meta << "n_spins = " << rep.n_spins << '\n';
    meta << "truncated_mass = " << csv_number(rep.truncated_mass) << '\n';
    meta << "window_warning = " << (rep.window_warning ? "true" : "false") << '\n';
    meta << "method = " << rep.method << '\n';
    meta << "backend = " << rep.backend << '\n';
    if (rep.method_residual) meta << "method_residual = " << csv_number(*rep.method_residual) << '\n';
    for (const auto& [k, v] : extra) meta << k << " = " << v << '\n';
}

}  // namespace drivenmem
