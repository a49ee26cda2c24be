#include "drivenmem/ensemble_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "drivenmem/error.hpp"

namespace drivenmem {

namespace {

std::string exact(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", x);
    return buf;
}

double parse_double(const std::string& s, std::size_t line) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size()) {
        throw ValidationError("ensemble table line " + std::to_string(line) + ": bad number '" + s + "'");
    }
    return v;
}

}  // namespace

void write_ensemble(std::ostream& out, const Ensemble& ens) {
    const auto& meta = ens.metadata();
    out << "# drivenmem ensemble\n";
    out << "# gamma = " << exact(ens.gamma()) << '\n';
    out << "# scheme = " << meta.scheme << '\n';
    out << "# truncated_mass = " << exact(meta.truncated_mass) << '\n';
    out << "# columns: omega coupling\n";
    const auto& w = ens.frequencies();
    const auto& g = ens.couplings();
    for (std::size_t k = 0; k < w.size(); ++k) out << exact(w[k]) << ' ' << exact(g[k]) << '\n';
}

Ensemble read_ensemble(std::istream& in) {
    std::vector<double> w, g;
    EnsembleMetadata meta;
    double gamma = 0.0;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::istringstream key_stream(line.substr(1, eq - 1));
            std::string key;
            key_stream >> key;
            std::istringstream val_stream(line.substr(eq + 1));
            std::string val;
            val_stream >> val;
            if (key == "gamma") gamma = parse_double(val, n);
            else if (key == "scheme") meta.scheme = val;
            else if (key == "truncated_mass") meta.truncated_mass = parse_double(val, n);
            continue;
        }
        std::istringstream row(line);
        std::string a, b, extra;
        if (!(row >> a >> b) || (row >> extra)) {
            throw ValidationError("ensemble table line " + std::to_string(n) + ": expected two columns");
        }
        w.push_back(parse_double(a, n));
        g.push_back(parse_double(b, n));
    }
    if (w.empty()) throw ValidationError("ensemble table has no spins");
    meta.window_warning = meta.truncated_mass > 1e-3;
    return Ensemble::from_spins(std::move(w), std::move(g), gamma, {}, meta);
}

void save_ensemble(const std::string& path, const Ensemble& ens) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    write_ensemble(out, ens);
}

Ensemble load_ensemble(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path);
    return read_ensemble(in);
}

}  // namespace drivenmem
