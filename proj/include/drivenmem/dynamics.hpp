#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "drivenmem/modal.hpp"
#include "drivenmem/spectral.hpp"

namespace drivenmem {

/// Cavity frequency and energy damping rate.
struct CavitySpec {
    double frequency = 0.0;
    double kappa = 0.0;
};

/// Cavity plus spin ensemble restricted to one excitation. The Hamiltonian
/// is the complex-symmetric arrowhead matrix with diagonal
/// (w_c - i kappa/2, w_k - i gamma/2) and couplings g_k in the first row and
/// column.
class SingleExcitationModel {
public:
    SingleExcitationModel(CavitySpec cavity, Ensemble ensemble);

    [[nodiscard]] const CavitySpec& cavity() const noexcept { return cavity_; }
    [[nodiscard]] const Ensemble& ensemble() const noexcept { return ensemble_; }
    [[nodiscard]] std::size_t dimension() const noexcept { return ensemble_.size() + 1; }
    [[nodiscard]] cplx cavity_diagonal() const noexcept;
    [[nodiscard]] cplx spin_diagonal(std::size_t k) const;

    [[nodiscard]] Eigen::MatrixXcd dense() const;
    [[nodiscard]] ArrowheadSpec arrowhead() const;
    /// H v in O(N).
    [[nodiscard]] Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const;

private:
    CavitySpec cavity_;
    Ensemble ensemble_;
};

SingleExcitationModel build_model(const CavitySpec& cavity, const Ensemble& ensemble);

enum class Backend { automatic, dense, arrowhead };

std::string to_string(Backend b);
Backend backend_from_string(const std::string& s);

/// automatic: dense up to 400 dimensions, arrowhead above.
std::unique_ptr<ModalDecomposition> decompose(const SingleExcitationModel& model,
                                              Backend backend = Backend::automatic);

/// How the ensemble enters the cavity self-energy in the transmission.
///  - discrete: sum_k g_k^2 / (w_k - i gamma/2 - w), one pole per spin.
///  - binned: every spin stands for a block of frequencies of its cell
///    width with a linear density profile, which removes the comb of
///    single-spin resonances a finite ensemble produces when gamma is tiny.
enum class Kernel { discrete, binned };

/// Cavity transmission (i kappa/2) / [(w_c - i kappa/2 - w) - self-energy].
/// Throws PoleError when w hits a real spin pole (gamma = 0, discrete kernel).
cplx transmission(const SingleExcitationModel& model, double omega, Kernel kernel = Kernel::discrete);

struct Peak {
    double position;
    double height;  ///< |t|^2 at the refined position
    double fwhm;    ///< NaN when a half-height crossing is outside the grid
};

struct TransmissionSpectrum {
    std::vector<double> omega;
    std::vector<cplx> t;
    std::vector<double> abs2;
    std::vector<Peak> peaks;  ///< up to two, ascending in position
};

/// Evaluates the transmission on a sorted grid (at least 3 points) and
/// describes the (up to) two tallest local maxima of |t|^2.
TransmissionSpectrum transmission_spectrum(const SingleExcitationModel& model,
                                           const std::vector<double>& omega_grid,
                                           Kernel kernel = Kernel::discrete);

/// Peak position, height and FWHM of a sampled curve; local maxima lower than
/// `min_relative_height` times the global maximum are ignored.
std::vector<Peak> find_peaks(const std::vector<double>& x, const std::vector<double>& y,
                             std::size_t max_peaks = 2, double min_relative_height = 1e-3);

struct AmplitudeTrajectory {
    std::vector<double> t;
    std::vector<cplx> alpha0;  ///< cavity amplitude
    std::vector<cplx> f;       ///< overlap with the initial state
    std::vector<double> F;     ///< |f|^2
};

/// Exact evolution exp(-iHt) psi0 through the modal decomposition. The
/// overlap uses the undamped initial vector as the bra.
AmplitudeTrajectory evolve(const SingleExcitationModel& model, const Eigen::VectorXcd& initial,
                           const std::vector<double>& times, Backend backend = Backend::automatic);
AmplitudeTrajectory evolve(const ModalDecomposition& modes, const Eigen::VectorXcd& initial,
                           const std::vector<double>& times);

/// M(s) = sum_k g_k^2 / (s + i w~_k). Throws PoleError on an exact pole.
cplx memory_kernel(const SingleExcitationModel& model, cplx s);
/// T(s) = 1 / (s + i w~_c + M(s)).
cplx cavity_resolvent(const SingleExcitationModel& model, cplx s);

/// Laplace transform of f(t) = <psi0|exp(-iHt)|psi0> for the polariton
/// psi0 = cos(theta/2)|1,G> - sin(theta/2)|0,S>, in O(N).
cplx laplace_overlap(const SingleExcitationModel& model, double theta, cplx s);
/// Same, from a precomputed M(s) (reuse across cavity detunings).
cplx laplace_overlap_from_kernel(cplx kernel, cplx s, cplx cavity_diagonal, double collective,
                                 double theta);

/// Sum of exponentials f(t) = sum_j w_j exp(-i lambda_j t), whose Laplace
/// transform is sum_j w_j / (s + i lambda_j).
struct PoleSum {
    std::vector<cplx> eigenvalues;
    std::vector<cplx> weights;

    [[nodiscard]] cplx time_value(double t) const;
    [[nodiscard]] cplx laplace_value(cplx s) const;
};

/// k-step complex-symmetric Lanczos approximant of <psi|exp(-iHt)|psi> for a
/// real vector psi. Matches the first 2k moments; steps whose Ritz values
/// reach Im(lambda) >= max_imag are dropped.
PoleSum lanczos_approximant(const SingleExcitationModel& model, const Eigen::VectorXd& psi,
                            std::size_t steps, double max_imag);

}  // namespace drivenmem
