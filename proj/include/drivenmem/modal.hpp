#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace drivenmem {

using cplx = std::complex<double>;

/// Eigen-decomposition of a complex-symmetric single-excitation Hamiltonian,
/// H = sum_j lambda_j v_j v_j^T / (v_j^T v_j).
///
/// Time evolution is exp(-i H t); with passive damping every eigenvalue has
/// a non-positive imaginary part.
class ModalDecomposition {
public:
    virtual ~ModalDecomposition() = default;

    [[nodiscard]] virtual std::size_t dimension() const = 0;
    [[nodiscard]] virtual const std::vector<cplx>& eigenvalues() const = 0;

    /// Per-mode weights w_j = (bra^H v_j)(v_j^T ket)/(v_j^T v_j), so that
    /// <bra| exp(-iHt) |ket> = sum_j w_j exp(-i lambda_j t).
    [[nodiscard]] virtual std::vector<cplx> mode_weights(const Eigen::VectorXcd& bra,
                                                        const Eigen::VectorXcd& ket) const = 0;

    /// Full state exp(-iHt) ket. O(dim^2).
    [[nodiscard]] virtual Eigen::VectorXcd propagate(const Eigen::VectorXcd& ket, double t) const = 0;

    /// Cavity fraction |v_j[0]|^2 / sum_i |v_j[i]|^2 of each mode.
    [[nodiscard]] virtual std::vector<double> cavity_fractions() const = 0;

    /// Diagnostic name of the backend ("dense" or "arrowhead").
    [[nodiscard]] virtual const char* backend() const = 0;
};

/// sum_j weights_j exp(-i lambda_j t)
cplx modal_sum(const std::vector<cplx>& eigenvalues, const std::vector<cplx>& weights, double t);

/// Dense backend: general complex eigensolver on the full matrix.
/// Throws NumericalError (with the reciprocal condition number of the
/// eigenvector matrix in the message) when the eigenbasis is numerically
/// singular.
std::unique_ptr<ModalDecomposition> dense_decomposition(const Eigen::MatrixXcd& h);

/// Arrowhead description: apex h_00, spin poles p_k - i*eta (common eta),
/// real couplings z_k in the first row and column.
struct ArrowheadSpec {
    cplx apex;
    std::vector<double> poles;  ///< ascending
    std::vector<double> arms;
    double eta = 0.0;
};

/// Secular-equation backend, O(dim^2) time and O(dim) memory. Degenerate
/// poles and vanishing couplings are deflated exactly. Throws NumericalError
/// if the root set fails its consistency checks.
std::unique_ptr<ModalDecomposition> arrowhead_decomposition(const ArrowheadSpec& spec);

}  // namespace drivenmem
