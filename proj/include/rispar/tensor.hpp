#pragma once

// Dense complex helpers and three-way tensor machinery.
//
// Index conventions (0-based) shared by every routine in the library:
//   khatri_rao(A, B)  row i*J + j       (A is I x R, B is J x R)
//   mode 1 unfolding  row m*P + p, col k   (PM x K)
//   mode 2 unfolding  row p*K + k, col m   (KP x M)
//   mode 3 unfolding  row k*M + m, col p   (MK x P)
// With Z = compose_tensor(Hr, Hs, Phi) these give
//   Z1 = khatri_rao(Hs^T, Phi) Hr^T
//   Z2 = khatri_rao(Phi, Hr) Hs
//   Z3 = khatri_rao(Hr, Hs^T) Phi^T

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <vector>

namespace rispar {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Throws RejectedInput if any entry is NaN or infinite.
void require_finite(const ComplexMatrix& m, const char* name);

class ThreeWayTensor {
public:
    ThreeWayTensor() = default;
    ThreeWayTensor(std::size_t dim_i, std::size_t dim_j, std::size_t dim_k);

    std::size_t dim_i() const noexcept { return dim_i_; }
    std::size_t dim_j() const noexcept { return dim_j_; }
    std::size_t dim_k() const noexcept { return dim_k_; }
    std::size_t size() const noexcept { return data_.size(); }

    Complex& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(k * dim_j_ + j) * dim_i_ + i];
    }
    const Complex& operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(k * dim_j_ + j) * dim_i_ + i];
    }

    /// Frontal slice k as a dim_i x dim_j matrix.
    ComplexMatrix slice(std::size_t k) const;
    void set_slice(std::size_t k, const ComplexMatrix& s);

    const std::vector<Complex>& data() const noexcept { return data_; }

    double squared_norm() const;

    ThreeWayTensor& operator+=(const ThreeWayTensor& other);
    ThreeWayTensor& operator-=(const ThreeWayTensor& other);

    friend bool operator==(const ThreeWayTensor&, const ThreeWayTensor&) = default;

private:
    std::size_t dim_i_ = 0;
    std::size_t dim_j_ = 0;
    std::size_t dim_k_ = 0;
    std::vector<Complex> data_;
};

/// Column-wise Kronecker product.
ComplexMatrix khatri_rao(const ComplexMatrix& a, const ComplexMatrix& b);

/// Z(k, m, p) = sum_n Hr(k, n) Hs(n, m) Phi(p, n).
ThreeWayTensor compose_tensor(const ComplexMatrix& hr, const ComplexMatrix& hs,
                              const ComplexMatrix& phi);

ComplexMatrix unfold(const ThreeWayTensor& z, int mode);

/// Inverse of unfold for a tensor with the given dimensions.
ThreeWayTensor fold(const ComplexMatrix& unfolded, int mode, std::size_t dim_i,
                    std::size_t dim_j, std::size_t dim_k);

/// Relative singular-value threshold used by kruskal_rank.
inline constexpr double kRankTolerance = 1e-10;

/// Largest k such that every k-column subset is linearly independent.
/// Exhaustive over subsets, so limited to 8 columns.
int kruskal_rank(const ComplexMatrix& a);

/// Numerical rank with singular values above tol * largest.
int numerical_rank(const ComplexMatrix& a, double tol = kRankTolerance);

}  // namespace rispar
