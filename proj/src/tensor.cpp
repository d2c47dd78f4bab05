#include "rispar/tensor.hpp"

#include "rispar/errors.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace rispar {

void require_finite(const ComplexMatrix& m, const char* name) {
    if (!m.allFinite()) {
        throw RejectedInput(std::string(name) + " contains non-finite entries");
    }
}

ThreeWayTensor::ThreeWayTensor(std::size_t dim_i, std::size_t dim_j, std::size_t dim_k)
    : dim_i_(dim_i), dim_j_(dim_j), dim_k_(dim_k), data_(dim_i * dim_j * dim_k) {
    if (dim_i == 0 || dim_j == 0 || dim_k == 0) {
        throw RejectedInput("tensor dimensions must be positive");
    }
}

ComplexMatrix ThreeWayTensor::slice(std::size_t k) const {
    ComplexMatrix s(dim_i_, dim_j_);
    for (std::size_t j = 0; j < dim_j_; ++j) {
        for (std::size_t i = 0; i < dim_i_; ++i) {
            s(i, j) = (*this)(i, j, k);
        }
    }
    return s;
}

void ThreeWayTensor::set_slice(std::size_t k, const ComplexMatrix& s) {
    if (static_cast<std::size_t>(s.rows()) != dim_i_ ||
        static_cast<std::size_t>(s.cols()) != dim_j_ || k >= dim_k_) {
        throw RejectedInput("slice shape does not match tensor");
    }
    for (std::size_t j = 0; j < dim_j_; ++j) {
        for (std::size_t i = 0; i < dim_i_; ++i) {
            (*this)(i, j, k) = s(i, j);
        }
    }
}

double ThreeWayTensor::squared_norm() const {
    double acc = 0.0;
    for (const auto& v : data_) acc += std::norm(v);
    return acc;
}

ThreeWayTensor& ThreeWayTensor::operator+=(const ThreeWayTensor& other) {
    if (dim_i_ != other.dim_i_ || dim_j_ != other.dim_j_ || dim_k_ != other.dim_k_) {
        throw RejectedInput("tensor dimension mismatch");
    }
    for (std::size_t n = 0; n < data_.size(); ++n) data_[n] += other.data_[n];
    return *this;
}

ThreeWayTensor& ThreeWayTensor::operator-=(const ThreeWayTensor& other) {
    if (dim_i_ != other.dim_i_ || dim_j_ != other.dim_j_ || dim_k_ != other.dim_k_) {
        throw RejectedInput("tensor dimension mismatch");
    }
    for (std::size_t n = 0; n < data_.size(); ++n) data_[n] -= other.data_[n];
    return *this;
}

ComplexMatrix khatri_rao(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.cols()) {
        throw RejectedInput("khatri_rao: column counts differ (" + std::to_string(a.cols()) +
                            " vs " + std::to_string(b.cols()) + ")");
    }
    const Eigen::Index rows_a = a.rows();
    const Eigen::Index rows_b = b.rows();
    ComplexMatrix out(rows_a * rows_b, a.cols());
    for (Eigen::Index r = 0; r < a.cols(); ++r) {
        for (Eigen::Index i = 0; i < rows_a; ++i) {
            out.col(r).segment(i * rows_b, rows_b) = a(i, r) * b.col(r);
        }
    }
    return out;
}

ThreeWayTensor compose_tensor(const ComplexMatrix& hr, const ComplexMatrix& hs,
                              const ComplexMatrix& phi) {
    const Eigen::Index n = hr.cols();
    if (hs.rows() != n || phi.cols() != n) {
        throw RejectedInput("compose_tensor: inner dimension mismatch (Hr cols " +
                            std::to_string(n) + ", Hs rows " + std::to_string(hs.rows()) +
                            ", Phi cols " + std::to_string(phi.cols()) + ")");
    }
    ThreeWayTensor z(hr.rows(), hs.cols(), phi.rows());
    for (Eigen::Index p = 0; p < phi.rows(); ++p) {
        // Hr diag(Phi[p, :]) Hs
        const ComplexMatrix slice = hr * phi.row(p).transpose().asDiagonal() * hs;
        z.set_slice(p, slice);
    }
    return z;
}

ComplexMatrix unfold(const ThreeWayTensor& z, int mode) {
    const auto kk = static_cast<Eigen::Index>(z.dim_i());
    const auto mm = static_cast<Eigen::Index>(z.dim_j());
    const auto pp = static_cast<Eigen::Index>(z.dim_k());
    ComplexMatrix out;
    switch (mode) {
        case 1:
            out.resize(pp * mm, kk);
            for (Eigen::Index p = 0; p < pp; ++p)
                for (Eigen::Index m = 0; m < mm; ++m)
                    for (Eigen::Index k = 0; k < kk; ++k) out(m * pp + p, k) = z(k, m, p);
            break;
        case 2:
            out.resize(kk * pp, mm);
            for (Eigen::Index p = 0; p < pp; ++p)
                for (Eigen::Index m = 0; m < mm; ++m)
                    for (Eigen::Index k = 0; k < kk; ++k) out(p * kk + k, m) = z(k, m, p);
            break;
        case 3:
            out.resize(mm * kk, pp);
            for (Eigen::Index p = 0; p < pp; ++p)
                for (Eigen::Index m = 0; m < mm; ++m)
                    for (Eigen::Index k = 0; k < kk; ++k) out(k * mm + m, p) = z(k, m, p);
            break;
        default:
            throw RejectedInput("unfold: mode must be 1, 2 or 3, got " + std::to_string(mode));
    }
    return out;
}

ThreeWayTensor fold(const ComplexMatrix& unfolded, int mode, std::size_t dim_i,
                    std::size_t dim_j, std::size_t dim_k) {
    const auto kk = static_cast<Eigen::Index>(dim_i);
    const auto mm = static_cast<Eigen::Index>(dim_j);
    const auto pp = static_cast<Eigen::Index>(dim_k);
    ThreeWayTensor z(dim_i, dim_j, dim_k);
    auto check = [&](Eigen::Index rows, Eigen::Index cols) {
        if (unfolded.rows() != rows || unfolded.cols() != cols) {
            throw RejectedInput("fold: unfolded matrix has the wrong shape");
        }
    };
    switch (mode) {
        case 1:
            check(pp * mm, kk);
            for (Eigen::Index p = 0; p < pp; ++p)
                for (Eigen::Index m = 0; m < mm; ++m)
                    for (Eigen::Index k = 0; k < kk; ++k) z(k, m, p) = unfolded(m * pp + p, k);
            break;
        case 2:
            check(kk * pp, mm);
            for (Eigen::Index p = 0; p < pp; ++p)
                for (Eigen::Index m = 0; m < mm; ++m)
                    for (Eigen::Index k = 0; k < kk; ++k) z(k, m, p) = unfolded(p * kk + k, m);
            break;
        case 3:
            check(mm * kk, pp);
            for (Eigen::Index p = 0; p < pp; ++p)
                for (Eigen::Index m = 0; m < mm; ++m)
                    for (Eigen::Index k = 0; k < kk; ++k) z(k, m, p) = unfolded(k * mm + m, p);
            break;
        default:
            throw RejectedInput("fold: mode must be 1, 2 or 3, got " + std::to_string(mode));
    }
    return z;
}

int numerical_rank(const ComplexMatrix& a, double tol) {
    if (a.size() == 0) return 0;
    Eigen::JacobiSVD<ComplexMatrix> svd(a);
    const RealVector& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > tol * s(0)) ++rank;
    }
    return rank;
}

namespace {

// Visits every k-subset of {0..n-1}; stops early when visit returns false.
template <typename Visit>
bool all_subsets(int n, int k, Visit&& visit) {
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        if (!visit(idx)) return false;
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) return true;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

}  // namespace

int kruskal_rank(const ComplexMatrix& a) {
    const auto cols = static_cast<int>(a.cols());
    if (cols > 8) {
        throw UnsupportedSize("kruskal_rank: at most 8 columns supported, got " +
                              std::to_string(cols));
    }
    int best = 0;
    for (int k = 1; k <= cols; ++k) {
        const bool independent = all_subsets(cols, k, [&](const std::vector<int>& idx) {
            ComplexMatrix sub(a.rows(), k);
            for (int c = 0; c < k; ++c) sub.col(c) = a.col(idx[c]);
            return numerical_rank(sub) == k;
        });
        if (!independent) break;
        best = k;
    }
    return best;
}

}  // namespace rispar
