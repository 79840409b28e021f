// Dense complex multilinear algebra: N-order tensors, unfoldings, n-mode
// products, HOSVD and the truncated (signal-subspace) HOSVD.
//
// Linearization convention used everywhere in this library: the first mode
// varies fastest (generalized column-major). Consequently
//   vec(a o b o c) == kron(c, kron(b, a))
// i.e. the Kronecker stacking with the last factor outermost.

#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace tbdoa {

using cd = std::complex<double>;

class ComplexTensor {
public:
    ComplexTensor() = default;

    // Zero tensor with the given mode sizes.
    explicit ComplexTensor(std::vector<Eigen::Index> dims);

    // Tensor from pre-linearized data (first mode fastest). Throws if the
    // element count does not match the product of the mode sizes.
    ComplexTensor(std::vector<Eigen::Index> dims, Eigen::VectorXcd data);

    int order() const { return static_cast<int>(dims_.size()); }
    Eigen::Index dim(int mode) const;
    const std::vector<Eigen::Index>& dims() const { return dims_; }
    Eigen::Index size() const { return data_.size(); }

    const Eigen::VectorXcd& data() const { return data_; }
    Eigen::VectorXcd& data() { return data_; }

    // Multi-index access, 0-based.
    cd& at(const std::vector<Eigen::Index>& idx);
    const cd& at(const std::vector<Eigen::Index>& idx) const;

    Eigen::Index linear_index(const std::vector<Eigen::Index>& idx) const;

private:
    std::vector<Eigen::Index> dims_;
    Eigen::VectorXcd data_;
};

struct HosvdResult {
    ComplexTensor core;                            // S with  t = S x_1 U_1 ... x_N U_N
    std::vector<Eigen::MatrixXcd> factors;         // square unitary, one per mode
    std::vector<Eigen::VectorXd> mode_singular_values;
};

// Mode-n unfolding: rows indexed by mode n, columns by the remaining modes in
// increasing mode order with the earliest remaining mode varying fastest.
Eigen::MatrixXcd unfold(const ComplexTensor& t, int mode);

// Inverse of unfold for the given target dims.
ComplexTensor fold(const Eigen::MatrixXcd& m, int mode,
                   const std::vector<Eigen::Index>& dims);

// n-mode product t x_mode m; column count of m must equal dim(mode).
ComplexTensor mode_product(const ComplexTensor& t, const Eigen::MatrixXcd& m,
                           int mode);

// <A, D> = sum conj(d_i) * a_i  over all entries.
cd scalar_product(const ComplexTensor& a, const ComplexTensor& d);

// Higher-order norm sqrt(<t, t>) (equals the Frobenius norm of any unfolding).
double higher_order_norm(const ComplexTensor& t);

// Linearized entries in the library convention (first mode fastest).
Eigen::VectorXcd vectorize(const ComplexTensor& t);

// Rank-1 tensor from factor vectors, one per mode.
ComplexTensor outer_product(const std::vector<Eigen::VectorXcd>& factors);

// Concatenation of two tensors along `mode`; all other mode sizes must agree.
ComplexTensor concat(const ComplexTensor& a, const ComplexTensor& b, int mode);

// Sub-tensor with `mode` fixed to `index` (order drops by one).
ComplexTensor subtensor(const ComplexTensor& t, int mode, Eigen::Index index);

// Full HOSVD. Factors are the left singular matrices of each mode unfolding,
// with the phase of each column fixed so its largest-magnitude entry is real
// positive; singular values sorted descending.
HosvdResult hosvd(const ComplexTensor& t);

// Tensor-based signal subspace: truncates every mode-r factor (r < order) to
// its k dominant left singular vectors and the last mode to k, returning
//   U^[s] = S^[s] x_1 U_1^[s] ... x_{N-1} U_{N-1}^[s]
// of the same order as t with last mode size k. In the noiseless case the
// span of its last-mode unfolding transpose equals the span of the k dominant
// left singular vectors of the matrix data.
ComplexTensor truncated_signal_subspace(const ComplexTensor& t, Eigen::Index k);

}  // namespace tbdoa
