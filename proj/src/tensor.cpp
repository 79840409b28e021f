#include "tbdoa/tensor.hpp"

#include <numeric>

namespace tbdoa {

namespace {

Eigen::Index product(const std::vector<Eigen::Index>& dims) {
    Eigen::Index p = 1;
    for (Eigen::Index d : dims) p *= d;
    return p;
}

void check_dims(const std::vector<Eigen::Index>& dims) {
    if (dims.empty()) throw std::invalid_argument("tensor order must be >= 1");
    for (Eigen::Index d : dims)
        if (d < 1) throw std::invalid_argument("every tensor mode size must be >= 1");
}

void check_mode(const ComplexTensor& t, int mode) {
    if (mode < 0 || mode >= t.order())
        throw std::out_of_range("tensor mode out of range");
}

// Accurate complex SVD at the matrix sizes this library works with.
Eigen::JacobiSVD<Eigen::MatrixXcd> full_svd(const Eigen::MatrixXcd& m) {
    return Eigen::JacobiSVD<Eigen::MatrixXcd>(m, Eigen::ComputeFullU | Eigen::ComputeThinV);
}

// Rotate each column so its largest-magnitude entry is real positive.
void fix_column_phases(Eigen::MatrixXcd& u) {
    for (Eigen::Index c = 0; c < u.cols(); ++c) {
        Eigen::Index r;
        u.col(c).cwiseAbs().maxCoeff(&r);
        const cd v = u(r, c);
        if (std::abs(v) > 0.0) u.col(c) *= std::conj(v) / std::abs(v);
    }
}

}  // namespace

ComplexTensor::ComplexTensor(std::vector<Eigen::Index> dims)
    : dims_(std::move(dims)) {
    check_dims(dims_);
    data_ = Eigen::VectorXcd::Zero(product(dims_));
}

ComplexTensor::ComplexTensor(std::vector<Eigen::Index> dims, Eigen::VectorXcd data)
    : dims_(std::move(dims)), data_(std::move(data)) {
    check_dims(dims_);
    if (data_.size() != product(dims_))
        throw std::invalid_argument("tensor data size does not match mode sizes");
}

Eigen::Index ComplexTensor::dim(int mode) const {
    if (mode < 0 || mode >= order()) throw std::out_of_range("tensor mode out of range");
    return dims_[static_cast<std::size_t>(mode)];
}

Eigen::Index ComplexTensor::linear_index(const std::vector<Eigen::Index>& idx) const {
    if (idx.size() != dims_.size())
        throw std::invalid_argument("index order does not match tensor order");
    Eigen::Index lin = 0, stride = 1;
    for (std::size_t m = 0; m < dims_.size(); ++m) {
        if (idx[m] < 0 || idx[m] >= dims_[m]) throw std::out_of_range("tensor index out of range");
        lin += idx[m] * stride;
        stride *= dims_[m];
    }
    return lin;
}

cd& ComplexTensor::at(const std::vector<Eigen::Index>& idx) { return data_(linear_index(idx)); }
const cd& ComplexTensor::at(const std::vector<Eigen::Index>& idx) const {
    return data_(linear_index(idx));
}

Eigen::MatrixXcd unfold(const ComplexTensor& t, int mode) {
    check_mode(t, mode);
    const auto& dims = t.dims();
    Eigen::Index inner = 1, outer = 1;
    for (int m = 0; m < mode; ++m) inner *= dims[static_cast<std::size_t>(m)];
    for (int m = mode + 1; m < t.order(); ++m) outer *= dims[static_cast<std::size_t>(m)];
    const Eigen::Index rows = t.dim(mode);

    // Layout is [inner][rows][outer]; column index is i + o*inner.
    Eigen::MatrixXcd out(rows, inner * outer);
    const auto& d = t.data();
    for (Eigen::Index o = 0; o < outer; ++o)
        for (Eigen::Index r = 0; r < rows; ++r)
            out.row(r).segment(o * inner, inner) =
                d.segment((o * rows + r) * inner, inner).transpose();
    return out;
}

ComplexTensor fold(const Eigen::MatrixXcd& m, int mode,
                   const std::vector<Eigen::Index>& dims) {
    check_dims(dims);
    if (mode < 0 || mode >= static_cast<int>(dims.size()))
        throw std::out_of_range("tensor mode out of range");
    Eigen::Index inner = 1, outer = 1;
    for (int r = 0; r < mode; ++r) inner *= dims[static_cast<std::size_t>(r)];
    for (int r = mode + 1; r < static_cast<int>(dims.size()); ++r)
        outer *= dims[static_cast<std::size_t>(r)];
    const Eigen::Index rows = dims[static_cast<std::size_t>(mode)];
    if (m.rows() != rows || m.cols() != inner * outer)
        throw std::invalid_argument("matrix shape does not match fold target dims");

    ComplexTensor t(dims);
    auto& d = t.data();
    for (Eigen::Index o = 0; o < outer; ++o)
        for (Eigen::Index r = 0; r < rows; ++r)
            d.segment((o * rows + r) * inner, inner) =
                m.row(r).segment(o * inner, inner).transpose();
    return t;
}

ComplexTensor mode_product(const ComplexTensor& t, const Eigen::MatrixXcd& m, int mode) {
    check_mode(t, mode);
    if (m.cols() != t.dim(mode))
        throw std::invalid_argument("mode product: matrix columns must equal the mode size");
    std::vector<Eigen::Index> dims = t.dims();
    dims[static_cast<std::size_t>(mode)] = m.rows();
    return fold(m * unfold(t, mode), mode, dims);
}

cd scalar_product(const ComplexTensor& a, const ComplexTensor& d) {
    if (a.dims() != d.dims())
        throw std::invalid_argument("scalar product requires identical mode sizes");
    return d.data().dot(a.data());  // Eigen dot conjugates the left argument
}

double higher_order_norm(const ComplexTensor& t) { return t.data().norm(); }

Eigen::VectorXcd vectorize(const ComplexTensor& t) { return t.data(); }

ComplexTensor outer_product(const std::vector<Eigen::VectorXcd>& factors) {
    if (factors.empty()) throw std::invalid_argument("outer product needs at least one factor");
    std::vector<Eigen::Index> dims;
    dims.reserve(factors.size());
    for (const auto& f : factors) dims.push_back(f.size());
    ComplexTensor t(dims);
    auto& data = t.data();
    for (Eigen::Index lin = 0; lin < data.size(); ++lin) {
        Eigen::Index rem = lin;
        cd v = 1.0;
        for (std::size_t m = 0; m < dims.size(); ++m) {
            v *= factors[m](rem % dims[m]);
            rem /= dims[m];
        }
        data(lin) = v;
    }
    return t;
}

ComplexTensor concat(const ComplexTensor& a, const ComplexTensor& b, int mode) {
    check_mode(a, mode);
    if (a.order() != b.order())
        throw std::invalid_argument("concat requires tensors of equal order");
    for (int m = 0; m < a.order(); ++m)
        if (m != mode && a.dim(m) != b.dim(m))
            throw std::invalid_argument("concat: mode sizes differ off the concat mode");
    std::vector<Eigen::Index> dims = a.dims();
    dims[static_cast<std::size_t>(mode)] += b.dim(mode);
    Eigen::MatrixXcd am = unfold(a, mode), bm = unfold(b, mode);
    Eigen::MatrixXcd m(am.rows() + bm.rows(), am.cols());
    m << am, bm;
    return fold(m, mode, dims);
}

ComplexTensor subtensor(const ComplexTensor& t, int mode, Eigen::Index index) {
    check_mode(t, mode);
    if (index < 0 || index >= t.dim(mode)) throw std::out_of_range("subtensor index out of range");
    if (t.order() == 1) throw std::invalid_argument("cannot drop the only mode of an order-1 tensor");
    std::vector<Eigen::Index> dims;
    for (int m = 0; m < t.order(); ++m)
        if (m != mode) dims.push_back(t.dim(m));
    Eigen::VectorXcd row = unfold(t, mode).row(index).transpose();
    return ComplexTensor(dims, std::move(row));
}

HosvdResult hosvd(const ComplexTensor& t) {
    if (t.order() < 2) throw std::invalid_argument("hosvd requires order >= 2");
    HosvdResult res;
    res.factors.reserve(static_cast<std::size_t>(t.order()));
    res.mode_singular_values.reserve(static_cast<std::size_t>(t.order()));
    for (int m = 0; m < t.order(); ++m) {
        auto svd = full_svd(unfold(t, m));
        Eigen::MatrixXcd u = svd.matrixU();
        fix_column_phases(u);
        res.factors.push_back(std::move(u));
        res.mode_singular_values.push_back(svd.singularValues());
    }
    ComplexTensor core = t;
    for (int m = 0; m < t.order(); ++m)
        core = mode_product(core, res.factors[static_cast<std::size_t>(m)].adjoint(), m);
    res.core = std::move(core);
    return res;
}

ComplexTensor truncated_signal_subspace(const ComplexTensor& t, Eigen::Index k) {
    if (t.order() < 2) throw std::invalid_argument("signal subspace requires order >= 2");
    if (k < 1) throw std::out_of_range("subspace rank must be >= 1");
    for (int m = 0; m + 1 < t.order(); ++m)
        if (k > t.dim(m))
            throw std::out_of_range("subspace rank exceeds a leading mode size");
    if (k > t.dim(t.order() - 1))
        throw std::out_of_range("subspace rank exceeds the last mode size");

    std::vector<Eigen::MatrixXcd> lead;  // dominant k left singular vectors, modes 0..N-2
    lead.reserve(static_cast<std::size_t>(t.order() - 1));
    for (int m = 0; m + 1 < t.order(); ++m) {
        auto svd = full_svd(unfold(t, m));
        Eigen::MatrixXcd u = svd.matrixU().leftCols(k);
        fix_column_phases(u);
        lead.push_back(std::move(u));
    }
    auto svd_last = full_svd(unfold(t, t.order() - 1));
    Eigen::MatrixXcd u_last = svd_last.matrixU().leftCols(k);
    fix_column_phases(u_last);

    ComplexTensor core = t;
    for (int m = 0; m + 1 < t.order(); ++m)
        core = mode_product(core, lead[static_cast<std::size_t>(m)].adjoint(), m);
    core = mode_product(core, u_last.adjoint(), t.order() - 1);

    ComplexTensor u = core;
    for (int m = 0; m + 1 < t.order(); ++m)
        u = mode_product(u, lead[static_cast<std::size_t>(m)], m);
    return u;
}

}  // namespace tbdoa
