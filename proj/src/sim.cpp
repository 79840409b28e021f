#include "tbdoa/sim.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "tbdoa/rng.hpp"

namespace tbdoa {

void RadarScene::validate() const {
    if (targets.empty()) throw std::invalid_argument("scene needs at least one target");
    if (pulses < 1) throw std::invalid_argument("scene needs at least one pulse");
    if (rcs_variance < 0.0 || noise_variance < 0.0)
        throw std::invalid_argument("variances must be non-negative");
}

namespace {

Eigen::MatrixXcd stack_columns(const Eigen::MatrixXcd& tx_part, const Eigen::MatrixXcd& rx_part) {
    // column k = kron(b_k, g_k): receive index outermost, transmit fastest
    const Eigen::Index mt = tx_part.rows(), n = rx_part.rows(), k = tx_part.cols();
    Eigen::MatrixXcd f(mt * n, k);
    for (Eigen::Index c = 0; c < k; ++c)
        for (Eigen::Index r = 0; r < n; ++r)
            f.col(c).segment(r * mt, mt) = rx_part(r, c) * tx_part.col(c);
    return f;
}

}  // namespace

Eigen::MatrixXcd steering_matrix_f(const InterpolationDesign& design, const ArrayGeometry& rx,
                                   const std::vector<Direction>& targets) {
    Eigen::MatrixXcd mapped(design.virtual_array.virtual_count(),
                            static_cast<Eigen::Index>(targets.size()));
    for (std::size_t k = 0; k < targets.size(); ++k)
        mapped.col(static_cast<Eigen::Index>(k)) = design.mapped_steering(targets[k]);
    return stack_columns(mapped, steering_matrix(rx, targets));
}

Eigen::MatrixXcd ideal_steering_matrix_f(const VirtualStructure& vs, const ArrayGeometry& rx,
                                         const std::vector<Direction>& targets) {
    return stack_columns(virtual_steering_matrix(vs, targets), steering_matrix(rx, targets));
}

ComplexTensor fold_snapshots(const Eigen::MatrixXcd& y, const VirtualStructure& vs, int n_rx) {
    const int q = static_cast<int>(y.cols());
    std::vector<Eigen::Index> dims = vs.tensor_dims(n_rx, q);
    // layout (first mode fastest) coincides with the stacked row index
    Eigen::VectorXcd data(y.size());
    for (int c = 0; c < q; ++c) data.segment(c * y.rows(), y.rows()) = y.col(c);
    return ComplexTensor(dims, std::move(data));
}

SnapshotSet simulate(const RadarScene& scene, const InterpolationDesign& design,
                     const ArrayGeometry& rx) {
    scene.validate();
    SnapshotSet out;
    for (const auto& t : scene.targets)
        if (!design.grid.in_sector_contains(t)) {
            std::ostringstream w;
            w << "target (theta " << t.theta_deg << ", phi " << t.phi_deg
              << ") lies outside the design sector";
            out.warnings.push_back(w.str());
        }

    const Eigen::MatrixXcd f = steering_matrix_f(design, rx, scene.targets);
    const Eigen::Index k = f.cols(), mn = f.rows();
    const int q = scene.pulses;

    CounterRng rcs_rng(scene.rng_seed, /*stream=*/0x726373ull);
    CounterRng noise_rng(scene.rng_seed, /*stream=*/0x6e6f697365ull);

    out.truth_rcs.resize(k, q);
    const double rcs_amp = std::sqrt(scene.rcs_variance);
    for (Eigen::Index c = 0; c < q; ++c)
        for (Eigen::Index r = 0; r < k; ++r) out.truth_rcs(r, c) = rcs_amp * rcs_rng.cnormal();

    Eigen::MatrixXcd noise(mn, q);
    const double namp = std::sqrt(scene.noise_variance);
    for (Eigen::Index c = 0; c < q; ++c)
        for (Eigen::Index r = 0; r < mn; ++r) noise(r, c) = namp * noise_rng.cnormal();

    Eigen::MatrixXcd signal = f * out.truth_rcs;
    out.realized_snr_db = snr_db(signal, noise);
    out.matrix_form = signal + noise;
    out.tensor_form = fold_snapshots(out.matrix_form, design.virtual_array, rx.size());
    return out;
}

SnapshotSet noise_free_snapshot(const InterpolationDesign& design, const ArrayGeometry& rx,
                                const std::vector<Direction>& targets, int pulses) {
    if (targets.empty()) throw std::invalid_argument("need at least one target");
    if (pulses < 1) throw std::invalid_argument("need at least one pulse");
    SnapshotSet out;
    const Eigen::MatrixXcd f = steering_matrix_f(design, rx, targets);
    out.truth_rcs = Eigen::MatrixXcd::Ones(f.cols(), pulses);
    out.matrix_form = f * out.truth_rcs;
    out.realized_snr_db = std::numeric_limits<double>::infinity();
    out.tensor_form = fold_snapshots(out.matrix_form, design.virtual_array, rx.size());
    return out;
}

double snr_db(const Eigen::MatrixXcd& signal_part, const Eigen::MatrixXcd& noise_part) {
    const double nsq = noise_part.squaredNorm();
    if (nsq == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(signal_part.squaredNorm() / nsq);
}

double noise_variance_for_snr(const Eigen::MatrixXcd& f, double rcs_variance,
                              double snr_db_target) {
    // E||F P||_F^2 = Q sigma_beta^2 ||F||_F^2 and E||Z||_F^2 = Q M~N sigma_n^2
    return rcs_variance * f.squaredNorm() /
           (static_cast<double>(f.rows()) * std::pow(10.0, snr_db_target / 10.0));
}

void SnapshotSet::save(const std::string& path) const {
    std::ofstream out_file(path);
    if (!out_file) throw std::runtime_error("cannot write snapshot file: " + path);
    out_file.precision(17);
    out_file << "tbdoa-snapshots v1\n";
    out_file << "dims";
    for (Eigen::Index d : tensor_form.dims()) out_file << " " << d;
    out_file << "\n";
    for (Eigen::Index i = 0; i < tensor_form.size(); ++i)
        out_file << tensor_form.data()(i).real() << " " << tensor_form.data()(i).imag() << "\n";
}

SnapshotSet SnapshotSet::load(const std::string& path, const VirtualStructure& vs, int n_rx) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open snapshot file: " + path);
    std::string line;
    std::getline(in, line);
    if (line != "tbdoa-snapshots v1") throw std::runtime_error("not a snapshot file: " + path);
    std::getline(in, line);
    std::istringstream hdr(line);
    std::string key;
    hdr >> key;
    std::vector<Eigen::Index> dims;
    Eigen::Index d;
    while (hdr >> d) dims.push_back(d);
    if (dims != vs.tensor_dims(n_rx, static_cast<int>(dims.back())))
        throw std::runtime_error("snapshot dims do not match the declared structure");
    Eigen::Index total = 1;
    for (Eigen::Index x : dims) total *= x;
    Eigen::VectorXcd data(total);
    for (Eigen::Index i = 0; i < total; ++i) {
        double re, im;
        if (!(in >> re >> im)) throw std::runtime_error("truncated snapshot file: " + path);
        data(i) = {re, im};
    }
    SnapshotSet out;
    out.tensor_form = ComplexTensor(dims, std::move(data));
    const Eigen::Index q = dims.back();
    out.matrix_form = unfold(out.tensor_form, static_cast<int>(dims.size()) - 1).transpose();
    out.truth_rcs.resize(0, q);
    out.realized_snr_db = std::numeric_limits<double>::quiet_NaN();
    return out;
}

}  // namespace tbdoa
