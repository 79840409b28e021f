// Python bindings for the main operations: geometry, interpolation design,
// snapshot simulation, DOA estimators and the analysis helpers.
#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tbdoa/analysis.hpp"
#include "tbdoa/commands.hpp"

namespace py = pybind11;
using namespace tbdoa;

namespace {

ArrayGeometry geometry_from_matrix(const Eigen::MatrixXd& positions) {
    if (positions.cols() != 2) throw std::invalid_argument("positions must be N x 2");
    std::vector<Eigen::Vector2d> pos;
    pos.reserve(static_cast<std::size_t>(positions.rows()));
    for (Eigen::Index i = 0; i < positions.rows(); ++i) pos.emplace_back(positions.row(i));
    return ArrayGeometry(std::move(pos));
}

Eigen::MatrixXd geometry_to_matrix(const ArrayGeometry& g) {
    Eigen::MatrixXd m(g.size(), 2);
    for (int i = 0; i < g.size(); ++i) m.row(i) = g.positions()[static_cast<std::size_t>(i)];
    return m;
}

}  // namespace

PYBIND11_MODULE(_tbdoa, m) {
    m.doc() = "2D transmit-array interpolation and tensor DOA estimation";

    py::class_<Direction>(m, "Direction")
        .def(py::init<double, double>(), py::arg("theta_deg"), py::arg("phi_deg"))
        .def_readwrite("theta_deg", &Direction::theta_deg)
        .def_readwrite("phi_deg", &Direction::phi_deg)
        .def("__repr__", [](const Direction& d) {
            return "Direction(theta=" + std::to_string(d.theta_deg) +
                   ", phi=" + std::to_string(d.phi_deg) + ")";
        });

    py::enum_<VirtualKind>(m, "VirtualKind")
        .value("CrossUla", VirtualKind::CrossUla)
        .value("Ura", VirtualKind::Ura)
        .value("LShaped", VirtualKind::LShaped);

    py::class_<VirtualStructure>(m, "VirtualStructure")
        .def(py::init([](VirtualKind kind, int m1, int m2, double spacing) {
                 VirtualStructure vs{kind, m1, m2, spacing};
                 vs.validate();
                 return vs;
             }),
             py::arg("kind"), py::arg("m1"), py::arg("m2"), py::arg("spacing") = 0.5)
        .def_readonly("kind", &VirtualStructure::kind)
        .def_readonly("m1", &VirtualStructure::m1)
        .def_readonly("m2", &VirtualStructure::m2)
        .def_readonly("spacing", &VirtualStructure::spacing)
        .def_property_readonly("virtual_count", &VirtualStructure::virtual_count);

    py::class_<ArrayGeometry>(m, "ArrayGeometry")
        .def(py::init(&geometry_from_matrix), py::arg("positions"))
        .def_property_readonly("positions", &geometry_to_matrix)
        .def_property_readonly("size", &ArrayGeometry::size)
        .def("save", &ArrayGeometry::save)
        .def_static("load", &ArrayGeometry::load);

    m.def("irregular_transmit_array", &irregular_transmit_array, py::arg("nx"), py::arg("ny"),
          py::arg("aperture"), py::arg("displacement"), py::arg("seed"));
    m.def("ura_array", &ura_array, py::arg("m1"), py::arg("m2"), py::arg("spacing"));
    m.def("select_receive_elements", &select_receive_elements, py::arg("tx"), py::arg("n"),
          py::arg("seed"));
    m.def("steering_vector", &steering_vector, py::arg("geometry"), py::arg("direction"));
    m.def("virtual_steering", &virtual_steering, py::arg("structure"), py::arg("direction"));

    py::class_<SectorGrid>(m, "SectorGrid")
        .def_readonly("in_sector", &SectorGrid::in_sector)
        .def_readonly("out_sector", &SectorGrid::out_sector);
    m.def("build_sector_grid", &build_sector_grid, py::arg("theta_lo"), py::arg("theta_hi"),
          py::arg("phi_lo"), py::arg("phi_hi"), py::arg("transition_theta"),
          py::arg("transition_phi"), py::arg("in_step"), py::arg("out_step"),
          py::arg("min_in_points") = 0);

    py::enum_<NormKind>(m, "NormKind")
        .value("L1", NormKind::L1)
        .value("LInf", NormKind::LInf)
        .value("L2", NormKind::L2);

    py::class_<InterpolationDesign>(m, "InterpolationDesign")
        .def_readonly("e", &InterpolationDesign::e)
        .def_readonly("virtual_array", &InterpolationDesign::virtual_array)
        .def_readonly("achieved_objective", &InterpolationDesign::achieved_objective)
        .def("mapped_steering", &InterpolationDesign::mapped_steering)
        .def("save", &InterpolationDesign::save)
        .def_static("load", &InterpolationDesign::load);

    m.def("design_ls", &design_ls, py::arg("tx"), py::arg("grid"), py::arg("virtual_array"));
    m.def("design_minimax_sidelobe", &design_minimax_sidelobe, py::arg("tx"), py::arg("grid"),
          py::arg("virtual_array"), py::arg("delta"),
          py::arg("objective_norm") = NormKind::LInf, py::arg("constraint_norm") = NormKind::L1,
          py::arg("facets") = 8);
    m.def("design_minimax_error", &design_minimax_error, py::arg("tx"), py::arg("grid"),
          py::arg("virtual_array"), py::arg("gamma"),
          py::arg("objective_norm") = NormKind::LInf, py::arg("constraint_norm") = NormKind::L1,
          py::arg("facets") = 8);
    m.def("exact_design", &exact_design, py::arg("virtual_array"), py::arg("grid"));
    m.def("sigma_app", &sigma_app, py::arg("design"), py::arg("direction"));
    m.def("interpolation_error_map", &interpolation_error_map, py::arg("design"),
          py::arg("directions"));

    py::class_<RadarScene>(m, "RadarScene")
        .def(py::init([](std::vector<Direction> targets, double rcs_variance, int pulses,
                         double noise_variance, std::uint64_t seed) {
                 RadarScene s{std::move(targets), rcs_variance, pulses, noise_variance, seed};
                 s.validate();
                 return s;
             }),
             py::arg("targets"), py::arg("rcs_variance") = 1.0, py::arg("pulses") = 1,
             py::arg("noise_variance") = 0.0, py::arg("seed") = 0);

    py::class_<SnapshotSet>(m, "SnapshotSet")
        .def_readonly("matrix_form", &SnapshotSet::matrix_form)
        .def_readonly("truth_rcs", &SnapshotSet::truth_rcs)
        .def_readonly("realized_snr_db", &SnapshotSet::realized_snr_db)
        .def_readonly("warnings", &SnapshotSet::warnings)
        .def("save", &SnapshotSet::save);

    m.def("simulate", &simulate, py::arg("scene"), py::arg("design"), py::arg("rx"));
    m.def("noise_free_snapshot", &noise_free_snapshot, py::arg("design"), py::arg("rx"),
          py::arg("targets"), py::arg("pulses") = 1);
    m.def("noise_variance_for_snr", &noise_variance_for_snr, py::arg("f"),
          py::arg("rcs_variance"), py::arg("snr_db"));
    m.def("steering_matrix_f", &steering_matrix_f, py::arg("design"), py::arg("rx"),
          py::arg("targets"));

    py::enum_<Estimator>(m, "Estimator")
        .value("MatrixEsprit", Estimator::MatrixEsprit)
        .value("HosvdEsprit", Estimator::HosvdEsprit)
        .value("Tev", Estimator::Tev)
        .value("SpectralMusic", Estimator::SpectralMusic);

    py::class_<TargetEstimate>(m, "TargetEstimate")
        .def_readonly("theta_deg", &TargetEstimate::theta_deg)
        .def_readonly("phi_deg", &TargetEstimate::phi_deg)
        .def_readonly("mu", &TargetEstimate::mu)
        .def_readonly("nu", &TargetEstimate::nu)
        .def_readonly("lut_corrected", &TargetEstimate::lut_corrected)
        .def_readonly("theta_corrected_deg", &TargetEstimate::theta_corrected_deg)
        .def_readonly("phi_corrected_deg", &TargetEstimate::phi_corrected_deg);

    py::class_<DoaEstimate>(m, "DoaEstimate")
        .def_readonly("estimator", &DoaEstimate::estimator)
        .def_readonly("targets", &DoaEstimate::targets)
        .def_readonly("warnings", &DoaEstimate::warnings);

    m.def("matrix_esprit", &matrix_esprit, py::arg("snapshots"), py::arg("virtual_array"),
          py::arg("k"));
    m.def("hosvd_esprit", &hosvd_esprit, py::arg("snapshots"), py::arg("virtual_array"),
          py::arg("k"));
    m.def("tev", &tev, py::arg("snapshots"), py::arg("virtual_array"), py::arg("k"));

    py::class_<MusicGrid>(m, "MusicGrid");
    m.def("make_music_grid", &make_music_grid, py::arg("design"), py::arg("rx"),
          py::arg("step_deg"));
    m.def("spectral_music_2d", &spectral_music_2d, py::arg("snapshots"), py::arg("grid"),
          py::arg("k"));

    py::class_<CrbReport>(m, "CrbReport")
        .def_readonly("theta_var_deg2", &CrbReport::theta_var_deg2)
        .def_readonly("phi_var_deg2", &CrbReport::phi_var_deg2)
        .def_readonly("rmse_theta_deg", &CrbReport::rmse_theta_deg)
        .def_readonly("rmse_phi_deg", &CrbReport::rmse_phi_deg);
    m.def("crb", &crb, py::arg("targets"), py::arg("design"), py::arg("rx"), py::arg("rcs"),
          py::arg("noise_variance"));

    py::class_<BiasPrediction>(m, "BiasPrediction")
        .def_readonly("sigma2_app", &BiasPrediction::sigma2_app)
        .def_readonly("det_dtheta_deg", &BiasPrediction::det_dtheta_deg)
        .def_readonly("det_dphi_deg", &BiasPrediction::det_dphi_deg)
        .def_readonly("mse_theta_deg2", &BiasPrediction::mse_theta_deg2)
        .def_readonly("mse_phi_deg2", &BiasPrediction::mse_phi_deg2);
    m.def("bias_predict", &bias_predict, py::arg("design"), py::arg("rx"), py::arg("targets"),
          py::arg("k"));

    py::class_<LookUpTable>(m, "LookUpTable")
        .def_readonly("n_theta", &LookUpTable::n_theta)
        .def_readonly("n_phi", &LookUpTable::n_phi)
        .def("save", &LookUpTable::save)
        .def_static("load", &LookUpTable::load);
    m.def("build_lut", &build_lut, py::arg("design"), py::arg("rx"), py::arg("estimator"),
          py::arg("lattice_step_deg"));
    m.def("apply_lut", &apply_lut, py::arg("lut"), py::arg("estimate"));

    py::class_<RmseResult>(m, "RmseResult")
        .def_readonly("theta_deg", &RmseResult::theta_deg)
        .def_readonly("phi_deg", &RmseResult::phi_deg);
    m.def("rmse", &rmse, py::arg("trials"), py::arg("truth"), py::arg("use_corrected") = false);

    py::class_<ResolutionResult>(m, "ResolutionResult")
        .def_readonly("p_theta", &ResolutionResult::p_theta)
        .def_readonly("p_phi", &ResolutionResult::p_phi);
    m.def("resolution_probability", &resolution_probability, py::arg("trials"), py::arg("truth"));
}
