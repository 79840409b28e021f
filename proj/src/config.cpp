#include "tbdoa/config.hpp"

#include <fstream>
#include <sstream>

#include "tbdoa/analysis.hpp"

namespace tbdoa {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream ss(s);
    std::vector<std::string> out;
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

double to_double(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (...) {
        throw std::invalid_argument("config key '" + key + "': not a number: " + v);
    }
}

int to_int(const std::string& v, const std::string& key) {
    const double x = to_double(v, key);
    if (x != static_cast<int>(x))
        throw std::invalid_argument("config key '" + key + "': not an integer: " + v);
    return static_cast<int>(x);
}

std::uint64_t to_u64(const std::string& v, const std::string& key) {
    try {
        return std::stoull(v);
    } catch (...) {
        throw std::invalid_argument("config key '" + key + "': not an unsigned integer: " + v);
    }
}

bool to_bool(const std::string& v, const std::string& key) {
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw std::invalid_argument("config key '" + key + "': expected on/off: " + v);
}

std::vector<double> to_list(const std::string& v, const std::string& key) {
    std::vector<double> out;
    for (const auto& tok : split_ws(v)) out.push_back(to_double(tok, key));
    if (out.empty()) throw std::invalid_argument("config key '" + key + "': empty list");
    return out;
}

std::vector<Direction> to_targets(const std::string& v, const std::string& key) {
    std::vector<Direction> out;
    std::string item;
    std::istringstream ss(v);
    while (std::getline(ss, item, ';')) {
        const auto parts = split_ws(trim(item));
        if (parts.size() != 2)
            throw std::invalid_argument("config key '" + key +
                                        "': each target needs 'theta phi': " + item);
        out.push_back({to_double(parts[0], key), to_double(parts[1], key)});
    }
    if (out.empty()) throw std::invalid_argument("config key '" + key + "': no targets");
    return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                            ": malformed section header");
            section = line.substr(1, line.size() - 2);
            if (section != "geometry" && section != "virtual" && section != "sector" &&
                section != "design" && section != "scene" && section != "montecarlo" &&
                section != "lut" && section != "crb" && section != "estimate" &&
                section != "output")
                throw std::invalid_argument(origin + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string qual = section + "." + key;

        if (section == "geometry") {
            if (key == "transmit") cfg.transmit = value;
            else if (key == "nx") cfg.nx = to_int(value, qual);
            else if (key == "ny") cfg.ny = to_int(value, qual);
            else if (key == "aperture") cfg.aperture = to_double(value, qual);
            else if (key == "displacement") cfg.displacement = to_double(value, qual);
            else if (key == "array_seed") cfg.array_seed = to_u64(value, qual);
            else if (key == "receive_count") cfg.receive_count = to_int(value, qual);
            else if (key == "receive_seed") cfg.receive_seed = to_u64(value, qual);
            else throw std::invalid_argument(origin + ": unknown key '" + qual + "'");
        } else if (section == "virtual") {
            if (key == "kind") cfg.virtual_array.kind = virtual_kind_from_string(value);
            else if (key == "m1") cfg.virtual_array.m1 = to_int(value, qual);
            else if (key == "m2") cfg.virtual_array.m2 = to_int(value, qual);
            else if (key == "spacing") cfg.virtual_array.spacing = to_double(value, qual);
            else throw std::invalid_argument(origin + ": unknown key '" + qual + "'");
        } else if (section == "sector") {
            if (key == "theta") {
                const auto v = to_list(value, qual);
                if (v.size() != 2) throw std::invalid_argument(origin + ": sector.theta needs 2 values");
                cfg.theta_lo = v[0];
                cfg.theta_hi = v[1];
            } else if (key == "phi") {
                const auto v = to_list(value, qual);
                if (v.size() != 2) throw std::invalid_argument(origin + ": sector.phi needs 2 values");
                cfg.phi_lo = v[0];
                cfg.phi_hi = v[1];
            } else if (key == "transition") {
                const auto v = to_list(value, qual);
                if (v.size() != 2)
                    throw std::invalid_argument(origin + ": sector.transition needs 2 values");
                cfg.transition_theta = v[0];
                cfg.transition_phi = v[1];
            } else if (key == "in_step") cfg.in_step = to_double(value, qual);
            else if (key == "out_step") cfg.out_step = to_double(value, qual);
            else throw std::invalid_argument(origin + ": unknown key '" + qual + "'");
        } else if (section == "design") {
            if (key == "method") cfg.method = design_method_from_string(value);
            else if (key == "delta") cfg.delta = to_list(value, qual);
            else if (key == "gamma") cfg.gamma = to_list(value, qual);
            else if (key == "objective_norm") cfg.objective_norm = norm_kind_from_string(value);
            else if (key == "constraint_norm") cfg.constraint_norm = norm_kind_from_string(value);
            else if (key == "facets") cfg.facets = to_int(value, qual);
            else throw std::invalid_argument(origin + ": unknown key '" + qual + "'");
        } else if (section == "scene") {
            if (key == "targets") cfg.targets = to_targets(value, qual);
            else if (key == "rcs_variance") cfg.rcs_variance = to_double(value, qual);
            else if (key == "pulses") cfg.pulses = to_int(value, qual);
            else throw std::invalid_argument(origin + ": unknown key '" + qual + "'");
        } else if (section == "montecarlo") {
            if (key == "trials") cfg.trials = to_int(value, qual);
            else if (key == "snr_db") cfg.snr_db = to_list(value, qual);
            else if (key == "estimators") {
                cfg.estimators.clear();
                for (const auto& tok : split_ws(value))
                    cfg.estimators.push_back(estimator_from_string(tok));
            } else if (key == "music_step") cfg.music_step = to_double(value, qual);
            else if (key == "lut") cfg.lut_enabled = to_bool(value, qual);
            else throw std::invalid_argument(origin + ": unknown key '" + qual + "'");
        } else if (section == "lut") {
            if (key == "estimator") cfg.lut_estimator = estimator_from_string(value);
            else if (key == "step") cfg.lut_step = to_double(value, qual);
            else throw std::invalid_argument(origin + ": unknown key '" + qual + "'");
        } else if (section == "crb") {
            if (key == "draws") cfg.crb_draws = to_int(value, qual);
            else throw std::invalid_argument(origin + ": unknown key '" + qual + "'");
        } else if (section == "estimate") {
            if (key == "k") cfg.estimate_k = to_int(value, qual);
            else throw std::invalid_argument(origin + ": unknown key '" + qual + "'");
        } else if (section == "output") {
            if (key == "dir") cfg.out_dir = value;
            else throw std::invalid_argument(origin + ": unknown key '" + qual + "'");
        } else {
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": key outside any section: " + key);
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_text(text.str(), path);
}

void ExperimentConfig::validate() const {
    virtual_array.validate();
    if (trials < 1) throw std::invalid_argument("montecarlo.trials must be >= 1");
    if (pulses < 1) throw std::invalid_argument("scene.pulses must be >= 1");
    if (targets.empty()) throw std::invalid_argument("scene.targets must not be empty");
    if (estimators.empty()) throw std::invalid_argument("montecarlo.estimators must not be empty");
    if (delta.empty() || gamma.empty()) throw std::invalid_argument("design bounds must not be empty");
    if (transmit.rfind("file:", 0) == 0) {
        const std::string path = transmit.substr(5);
        std::ifstream probe(path);
        if (!probe) throw std::invalid_argument("geometry.transmit file does not exist: " + path);
    }
}

ArrayGeometry ExperimentConfig::make_transmit() const {
    if (transmit == "irregular")
        return irregular_transmit_array(nx, ny, aperture, displacement, array_seed);
    if (transmit == "ura")
        return ura_array(virtual_array.m1, virtual_array.m2, virtual_array.spacing);
    if (transmit.rfind("file:", 0) == 0) return ArrayGeometry::load(transmit.substr(5));
    throw std::invalid_argument("geometry.transmit must be irregular, ura, or file:PATH");
}

ArrayGeometry ExperimentConfig::make_receive(const ArrayGeometry& tx) const {
    return select_receive_elements(tx, receive_count, receive_seed);
}

SectorGrid ExperimentConfig::make_grid() const {
    return build_sector_grid(theta_lo, theta_hi, phi_lo, phi_hi, transition_theta, transition_phi,
                             in_step, out_step);
}

InterpolationDesign ExperimentConfig::solve_design(const ArrayGeometry& tx, const SectorGrid& grid,
                                                   double level) const {
    switch (method) {
        case DesignMethod::LeastSquares: return design_ls(tx, grid, virtual_array);
        case DesignMethod::MinErrSubjectSidelobe:
            return design_minimax_error(tx, grid, virtual_array, level, objective_norm,
                                        constraint_norm, facets);
        case DesignMethod::MinSidelobeSubjectErr:
            return design_minimax_sidelobe(tx, grid, virtual_array, level, objective_norm,
                                           constraint_norm, facets);
    }
    throw std::logic_error("unreachable design method");
}

ExperimentConfig preset_config(const std::string& name) {
    // Shared reference setup: 64-element irregular transmit array, 8 receive
    // elements, sector [30,40]x[65,75] with (20,15) transitions, 4x4 virtual
    // structure at half-wavelength spacing.
    std::string text;
    if (name == "fig1") {
        text = "[design]\ndelta = 0.1 0.01\n";
    } else if (name == "fig2") {
        text = "[virtual]\nkind = l_shaped\n[design]\ndelta = 0.1 0.01\n";
    } else if (name == "fig3") {
        text = "[design]\ndelta = 0.1\n";
    } else if (name == "fig5") {
        text = "[design]\ndelta = 0.32 0.1 0.032 0.01\n[scene]\ntargets = 33 66 ; 39 71\npulses = 8\n";
    } else if (name == "fig6") {
        text =
            "[scene]\ntargets = 34 66\npulses = 6\n[design]\ndelta = 0.1\n"
            "[montecarlo]\ntrials = 1000\nsnr_db = 0 5 10 15 20 25 30\n"
            "estimators = matrix_esprit hosvd_esprit tev music\n[estimate]\nk = 1\n";
    } else if (name == "fig7") {
        text =
            "[scene]\ntargets = 33 66 ; 39 71\npulses = 8\n[design]\ndelta = 0.1\n"
            "[montecarlo]\ntrials = 1000\nsnr_db = 0 5 10 15 20 25 30\n"
            "estimators = matrix_esprit hosvd_esprit tev music\n[estimate]\nk = 2\n";
    } else if (name == "fig8") {
        text =
            "[scene]\ntargets = 36 66 ; 39 69\npulses = 8\n[design]\ndelta = 0.1\n"
            "[montecarlo]\ntrials = 1000\nsnr_db = 0 5 10 15 20 25 30\n"
            "estimators = matrix_esprit hosvd_esprit tev\n[estimate]\nk = 2\n";
    } else {
        throw std::invalid_argument("unknown preset: " + name +
                                    " (known: fig1 fig2 fig3 fig5 fig6 fig7 fig8)");
    }
    return parse_config_text(text, "preset:" + name);
}

}  // namespace tbdoa
