#include "pmsde/model_config.hpp"

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "pmsde/errors.hpp"

namespace pmsde {

namespace {

using nlohmann::json;

void require_keys(const json& j, const std::set<std::string>& allowed,
                  const std::set<std::string>& required, const std::string& where) {
    if (!j.is_object()) throw ValidationError(where + ": expected an object");
    for (const auto& item : j.items())
        if (!allowed.count(item.key()))
            throw ValidationError(where + ": unknown key '" + item.key() + "'");
    for (const auto& key : required)
        if (!j.contains(key)) throw ValidationError(where + ": missing key '" + key + "'");
}

double get_number(const json& j, const std::string& key, const std::string& where) {
    if (!j.at(key).is_number())
        throw ValidationError(where + ": '" + key + "' must be a number");
    return j.at(key).get<double>();
}

std::vector<double> get_vector(const json& j, const std::string& where) {
    if (!j.is_array()) throw ValidationError(where + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw ValidationError(where + ": expected numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

/// sigma given either as a scalar (isotropic) or a full row-major matrix.
std::vector<double> parse_sigma(const json& j, int dim, const std::string& where) {
    if (j.is_number()) {
        std::vector<double> s(static_cast<std::size_t>(dim) * dim, 0.0);
        for (int i = 0; i < dim; ++i) s[static_cast<std::size_t>(i) * dim + i] = j.get<double>();
        return s;
    }
    if (j.is_array()) {
        std::vector<double> s;
        for (const auto& row : j) {
            const auto r = get_vector(row, where + ".sigma row");
            if (static_cast<int>(r.size()) != dim)
                throw ValidationError(where + ": sigma rows must have length dim");
            s.insert(s.end(), r.begin(), r.end());
        }
        if (s.size() != static_cast<std::size_t>(dim) * dim)
            throw ValidationError(where + ": sigma must be dim x dim");
        return s;
    }
    throw ValidationError(where + ": sigma must be a scalar or a matrix");
}

PolyCoordSpec parse_coord(const json& j, double period, const std::string& where) {
    require_keys(j, {"degree", "coeffs", "leading"}, {"degree", "coeffs", "leading"}, where);
    PolyCoordSpec coord;
    coord.degree = j.at("degree").get<int>();
    coord.leading = get_number(j, "leading", where);
    for (const auto& c : j.at("coeffs")) coord.coeffs.push_back(parse_trig_poly(c, period));
    return coord;
}

} // namespace

TrigPoly parse_trig_poly(const nlohmann::json& j, double period) {
    if (j.is_number()) return TrigPoly::constant(j.get<double>(), period);
    require_keys(j, {"a0", "cos", "sin"}, {}, "trig_poly");
    const double a0 = j.contains("a0") ? j.at("a0").get<double>() : 0.0;
    std::vector<double> c, s;
    if (j.contains("cos")) c = get_vector(j.at("cos"), "trig_poly.cos");
    if (j.contains("sin")) s = get_vector(j.at("sin"), "trig_poly.sin");
    return TrigPoly(period, a0, std::move(c), std::move(s));
}

ParsedModel parse_model_config(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind"))
        throw ValidationError("model: missing 'kind'");
    const std::string kind = j.at("kind").get<std::string>();
    ParsedModel parsed;

    if (kind == "duffing") {
        require_keys(j, {"kind", "amplitude", "omega", "sigma"},
                     {"kind", "amplitude", "omega", "sigma"}, "model(duffing)");
        parsed.sde = build_duffing(get_number(j, "amplitude", "model"),
                                   get_number(j, "omega", "model"),
                                   get_number(j, "sigma", "model"));
        return parsed;
    }

    if (kind == "ou") {
        require_keys(j, {"kind", "period", "eigvals", "eigvecs", "sigma", "forcing"},
                     {"kind", "period", "eigvals", "sigma", "forcing"}, "model(ou)");
        const double period = get_number(j, "period", "model");
        const auto eigvals = get_vector(j.at("eigvals"), "model.eigvals");
        const int d = static_cast<int>(eigvals.size());
        Eigen::VectorXd ev(d);
        for (int i = 0; i < d; ++i) ev(i) = eigvals[i];
        Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d);
        if (j.contains("eigvecs")) {
            int r = 0;
            for (const auto& row : j.at("eigvecs")) {
                const auto vals = get_vector(row, "model.eigvecs row");
                if (static_cast<int>(vals.size()) != d || r >= d)
                    throw ValidationError("model: eigvecs must be d x d");
                for (int cidx = 0; cidx < d; ++cidx) m(r, cidx) = vals[cidx];
                ++r;
            }
            if (r != d) throw ValidationError("model: eigvecs must be d x d");
        }
        const auto sig_flat = parse_sigma(j.at("sigma"), d, "model");
        Eigen::MatrixXd sig(d, d);
        for (int i = 0; i < d; ++i)
            for (int c = 0; c < d; ++c) sig(i, c) = sig_flat[static_cast<std::size_t>(i) * d + c];
        std::vector<TrigPoly> forcing;
        for (const auto& f : j.at("forcing")) forcing.push_back(parse_trig_poly(f, period));
        if (static_cast<int>(forcing.size()) != d)
            throw ValidationError("model: need one forcing entry per coordinate");
        parsed.ou = OuModel(m, ev, sig, std::move(forcing), period);
        parsed.sde = parsed.ou->to_sde_model();
        return parsed;
    }

    if (kind == "polynomial") {
        require_keys(j, {"kind", "period", "sigma", "coords"},
                     {"kind", "period", "sigma", "coords"}, "model(polynomial)");
        PolyDriftSpec spec;
        spec.period = get_number(j, "period", "model");
        for (const auto& c : j.at("coords"))
            spec.coords.push_back(parse_coord(c, spec.period, "model.coords"));
        const auto sigma = parse_sigma(j.at("sigma"), spec.dim(), "model");
        parsed.sde = build_poly_drift_model(std::move(spec), sigma);
        return parsed;
    }

    if (kind == "langevin") {
        require_keys(j, {"kind", "period", "gamma", "sigma", "force"},
                     {"kind", "period", "gamma", "sigma", "force"}, "model(langevin)");
        const double period = get_number(j, "period", "model");
        PolyDriftSpec force_spec;
        force_spec.period = period;
        for (const auto& c : j.at("force"))
            force_spec.coords.push_back(parse_coord(c, period, "model.force"));
        force_spec.validate();
        const int d = force_spec.dim();
        const auto sigma = parse_sigma(j.at("sigma"), d, "model");
        auto shared = std::make_shared<PolyDriftSpec>(std::move(force_spec));
        auto force = [shared](double t, std::span<const double> q, std::span<double> out) {
            for (std::size_t i = 0; i < shared->coords.size(); ++i)
                out[i] = shared->coords[i].drift_eval(t, q[i]);
        };
        parsed.sde = build_langevin_model(force, d, period, get_number(j, "gamma", "model"),
                                          sigma);
        return parsed;
    }

    throw ValidationError("model: unknown kind '" + kind + "'");
}

} // namespace pmsde
