#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "metacond/errors.hpp"
#include "metacond/pipeline.hpp"

namespace metacond {

// model.json schema version. Bump on any layout change; loaders reject
// anything they don't know rather than guessing.
inline constexpr int model_format_version = 1;

namespace serialize_detail {

inline nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

/// Row-major flattening; the shape lives next to the array in the document.
inline nlohmann::json mat_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) a.push_back(m(i, j));
    return a;
}

inline Eigen::VectorXd vec_from_json(const nlohmann::json& a) {
    if (!a.is_array()) throw DomainError("model json: expected a numeric array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number()) throw DomainError("model json: non-numeric array entry");
        v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    }
    return v;
}

inline Eigen::MatrixXd mat_from_json(const nlohmann::json& a, int rows, int cols) {
    const Eigen::VectorXd flat = vec_from_json(a);
    if (flat.size() != static_cast<Eigen::Index>(rows) * cols)
        throw DomainError("model json: array length " + std::to_string(flat.size()) +
                          " does not match shape " + std::to_string(rows) + "x" +
                          std::to_string(cols));
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = flat(i * cols + j);
    return m;
}

inline nlohmann::json mixture_to_json(const Mixture& mix) {
    nlohmann::json j;
    j["k"] = mix.n_components();
    j["d"] = mix.dim();
    j["weights"] = mix.weights;
    nlohmann::json means = nlohmann::json::array(), covs = nlohmann::json::array();
    for (const auto& c : mix.components) {
        for (Eigen::Index i = 0; i < c.mean.size(); ++i) means.push_back(c.mean(i));
        for (Eigen::Index r = 0; r < c.cov.rows(); ++r)
            for (Eigen::Index s = 0; s < c.cov.cols(); ++s) covs.push_back(c.cov(r, s));
    }
    j["means"] = means;
    j["covs"] = covs;
    return j;
}

inline Mixture mixture_from_json(const nlohmann::json& j) {
    const int K = j.at("k").get<int>(), d = j.at("d").get<int>();
    if (K < 1 || d < 1) throw DomainError("model json: mixture shape must be positive");
    Mixture mix;
    mix.weights = j.at("weights").get<std::vector<double>>();
    if (mix.weights.size() != static_cast<std::size_t>(K))
        throw DomainError("model json: weight count mismatch");
    const Eigen::VectorXd means = vec_from_json(j.at("means"));
    const Eigen::VectorXd covs = vec_from_json(j.at("covs"));
    if (means.size() != static_cast<Eigen::Index>(K) * d ||
        covs.size() != static_cast<Eigen::Index>(K) * d * d)
        throw DomainError("model json: mixture array lengths do not match shape");
    for (int k = 0; k < K; ++k) {
        GaussianParams c;
        c.mean = means.segment(k * d, d);
        c.cov.resize(d, d);
        for (int r = 0; r < d; ++r)
            for (int s = 0; s < d; ++s) c.cov(r, s) = covs(k * d * d + r * d + s);
        mix.components.push_back(std::move(c));
    }
    return mix;
}

}  // namespace serialize_detail

inline nlohmann::json model_to_json(const MetaModel& m) {
    using namespace serialize_detail;
    nlohmann::json j;
    j["format_version"] = model_format_version;
    j["family"] = family_name(m.latent.tag);
    j["columns"] = m.column_names;

    nlohmann::json margins = nlohmann::json::array();
    for (const auto& mm : m.marginals) {
        nlohmann::json jm;
        if (mm.kind == MarginalModel::Kind::parametric) {
            jm["kind"] = "parametric";
            jm["weights"] = vec_to_json(mm.gmm.weights);
            jm["means"] = vec_to_json(mm.gmm.means);
            jm["sds"] = vec_to_json(mm.gmm.sds);
        } else {
            jm["kind"] = "empirical";
            jm["sorted"] = vec_to_json(mm.sorted);
        }
        margins.push_back(std::move(jm));
    }
    j["marginals"] = margins;

    nlohmann::json lat;
    switch (m.latent.tag) {
        case Family::gmcm:
            lat = mixture_to_json(m.latent.gmcm.mixture);
            lat["standardized"] = m.latent.gmcm.standardized;
            break;
        case Family::gc:
            lat["d"] = static_cast<int>(m.latent.gauss.mean.size());
            lat["mean"] = vec_to_json(m.latent.gauss.mean);
            lat["cov"] = mat_to_json(m.latent.gauss.cov);
            break;
        case Family::tgmm: lat = mixture_to_json(m.latent.mixture); break;
        case Family::student_t:
            lat["d"] = m.latent.t.dim();
            lat["mean"] = vec_to_json(m.latent.t.mean);
            lat["scale"] = mat_to_json(m.latent.t.scale);
            lat["dof"] = m.latent.t.dof;
            break;
    }
    j["latent"] = lat;
    return j;
}

inline MetaModel model_from_json(const nlohmann::json& j) {
    using namespace serialize_detail;
    if (!j.is_object() || !j.contains("format_version") || !j["format_version"].is_number_integer())
        throw DomainError("model json: missing integer format_version");
    const int version = j["format_version"].get<int>();
    if (version != model_format_version)
        throw UnsupportedFormat("model json: format_version " + std::to_string(version) +
                                " is not supported (expected " +
                                std::to_string(model_format_version) + ")");

    MetaModel m;
    m.latent.tag = family_from_name(j.at("family").get<std::string>());
    m.column_names = j.at("columns").get<std::vector<std::string>>();

    for (const auto& jm : j.at("marginals")) {
        MarginalModel mm;
        const std::string kind = jm.at("kind").get<std::string>();
        if (kind == "parametric") {
            mm.kind = MarginalModel::Kind::parametric;
            mm.gmm.weights = vec_from_json(jm.at("weights"));
            mm.gmm.means = vec_from_json(jm.at("means"));
            mm.gmm.sds = vec_from_json(jm.at("sds"));
            if (mm.gmm.weights.size() != mm.gmm.means.size() ||
                mm.gmm.weights.size() != mm.gmm.sds.size())
                throw DomainError("model json: marginal parameter lengths differ");
        } else if (kind == "empirical") {
            mm.kind = MarginalModel::Kind::empirical;
            mm.sorted = vec_from_json(jm.at("sorted"));
        } else {
            throw DomainError("model json: unknown marginal kind '" + kind + "'");
        }
        m.marginals.push_back(std::move(mm));
    }
    if (m.marginals.size() != m.column_names.size())
        throw DomainError("model json: marginal/column count mismatch");

    const nlohmann::json& lat = j.at("latent");
    switch (m.latent.tag) {
        case Family::gmcm:
            m.latent.gmcm.mixture = mixture_from_json(lat);
            m.latent.gmcm.standardized = lat.at("standardized").get<bool>();
            break;
        case Family::gc: {
            const int d = lat.at("d").get<int>();
            m.latent.gauss.mean = vec_from_json(lat.at("mean"));
            m.latent.gauss.cov = mat_from_json(lat.at("cov"), d, d);
            break;
        }
        case Family::tgmm: m.latent.mixture = mixture_from_json(lat); break;
        case Family::student_t: {
            const int d = lat.at("d").get<int>();
            m.latent.t.mean = vec_from_json(lat.at("mean"));
            m.latent.t.scale = mat_from_json(lat.at("scale"), d, d);
            m.latent.t.dof = lat.at("dof").get<double>();
            break;
        }
    }
    if (m.latent.dim() != m.dim())
        throw DomainError("model json: latent dimension does not match marginal count");
    return m;
}

inline void save_model(const MetaModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DomainError("cannot open '" + path + "' for writing");
    out << model_to_json(m).dump(2) << '\n';
    if (!out) throw DomainError("write to '" + path + "' failed");
}

inline MetaModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DomainError("model json parse error in '" + path + "': " + e.what());
    }
    try {
        return model_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw DomainError("model json: malformed document in '" + path + "': " + e.what());
    }
}

}  // namespace metacond
