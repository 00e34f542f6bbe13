#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <string>
#include <vector>

#include "metacond/errors.hpp"
#include "metacond/gaussian.hpp"
#include "metacond/gmcm.hpp"
#include "metacond/marginals.hpp"
#include "metacond/math.hpp"
#include "metacond/mixture.hpp"
#include "metacond/rng.hpp"
#include "metacond/student_t.hpp"

namespace metacond {

enum class Family { gmcm, gc, tgmm, student_t };

inline std::string family_name(Family f) {
    switch (f) {
        case Family::gmcm: return "gmcm";
        case Family::gc: return "gc";
        case Family::tgmm: return "tgmm";
        default: return "student-t";
    }
}

inline Family family_from_name(const std::string& s) {
    if (s == "gmcm") return Family::gmcm;
    if (s == "gc" || s == "gaussian-copula") return Family::gc;
    if (s == "tgmm") return Family::tgmm;
    if (s == "student-t") return Family::student_t;
    throw DomainError("unknown family '" + s + "' (expected gmcm, gc, tgmm, student-t)");
}

/// Latent-space law. Exactly one member (per `tag`) is meaningful:
///   gmcm      - copula parameters (standardized mixture); conditionals come
///               back through the same member with standardized=false
///   gc        - Gaussian; N(0, R) for a fitted model, general after
///               conditioning
///   tgmm      - mixture over probit scores
///   student_t - multivariate t over probit scores
struct LatentFamily {
    Family tag = Family::gmcm;
    GmcmParams gmcm;
    GaussianParams gauss;
    Mixture mixture;
    StudentTParams t;

    int dim() const {
        switch (tag) {
            case Family::gmcm: return gmcm.mixture.dim();
            case Family::gc: return static_cast<int>(gauss.mean.size());
            case Family::tgmm: return mixture.dim();
            default: return t.dim();
        }
    }
};

struct MetaModel {
    std::vector<MarginalModel> marginals;
    LatentFamily latent;
    std::vector<std::string> column_names;

    int dim() const { return static_cast<int>(marginals.size()); }
};

struct ConditionRequest {
    std::vector<int> given_columns;  // strictly increasing, proper subset
    Eigen::VectorXd x_given;
    int n_samples = 1000;
    std::vector<double> cdf_grid;  // used by conditional_cdf only
};

struct FitJointConfig {
    Family family = Family::gmcm;
    int k = 2;  // latent components (gmcm / tgmm)
    MarginalModel::Kind margins = MarginalModel::Kind::parametric;
    int margin_k_max = 5;
    enum class Pit { ranks, parametric };
    Pit pit = Pit::ranks;  // how the copula-fitting inputs are formed
    FitOptions gmcm;       // copula fitter settings
    EmConfig em;           // marginal / tgmm EM settings
};

/// Optional fit summary: the latent-stage objective and, for iterative
/// copula fitters, the iteration count (0 for closed-form/EM latents).
struct FitDiagnostics {
    double loglik = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
};

namespace pipeline_detail {

constexpr double pit_epsilon = 1e-10;

inline double clamp_unit(double u) {
    return std::min(1.0 - pit_epsilon, std::max(pit_epsilon, u));
}

inline Eigen::MatrixXd probit(const Eigen::MatrixXd& u) {
    Eigen::MatrixXd z(u.rows(), u.cols());
    for (Eigen::Index i = 0; i < u.rows(); ++i)
        for (Eigen::Index j = 0; j < u.cols(); ++j) z(i, j) = normal_quantile(u(i, j));
    return z;
}

inline Eigen::MatrixXd pearson_correlation(const Eigen::MatrixXd& z) {
    const Eigen::Index n = z.rows(), d = z.cols();
    const Eigen::MatrixXd c = z.rowwise() - z.colwise().mean();
    Eigen::MatrixXd cov = c.transpose() * c / static_cast<double>(n - 1);
    Eigen::VectorXd s = cov.diagonal().cwiseSqrt();
    Eigen::MatrixXd r = s.cwiseInverse().asDiagonal() * cov * s.cwiseInverse().asDiagonal();
    for (Eigen::Index j = 0; j < d; ++j) r(j, j) = 1.0;
    return r;
}

/// CDF of the latent family's j-th (joint) margin at z.
inline double latent_margin_cdf(const LatentFamily& lf, int j, double z) {
    switch (lf.tag) {
        case Family::gmcm: return gmm_cdf(z, mixture_margin(lf.gmcm.mixture, j));
        case Family::gc:
            return normal_cdf((z - lf.gauss.mean(j)) / std::sqrt(lf.gauss.cov(j, j)));
        case Family::tgmm: return normal_cdf(z);  // probit-score convention
        default: {
            const boost::math::students_t_distribution<double> dist(lf.t.dof);
            return boost::math::cdf(dist, (z - lf.t.mean(j)) / std::sqrt(lf.t.scale(j, j)));
        }
    }
}

inline double latent_margin_quantile(const LatentFamily& lf, int j, double u) {
    switch (lf.tag) {
        case Family::gmcm: return gmm_quantile(u, mixture_margin(lf.gmcm.mixture, j));
        case Family::gc:
            return lf.gauss.mean(j) + std::sqrt(lf.gauss.cov(j, j)) * normal_quantile(u);
        case Family::tgmm: return normal_quantile(u);
        default: {
            const boost::math::students_t_distribution<double> dist(lf.t.dof);
            return lf.t.mean(j) +
                   std::sqrt(lf.t.scale(j, j)) * boost::math::quantile(dist, u);
        }
    }
}

inline std::vector<int> complement(const std::vector<int>& given, int d) {
    std::vector<int> target;
    std::size_t g = 0;
    for (int j = 0; j < d; ++j) {
        if (g < given.size() && given[g] == j)
            ++g;
        else
            target.push_back(j);
    }
    return target;
}

inline void validate_request(const ConditionRequest& req, int d) {
    if (req.given_columns.empty())
        throw UnsupportedShape("conditioning: no given columns");
    for (std::size_t i = 0; i < req.given_columns.size(); ++i) {
        const int c = req.given_columns[i];
        if (c < 0 || c >= d)
            throw UnsupportedShape("conditioning: column index " + std::to_string(c) +
                                   " out of range for dimension " + std::to_string(d));
        if (i > 0 && req.given_columns[i - 1] >= c)
            throw UnsupportedShape("conditioning: given columns must be strictly increasing");
    }
    if (req.given_columns.size() >= static_cast<std::size_t>(d))
        throw UnsupportedShape("conditioning: no target columns left");
    if (req.x_given.size() != static_cast<Eigen::Index>(req.given_columns.size()))
        throw UnsupportedShape("conditioning: x_given length " +
                               std::to_string(req.x_given.size()) + " does not match " +
                               std::to_string(req.given_columns.size()) + " given columns");
}

}  // namespace pipeline_detail

/// Fits marginals plus a latent dependence family.
///   gmcm      - copula maximum likelihood (Adam by default)
///   gc        - Pearson correlation of the probit scores
///   tgmm      - EM mixture over the probit scores
///   student_t - moments for location/scale, 1D likelihood search for dof
/// The copula-fitting inputs are rank pseudo-observations by default;
/// cfg.pit = parametric uses the fitted marginal CDFs instead.
inline MetaModel fit_joint(const Eigen::MatrixXd& data, const std::vector<std::string>& columns,
                           const FitJointConfig& cfg, Rng& rng, FitDiagnostics* diag = nullptr) {
    const Eigen::Index n = data.rows(), d = data.cols();
    if (n < 20) throw DomainError("fit_joint: need at least 20 rows, got " + std::to_string(n));
    if (d < 2) throw UnsupportedShape("fit_joint: need at least 2 columns");
    if (columns.size() != static_cast<std::size_t>(d))
        throw UnsupportedShape("fit_joint: column name count does not match data");

    MetaModel m;
    m.column_names = columns;
    auto margin_streams = rng.split_n(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) {
        try {
            if (cfg.margins == MarginalModel::Kind::parametric) {
                const MarginalFit fit = fit_marginal_aic(data.col(j), cfg.margin_k_max, cfg.em,
                                                         margin_streams[static_cast<std::size_t>(j)]);
                MarginalModel mm;
                mm.kind = MarginalModel::Kind::parametric;
                mm.gmm = fit.gmm;
                m.marginals.push_back(std::move(mm));
            } else {
                m.marginals.push_back(empirical_marginal(data.col(j)));
            }
        } catch (const Error& e) {
            throw Error("marginal fit failed for column '" + columns[static_cast<std::size_t>(j)] +
                        "' (index " + std::to_string(j) + "): " + e.what());
        }
    }

    Eigen::MatrixXd u;
    if (cfg.pit == FitJointConfig::Pit::ranks) {
        u = pseudo_observations(data);
    } else {
        u.resize(n, d);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < d; ++j)
                u(i, j) = pipeline_detail::clamp_unit(
                    marginal_cdf(data(i, j), m.marginals[static_cast<std::size_t>(j)]));
    }

    try {
        switch (cfg.family) {
            case Family::gmcm: {
                const GmcmFit fit = fit_gmcm(u, cfg.k, cfg.gmcm, rng);
                m.latent.tag = Family::gmcm;
                m.latent.gmcm = fit.params;
                if (diag) *diag = {fit.loglik, fit.iterations};
                break;
            }
            case Family::gc: {
                const Eigen::MatrixXd z = pipeline_detail::probit(u);
                m.latent.tag = Family::gc;
                m.latent.gauss = GaussianParams{Eigen::VectorXd::Zero(d),
                                                pipeline_detail::pearson_correlation(z)};
                if (diag) {
                    diag->iterations = 0;
                    diag->loglik = 0.0;
                    const Eigen::MatrixXd L = cholesky(m.latent.gauss.cov);
                    for (Eigen::Index i = 0; i < n; ++i)
                        diag->loglik += mvn_logpdf_chol(z.row(i).transpose(),
                                                        m.latent.gauss.mean, L);
                }
                break;
            }
            case Family::tgmm: {
                const Eigen::MatrixXd z = pipeline_detail::probit(u);
                m.latent.tag = Family::tgmm;
                const auto [mix, ll] = em_fit(z, cfg.k, cfg.em, rng);
                m.latent.mixture = mix;
                if (diag) *diag = {ll, 0};
                break;
            }
            case Family::student_t: {
                const Eigen::MatrixXd z = pipeline_detail::probit(u);
                const Eigen::VectorXd mu = z.colwise().mean();
                const Eigen::MatrixXd c = z.rowwise() - mu.transpose();
                const Eigen::MatrixXd s = c.transpose() * c / static_cast<double>(n - 1);
                // dof by golden-section likelihood search in log space; the
                // scale follows the moment identity cov = scale * v/(v-2)
                const auto loglik = [&](double log_nu) {
                    const double nu = std::exp(log_nu);
                    const StudentTParams p{mu, s * ((nu - 2.0) / nu), nu};
                    double total = 0.0;
                    for (Eigen::Index i = 0; i < n; ++i)
                        total += t_logpdf(z.row(i).transpose(), p);
                    return total;
                };
                const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
                double lo = std::log(2.1), hi = std::log(1000.0);
                double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
                double f1 = loglik(x1), f2 = loglik(x2);
                for (int it = 0; it < 60; ++it) {
                    if (f1 > f2) {
                        hi = x2, x2 = x1, f2 = f1;
                        x1 = hi - gr * (hi - lo);
                        f1 = loglik(x1);
                    } else {
                        lo = x1, x1 = x2, f1 = f2;
                        x2 = lo + gr * (hi - lo);
                        f2 = loglik(x2);
                    }
                }
                const double nu = std::exp(0.5 * (lo + hi));
                m.latent.tag = Family::student_t;
                m.latent.t = StudentTParams{mu, s * ((nu - 2.0) / nu), nu};
                if (diag) *diag = {loglik(std::log(nu)), 60};
                break;
            }
        }
    } catch (const Error& e) {
        throw Error("latent fit failed (family " + family_name(cfg.family) + "): " + e.what());
    }
    return m;
}

/// Data scale to latent scale on the selected columns:
/// z_j = Psi_j^-1(clamp(F_j(x_j))).
inline Eigen::VectorXd to_latent(const MetaModel& m, const Eigen::VectorXd& x,
                                 const std::vector<int>& cols) {
    if (x.size() != static_cast<Eigen::Index>(cols.size()))
        throw UnsupportedShape("to_latent: value/column count mismatch");
    Eigen::VectorXd z(x.size());
    for (std::size_t i = 0; i < cols.size(); ++i) {
        const int c = cols[i];
        if (c < 0 || c >= m.dim())
            throw UnsupportedShape("to_latent: column index " + std::to_string(c) +
                                   " out of range");
        const double u = pipeline_detail::clamp_unit(
            marginal_cdf(x(static_cast<Eigen::Index>(i)), m.marginals[static_cast<std::size_t>(c)]));
        z(static_cast<Eigen::Index>(i)) = pipeline_detail::latent_margin_quantile(m.latent, c, u);
    }
    return z;
}

/// Conditions the latent law on the given columns (transformed through
/// to_latent). The result's coordinates are the target columns in
/// increasing order; the back-transform margins stay those of the parent
/// model.
inline LatentFamily conditional_latent(const MetaModel& m, const ConditionRequest& req) {
    pipeline_detail::validate_request(req, m.dim());
    const IndexSplit split{pipeline_detail::complement(req.given_columns, m.dim()),
                           req.given_columns};
    const Eigen::VectorXd z_given = to_latent(m, req.x_given, req.given_columns);

    LatentFamily out;
    out.tag = m.latent.tag;
    switch (m.latent.tag) {
        case Family::gmcm:
            out.gmcm.mixture = mixture_condition(m.latent.gmcm.mixture, split, z_given);
            out.gmcm.standardized = false;
            break;
        case Family::gc:
            out.gauss = gaussian_condition(m.latent.gauss, split, z_given);
            break;
        case Family::tgmm:
            out.mixture = mixture_condition(m.latent.mixture, split, z_given);
            break;
        case Family::student_t:
            out.t = t_condition(m.latent.t, split, z_given);
            break;
    }
    return out;
}

/// Samples the conditional law and maps back to the data scale:
/// x_j = F_j^-1(Psi_j(z_j)) per target column j. Deterministic per seed.
inline Eigen::MatrixXd conditional_sample(const MetaModel& m, const ConditionRequest& req,
                                          Rng& rng) {
    if (req.n_samples < 1) throw DomainError("conditional_sample: n_samples must be >= 1");
    const LatentFamily cond = conditional_latent(m, req);
    const std::vector<int> targets = pipeline_detail::complement(req.given_columns, m.dim());

    Eigen::MatrixXd zs;
    switch (cond.tag) {
        case Family::gmcm: zs = mixture_sample(cond.gmcm.mixture, req.n_samples, rng); break;
        case Family::gc: zs = gaussian_sample(cond.gauss, req.n_samples, rng); break;
        case Family::tgmm: zs = mixture_sample(cond.mixture, req.n_samples, rng); break;
        case Family::student_t: zs = t_sample(cond.t, req.n_samples, rng); break;
    }

    // Per-column parent margins, hoisted out of the sample loop.
    std::vector<UnivariateMixture> gmm_margins;
    if (m.latent.tag == Family::gmcm)
        for (int c : targets) gmm_margins.push_back(mixture_margin(m.latent.gmcm.mixture, c));

    Eigen::MatrixXd out(req.n_samples, static_cast<Eigen::Index>(targets.size()));
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const int c = targets[i];
        const auto col = static_cast<Eigen::Index>(i);
        for (Eigen::Index r = 0; r < out.rows(); ++r) {
            const double z = zs(r, col);
            double u;
            if (m.latent.tag == Family::gmcm)
                u = gmm_cdf(z, gmm_margins[i]);
            else
                u = pipeline_detail::latent_margin_cdf(m.latent, c, z);
            out(r, col) = marginal_quantile(pipeline_detail::clamp_unit(u),
                                            m.marginals[static_cast<std::size_t>(c)]);
        }
    }
    return out;
}

/// Conditional CDF of a single target column over req.cdf_grid:
/// F(x) = F_latent(Psi^-1(F_target(x)) | z_given). Nondecreasing, in [0,1].
inline Eigen::VectorXd conditional_cdf(const MetaModel& m, const ConditionRequest& req) {
    const std::vector<int> targets = pipeline_detail::complement(req.given_columns, m.dim());
    if (targets.size() != 1)
        throw UnsupportedShape("conditional_cdf: exactly one target column required, have " +
                               std::to_string(targets.size()));
    for (std::size_t i = 1; i < req.cdf_grid.size(); ++i)
        if (req.cdf_grid[i] < req.cdf_grid[i - 1])
            throw UnsupportedShape("conditional_cdf: grid must be sorted ascending");

    const LatentFamily cond = conditional_latent(m, req);
    const int c = targets[0];

    UnivariateMixture cond_margin;  // gmcm / tgmm
    if (cond.tag == Family::gmcm)
        cond_margin = mixture_margin(cond.gmcm.mixture, 0);
    else if (cond.tag == Family::tgmm)
        cond_margin = mixture_margin(cond.mixture, 0);

    Eigen::VectorXd out(static_cast<Eigen::Index>(req.cdf_grid.size()));
    for (std::size_t i = 0; i < req.cdf_grid.size(); ++i) {
        const double u = pipeline_detail::clamp_unit(
            marginal_cdf(req.cdf_grid[i], m.marginals[static_cast<std::size_t>(c)]));
        const double z = pipeline_detail::latent_margin_quantile(m.latent, c, u);
        double f;
        switch (cond.tag) {
            case Family::gmcm:
            case Family::tgmm: f = gmm_cdf(z, cond_margin); break;
            case Family::gc:
                f = normal_cdf((z - cond.gauss.mean(0)) / std::sqrt(cond.gauss.cov(0, 0)));
                break;
            default: {
                const boost::math::students_t_distribution<double> dist(cond.t.dof);
                f = boost::math::cdf(dist,
                                     (z - cond.t.mean(0)) / std::sqrt(cond.t.scale(0, 0)));
            }
        }
        out(static_cast<Eigen::Index>(i)) = std::min(1.0, std::max(0.0, f));
    }
    return out;
}

/// Conditional sampler from a Gaussian-kernel KDE of the raw data: draw
/// joint KDE samples, keep those whose conditioning coordinates fall within
/// `tol` (max-norm) of x_given, return the target coordinates of the first
/// n_samples accepted. The draw budget starts at 2*n_samples and doubles
/// until enough are accepted, capped at 2^20 total draws.
inline Eigen::MatrixXd ckde_conditional_sample(const Eigen::MatrixXd& data,
                                               const ConditionRequest& req,
                                               double bandwidth, double tol, Rng& rng) {
    const int d = static_cast<int>(data.cols());
    pipeline_detail::validate_request(req, d);
    if (req.n_samples < 1) throw DomainError("ckde: n_samples must be >= 1");
    if (data.rows() < 1) throw UnsupportedShape("ckde: empty data");
    if (!(bandwidth > 0.0)) throw DomainError("ckde: bandwidth must be positive");
    const std::vector<int> targets = pipeline_detail::complement(req.given_columns, d);

    Eigen::MatrixXd out(req.n_samples, static_cast<Eigen::Index>(targets.size()));
    Eigen::VectorXd x(d);
    int accepted = 0;
    long long drawn = 0;
    // Batch size doubles until a single batch reaches the cap; if a full
    // capped batch still leaves us short, the conditioning point is deemed
    // unreachable at this tolerance.
    const long long cap = 1ll << 20;
    long long budget = std::max(2ll * req.n_samples, 256ll);
    while (accepted < req.n_samples) {
        const long long batch = std::min(budget, cap);
        for (long long b = 0; b < batch && accepted < req.n_samples; ++b) {
            const auto row = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(data.rows())));
            for (int j = 0; j < d; ++j) x(j) = data(row, j) + bandwidth * rng.normal();
            ++drawn;
            bool ok = true;
            for (std::size_t g = 0; g < req.given_columns.size(); ++g)
                if (!(std::abs(x(req.given_columns[g]) - req.x_given(static_cast<Eigen::Index>(g))) <
                      tol)) {
                    ok = false;
                    break;
                }
            if (!ok) continue;
            for (std::size_t i = 0; i < targets.size(); ++i)
                out(accepted, static_cast<Eigen::Index>(i)) = x(targets[i]);
            ++accepted;
        }
        if (accepted < req.n_samples && batch >= cap)
            throw InsufficientAcceptance("ckde: " + std::to_string(accepted) + " of " +
                                         std::to_string(req.n_samples) +
                                         " samples accepted after " + std::to_string(drawn) +
                                         " draws (tol " + std::to_string(tol) + ")");
        budget *= 2;
    }
    return out;
}

}  // namespace metacond
