#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "metacond/csv.hpp"
#include "metacond/errors.hpp"
#include "metacond/pipeline.hpp"
#include "metacond/rng.hpp"
#include "metacond/scoring.hpp"

namespace metacond {

/// One conditional-density method entered in the train/test comparison.
struct MethodSpec {
    std::string name;  // display label, e.g. "gmcm" or "ckde"
    bool is_ckde = false;
    FitJointConfig fit;  // ignored when is_ckde
    double ckde_bandwidth = 1.0;
    double ckde_tol = 0.1;
};

struct ScoreRecord {
    int split = 0;
    std::string method;
    int point = 0;  // index within the split's test set
    std::string score;
    double value = 0.0;
};

struct ScoreAggregate {
    std::string method;
    std::string score;
    double mean = 0.0;
    double sd = 0.0;
    int count = 0;
};

struct EvalConfig {
    double split_frac = 0.8;
    int n_samples = 1000;
    int n_splits = 1;
    std::uint64_t seed = 0;
};

struct ScoreReport {
    std::vector<ScoreRecord> per_point;
    std::vector<ScoreAggregate> aggregate;
    std::vector<std::string> failures;  // "split S method M: reason"
    std::vector<std::string> method_names;
    EvalConfig config;
};

namespace evaluate_detail {

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// Canonical description of what a method *does* (display name excluded):
/// two entries with equal descriptors draw from identical RNG streams and
/// therefore produce identical score columns.
inline std::string method_descriptor(const MethodSpec& m) {
    if (m.is_ckde)
        return "ckde|bw=" + std::to_string(m.ckde_bandwidth) + "|tol=" + std::to_string(m.ckde_tol);
    std::string s = family_name(m.fit.family);
    s += "|k=" + std::to_string(m.fit.k);
    s += m.fit.margins == MarginalModel::Kind::parametric ? "|margins=parametric"
                                                          : "|margins=empirical";
    s += m.fit.pit == FitJointConfig::Pit::ranks ? "|pit=ranks" : "|pit=parametric";
    s += "|kmax=" + std::to_string(m.fit.margin_k_max);
    switch (m.fit.gmcm.method) {
        case FitOptions::Method::ad: s += "|fitter=ad"; break;
        case FitOptions::Method::fd: s += "|fitter=fd"; break;
        case FitOptions::Method::pem: s += "|fitter=pem"; break;
    }
    return s;
}

inline Eigen::MatrixXd select_rows(const Eigen::MatrixXd& data, const std::vector<int>& rows,
                                   std::size_t lo, std::size_t hi) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(hi - lo), data.cols());
    for (std::size_t i = lo; i < hi; ++i)
        out.row(static_cast<Eigen::Index>(i - lo)) = data.row(rows[i]);
    return out;
}

}  // namespace evaluate_detail

/// Random train/test splits, one fit per (split, method) cell, 1000-draw
/// conditional samples at every test point, proper scores against the
/// observed targets. Per-target-column "crps:<col>" and "logs:<col>",
/// joint "es" always and "vs" when there are >= 2 targets. A failing cell
/// is recorded in `failures` and the run continues.
///
/// Deterministic given (config, seed): the shuffle stream depends only on
/// (seed, split) and each cell's stream only on (seed, split, method
/// descriptor), so neither method order nor failures elsewhere can shift
/// another cell's results.
inline ScoreReport evaluate_split(const Eigen::MatrixXd& data,
                                  const std::vector<std::string>& columns,
                                  const std::vector<MethodSpec>& methods,
                                  const std::vector<int>& given_columns, const EvalConfig& cfg) {
    using namespace evaluate_detail;
    const auto n = static_cast<std::size_t>(data.rows());
    const int d = static_cast<int>(data.cols());
    if (columns.size() != static_cast<std::size_t>(d))
        throw UnsupportedShape("evaluate_split: column name count does not match data");
    if (cfg.n_splits < 1) throw DomainError("evaluate_split: n_splits must be >= 1");
    if (!(cfg.split_frac > 0.0) || !(cfg.split_frac < 1.0))
        throw DomainError("evaluate_split: split_frac must lie in (0,1)");
    const auto n_train = static_cast<std::size_t>(std::floor(cfg.split_frac * static_cast<double>(n)));
    if (n_train < 20 || n_train >= n)
        throw DomainError("evaluate_split: split of " + std::to_string(n) +
                          " rows leaves train=" + std::to_string(n_train) +
                          ", need >= 20 train and >= 1 test");
    const std::vector<int> targets = pipeline_detail::complement(given_columns, d);
    if (targets.empty() || targets.size() == static_cast<std::size_t>(d))
        throw UnsupportedShape("evaluate_split: need a proper given/target split");

    ScoreReport report;
    report.config = cfg;
    for (const auto& m : methods) report.method_names.push_back(m.name);

    for (int s = 0; s < cfg.n_splits; ++s) {
        Rng shuffle_rng(fnv1a("shuffle:" + std::to_string(s)) ^ cfg.seed);
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = n - 1; i > 0; --i)
            std::swap(perm[i], perm[shuffle_rng.index(i + 1)]);
        const Eigen::MatrixXd train = select_rows(data, perm, 0, n_train);
        const Eigen::MatrixXd test = select_rows(data, perm, n_train, n);
        const std::uint64_t split_base = fnv1a("split:" + std::to_string(s)) ^ cfg.seed;

        for (const auto& method : methods) {
            Rng cell_rng(split_base ^ fnv1a(method_descriptor(method)));
            std::vector<ScoreRecord> cell;
            try {
                MetaModel model;
                if (!method.is_ckde) model = fit_joint(train, columns, method.fit, cell_rng);
                for (Eigen::Index t = 0; t < test.rows(); ++t) {
                    ConditionRequest req;
                    req.given_columns = given_columns;
                    req.x_given.resize(static_cast<Eigen::Index>(given_columns.size()));
                    for (std::size_t g = 0; g < given_columns.size(); ++g)
                        req.x_given(static_cast<Eigen::Index>(g)) = test(t, given_columns[g]);
                    req.n_samples = cfg.n_samples;

                    const Eigen::MatrixXd samples =
                        method.is_ckde ? ckde_conditional_sample(train, req, method.ckde_bandwidth,
                                                                 method.ckde_tol, cell_rng)
                                       : conditional_sample(model, req, cell_rng);

                    Eigen::VectorXd y(static_cast<Eigen::Index>(targets.size()));
                    for (std::size_t i = 0; i < targets.size(); ++i)
                        y(static_cast<Eigen::Index>(i)) = test(t, targets[i]);

                    const int pid = static_cast<int>(t);
                    for (std::size_t i = 0; i < targets.size(); ++i) {
                        const std::span<const double> col(
                            samples.col(static_cast<Eigen::Index>(i)).data(),
                            static_cast<std::size_t>(samples.rows()));
                        const std::string& cname = columns[static_cast<std::size_t>(targets[i])];
                        cell.push_back({s, method.name, pid, "crps:" + cname,
                                        crps(col, y(static_cast<Eigen::Index>(i)))});
                        cell.push_back({s, method.name, pid, "logs:" + cname,
                                        log_score_kde(col, y(static_cast<Eigen::Index>(i)))});
                    }
                    cell.push_back({s, method.name, pid, "es", energy_score(samples, y)});
                    if (targets.size() >= 2)
                        cell.push_back({s, method.name, pid, "vs", variogram_score(samples, y)});
                }
            } catch (const std::exception& e) {
                report.failures.push_back("split " + std::to_string(s) + " method " + method.name +
                                          ": " + e.what());
                continue;  // drop the cell's partial records
            }
            report.per_point.insert(report.per_point.end(), cell.begin(), cell.end());
        }
    }

    // Pooled (method, score) aggregates over every per-point record.
    for (const auto& r : report.per_point) {
        auto it = std::find_if(report.aggregate.begin(), report.aggregate.end(),
                               [&](const ScoreAggregate& a) {
                                   return a.method == r.method && a.score == r.score;
                               });
        if (it == report.aggregate.end()) {
            report.aggregate.push_back({r.method, r.score, 0.0, 0.0, 0});
            it = std::prev(report.aggregate.end());
        }
        it->mean += r.value;  // running sum; finalized below
        ++it->count;
    }
    for (auto& a : report.aggregate) a.mean /= a.count;
    for (auto& a : report.aggregate) {
        if (a.count < 2) continue;
        double ss = 0.0;
        for (const auto& r : report.per_point)
            if (r.method == a.method && r.score == a.score) {
                const double dlt = r.value - a.mean;
                ss += dlt * dlt;
            }
        a.sd = std::sqrt(ss / (a.count - 1));
    }
    return report;
}

/// Aggregate mean for (method, score); NaN when the pair is absent.
inline double aggregate_mean(const ScoreReport& report, const std::string& method,
                             const std::string& score) {
    for (const auto& a : report.aggregate)
        if (a.method == method && a.score == score) return a.mean;
    return std::numeric_limits<double>::quiet_NaN();
}

inline void write_scores_csv(const ScoreReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DomainError("cannot open '" + path + "' for writing");
    out << "split,method,point,score,value\n";
    for (const auto& r : report.per_point)
        out << r.split << ',' << r.method << ',' << r.point << ',' << r.score << ','
            << csv_detail::format_double(r.value) << '\n';
    if (!out) throw DomainError("write to '" + path + "' failed");
}

inline void write_scores_json(const ScoreReport& report, const std::string& path) {
    nlohmann::json j;
    j["seed"] = report.config.seed;
    j["n_samples"] = report.config.n_samples;
    j["n_splits"] = report.config.n_splits;
    j["split_frac"] = report.config.split_frac;
    j["methods"] = report.method_names;
    j["failures"] = report.failures;
    nlohmann::json agg = nlohmann::json::array();
    for (const auto& a : report.aggregate) {
        nlohmann::json ja;
        ja["method"] = a.method;
        ja["score"] = a.score;
        ja["mean"] = a.mean;
        ja["sd"] = a.sd;
        ja["count"] = a.count;
        agg.push_back(std::move(ja));
    }
    j["aggregate"] = agg;
    std::ofstream out(path);
    if (!out) throw DomainError("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
    if (!out) throw DomainError("write to '" + path + "' failed");
}

}  // namespace metacond
