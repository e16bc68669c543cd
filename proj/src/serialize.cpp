#include "nwreg/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "nwreg/stats.hpp"

namespace nwreg {

std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {

nlohmann::json vec_to_json(const Vec& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

nlohmann::json mat_to_json(const Mat& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

nlohmann::json fit_to_json(const FitResult& fit) {
    nlohmann::json j;
    j["beta"] = vec_to_json(fit.beta);
    j["se"] = vec_to_json(fit.se);
    j["cov"] = mat_to_json(fit.cov);
    j["clip_count"] = fit.clip_count;
    j["estimator_kind"] =
        fit.estimator_kind == EstimatorKind::NormWeighted ? "norm_weighted" : "least_squares";
    return j;
}

nlohmann::json quantile_fit_to_json(const QuantileFit& qf) {
    nlohmann::json j;
    j["beta"] = vec_to_json(qf.beta);
    j["se"] = vec_to_json(qf.se);
    j["cov"] = mat_to_json(qf.cov);
    j["tau"] = qf.tau;
    j["bandwidth"] = qf.bandwidth;
    j["in_band_count"] = qf.in_band_count;
    j["objective"] = qf.objective;
    return j;
}

std::string backtest_report_json(const fin::BacktestReport& report) {
    std::ostringstream os;
    os << "{\n";
    os << "  \"crit\": " << fmt17(report.crit) << ",\n";
    os << "  \"empty_selection_policy\": \"" << report.empty_selection_policy << "\",\n";
    os << "  \"roughness\": {\n";
    os << "    \"rms100_beta_nw\": " << fmt17(report.rough_beta_nw) << ",\n";
    os << "    \"rms100_beta_ls\": " << fmt17(report.rough_beta_ls) << ",\n";
    os << "    \"rms100_se_nw\": " << fmt17(report.rough_se_nw) << ",\n";
    os << "    \"rms100_se_ls\": " << fmt17(report.rough_se_ls) << "\n";
    os << "  },\n";
    os << "  \"strategies\": [\n";
    for (std::size_t i = 0; i < report.strategies.size(); ++i) {
        const auto& st = report.strategies[i];
        os << "    {\n";
        os << "      \"name\": \"" << st.name << "\",\n";
        os << "      \"mean\": " << fmt17(st.mean) << ",\n";
        os << "      \"sd\": " << fmt17(st.sd) << ",\n";
        os << "      \"sharpe\": " << fmt17(st.sharpe) << ",\n";
        os << "      \"sharpe_display\": \"" << format_sig_trunc(st.sharpe, 2) << "\",\n";
        os << "      \"alpha\": " << fmt17(st.alpha) << ",\n";
        os << "      \"alpha_se\": " << fmt17(st.alpha_se) << ",\n";
        os << "      \"beta\": " << fmt17(st.beta) << ",\n";
        os << "      \"share\": " << fmt17(st.share) << ",\n";
        os << "      \"delta_share\": " << fmt17(st.delta_share) << ",\n";
        os << "      \"weeks\": " << st.weeks << "\n";
        os << "    }" << (i + 1 < report.strategies.size() ? "," : "") << "\n";
    }
    os << "  ],\n";
    os << "  \"summary_estimator\": \"" << report.summary_estimator << "\"\n";
    os << "}\n";
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << content;
}

void write_pivots_csv(const std::string& path, const sim::SimSummary& summary) {
    std::ostringstream os;
    os << "rep,t_nw,t_ls\n";
    for (std::size_t r = 0; r < summary.t_nw.size(); ++r) {
        os << r << "," << fmt17(summary.t_nw[r]) << "," << fmt17(summary.t_ls[r]) << "\n";
    }
    write_text_file(path, os.str());
}

void write_qq_csv(const std::string& path, const std::vector<sim::QqPoint>& nw,
                  const std::vector<sim::QqPoint>& ls) {
    std::ostringstream os;
    os << "pivot,theoretical,empirical\n";
    for (const auto& p : nw) {
        os << "t_nw," << fmt17(p.theoretical) << "," << fmt17(p.empirical) << "\n";
    }
    for (const auto& p : ls) {
        os << "t_ls," << fmt17(p.theoretical) << "," << fmt17(p.empirical) << "\n";
    }
    write_text_file(path, os.str());
}

void write_cvm_grid_csv(const std::string& path, const std::vector<CvmGridRow>& rows) {
    std::ostringstream os;
    os << "nu,n,sigma,cvm_nw,cvm_ls,q50,q95,q99\n";
    for (const auto& r : rows) {
        os << fmt17(r.nu) << "," << r.n << "," << fmt17(r.sigma) << "," << fmt17(r.cvm_nw)
           << "," << fmt17(r.cvm_ls) << "," << fmt17(r.q50) << "," << fmt17(r.q95) << ","
           << fmt17(r.q99) << "\n";
    }
    write_text_file(path, os.str());
}

void write_rolling_csv(const std::string& path, const fin::RollingPanel& panel,
                       const fin::ReturnPanel& rp) {
    std::ostringstream os;
    os << "window_end,ticker,beta_nw,beta_ls,se_nw,se_ls,alpha_nw,alpha_ls,"
          "se_alpha_nw,se_alpha_ls,t_high_nw,t_high_ls,t_low_nw,t_low_ls\n";
    for (const auto& c : panel.cells) {
        os << fin::format_date(rp.week_ends[c.week]) << "," << rp.tickers[c.ticker];
        for (double v : {c.beta_nw, c.beta_ls, c.se_nw, c.se_ls, c.alpha_nw, c.alpha_ls,
                         c.se_alpha_nw, c.se_alpha_ls, c.t_high_nw, c.t_high_ls, c.t_low_nw,
                         c.t_low_ls}) {
            os << "," << fmt17(v);
        }
        os << "\n";
    }
    write_text_file(path, os.str());
}

void write_summary_csv(const std::string& path, const fin::CrossSection& cs) {
    std::ostringstream os;
    os << "kind,name,mean,q10,q50,q90\n";
    for (const auto& row : cs.rows) {
        os << "stat," << row.name << "," << fmt17(row.mean) << "," << fmt17(row.q10) << ","
           << fmt17(row.q50) << "," << fmt17(row.q90) << "\n";
    }
    os << "test,high_reject_nw," << cs.high_reject_nw << ",,,\n";
    os << "test,high_reject_ls," << cs.high_reject_ls << ",,,\n";
    os << "test,high_agree," << cs.high_agree << ",,,\n";
    os << "test,low_reject_nw," << cs.low_reject_nw << ",,,\n";
    os << "test,low_reject_ls," << cs.low_reject_ls << ",,,\n";
    os << "test,low_agree," << cs.low_agree << ",,,\n";
    write_text_file(path, os.str());
}

}  // namespace nwreg
