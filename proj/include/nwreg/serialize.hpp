#ifndef NWREG_SERIALIZE_HPP
#define NWREG_SERIALIZE_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "nwreg/estimators.hpp"
#include "nwreg/finance.hpp"
#include "nwreg/quantile.hpp"
#include "nwreg/sim.hpp"

namespace nwreg {

/// "%.17g" rendering used for every float in the CSV/JSON artifacts.
std::string fmt17(double x);

nlohmann::json fit_to_json(const FitResult& fit);
nlohmann::json quantile_fit_to_json(const QuantileFit& qf);

/// Hand-rendered report JSON (stable key order, 17 significant digits).
std::string backtest_report_json(const fin::BacktestReport& report);

void write_text_file(const std::string& path, const std::string& content);

void write_pivots_csv(const std::string& path, const sim::SimSummary& summary);
void write_qq_csv(const std::string& path, const std::vector<sim::QqPoint>& nw,
                  const std::vector<sim::QqPoint>& ls);

struct CvmGridRow {
    double nu = 0, sigma = 0;
    Index n = 0;
    double cvm_nw = 0, cvm_ls = 0;
    double q50 = 0, q95 = 0, q99 = 0;
};
void write_cvm_grid_csv(const std::string& path, const std::vector<CvmGridRow>& rows);

void write_rolling_csv(const std::string& path, const fin::RollingPanel& panel,
                       const fin::ReturnPanel& rp);
void write_summary_csv(const std::string& path, const fin::CrossSection& cs);

}  // namespace nwreg

#endif
