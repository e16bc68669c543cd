#ifndef NWREG_FINANCE_HPP
#define NWREG_FINANCE_HPP

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "nwreg/common.hpp"

namespace nwreg::fin {

/// Calendar date with civil-day arithmetic.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    bool operator==(const Date&) const = default;
    auto operator<=>(const Date&) const = default;
};

/// Parse strict ISO-8601 "YYYY-MM-DD".
Date parse_date(const std::string& s);
std::string format_date(const Date& d);

/// Days since 1970-01-01.
long day_number(const Date& d);

/// Index of the ISO week containing the date (weeks start on Monday;
/// consecutive calendar weeks differ by exactly 1).
long week_id(const Date& d);

/// Adjusted close prices, dates by tickers. Missing entries are NaN.
struct PricePanel {
    std::vector<Date> dates;            ///< strictly increasing
    std::vector<std::string> tickers;   ///< sorted, unique
    Mat adj_close;                      ///< dates.size() x tickers.size()
    std::string index_ticker;
    Index index_col = -1;
};

/// Weekly arithmetic percentage returns, weeks by tickers.
struct ReturnPanel {
    std::vector<Date> week_ends;        ///< last trading date of each week
    std::vector<long> week_ids;
    std::vector<std::string> tickers;
    Mat r;                              ///< week_ends.size() x tickers.size(); NaN = missing
    Index index_col = -1;

    Index n_weeks() const { return static_cast<Index>(week_ends.size()); }
};

/// Read a date,ticker,adj_close CSV. Rejects duplicate (date,ticker) rows,
/// non-positive prices, and panels where the index ticker is absent on any
/// date.
PricePanel ingest_prices(std::istream& in, const std::string& index_ticker);
PricePanel ingest_prices_file(const std::string& path, const std::string& index_ticker);

/// Collapse daily prices to ISO weeks (last available trading date per week
/// and ticker) and difference into percentage returns. Without `allow_gaps`
/// a return requires a price in the immediately preceding panel week; with
/// it, the return spans back to the most recent available week.
ReturnPanel weekly_returns(const PricePanel& pp, bool allow_gaps = false);

/// One rolling fit: both estimators on (stock ~ intercept + index) over a
/// full window, with slope tests against the high/low beta nulls.
struct RollingCell {
    Index week = 0;    ///< window end, index into ReturnPanel::week_ends
    Index ticker = 0;  ///< index into ReturnPanel::tickers
    double beta_nw = 0, beta_ls = 0;
    double se_nw = 0, se_ls = 0;
    double alpha_nw = 0, alpha_ls = 0;
    double se_alpha_nw = 0, se_alpha_ls = 0;
    double t_high_nw = 0, t_high_ls = 0;
    double t_low_nw = 0, t_low_ls = 0;
};

struct RollingPanel {
    Index window = 100;
    double high = 1.4;
    double low = 0.8;
    double crit = 0.0;               ///< one-sided critical value used downstream
    std::vector<RollingCell> cells;  ///< ordered by (week, ticker)
    std::vector<Index> week_ends;    ///< distinct window-end week indices
    Index skipped = 0;               ///< (week,ticker) pairs without a full window
};

struct RollOptions {
    double crit = 0.0;          ///< 0 = exact one-sided 5% normal quantile
    double clip_d = 10.0;
    double clip_exponent = 0.2;
    unsigned threads = 0;
};

RollingPanel roll_fit(const ReturnPanel& rp, Index window = 100, double high = 1.4,
                      double low = 0.8, const RollOptions& opts = {});

/// Weekly out-of-sample statistics for one selection rule.
struct StrategyStats {
    std::string name;
    double mean = 0, sd = 0, sharpe = 0;
    double alpha = 0, alpha_se = 0, beta = 0;
    double share = 0, delta_share = 0;
    Index weeks = 0;
};

struct BacktestReport {
    std::vector<StrategyStats> strategies;  ///< Index, LowNW, LowLS, HighNW, HighLS
    // roughness of the rolling series: rms of 100 * one-step changes
    double rough_beta_nw = 0, rough_beta_ls = 0;
    double rough_se_nw = 0, rough_se_ls = 0;
    std::string empty_selection_policy = "cash";
    std::string summary_estimator = "norm_weighted";
    double crit = 0.0;
};

struct BacktestOptions {
    bool ls_summary = false;  ///< use the LS estimator for portfolio alpha/beta
    double clip_d = 10.0;
    double clip_exponent = 0.2;
};

/// Form the test-selected portfolios each week, earn next week's equal
/// weighted return (cash when the selection is empty), and summarize.
BacktestReport select_and_backtest(const RollingPanel& rpanel, const ReturnPanel& rp,
                                   const BacktestOptions& opts = {});

/// Weekly selections per strategy; exposed for the look-ahead tests.
std::map<std::string, std::vector<std::vector<Index>>> weekly_selections(
    const RollingPanel& rpanel);

/// RMS of 100 * step changes, pooled over tickers and consecutive window ends.
struct RoughnessTable {
    double beta_nw = 0, beta_ls = 0, se_nw = 0, se_ls = 0;
};
RoughnessTable roughness(const RollingPanel& rpanel);

/// Cross-sectional summary at one window end.
struct CrossSectionRow {
    std::string name;
    double mean = 0, q10 = 0, q50 = 0, q90 = 0;
};
struct CrossSection {
    Index week = 0;
    Index tickers = 0;
    std::vector<CrossSectionRow> rows;  ///< beta/se/alpha/se-alpha for both estimators
    Index high_reject_nw = 0, high_reject_ls = 0, high_agree = 0;
    Index low_reject_nw = 0, low_reject_ls = 0, low_agree = 0;
};
CrossSection cross_section_summary(const RollingPanel& rpanel, Index week);

}  // namespace nwreg::fin

#endif
