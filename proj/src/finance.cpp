#include "nwreg/finance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "nwreg/estimators.hpp"
#include "nwreg/stats.hpp"

namespace nwreg::fin {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_missing(double v) { return std::isnan(v); }

}  // namespace

Date parse_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
        throw ParseError("bad date '" + s + "', expected YYYY-MM-DD");
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i == 4 || i == 7) continue;
        if (s[i] < '0' || s[i] > '9') throw ParseError("bad date '" + s + "'");
    }
    Date d;
    d.year = std::stoi(s.substr(0, 4));
    d.month = std::stoi(s.substr(5, 2));
    d.day = std::stoi(s.substr(8, 2));
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31) {
        throw ParseError("bad date '" + s + "'");
    }
    return d;
}

std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

// days_from_civil, Hinnant's algorithm
long day_number(const Date& dt) {
    int y = dt.year;
    const int m = dt.month;
    const int d = dt.day;
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

long week_id(const Date& d) {
    const long days = day_number(d);
    // 1970-01-01 was a Thursday; shift so Mondays open each week
    const long shifted = days + 3;
    return shifted >= 0 ? shifted / 7 : -((-shifted + 6) / 7);
}

PricePanel ingest_prices(std::istream& in, const std::string& index_ticker) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty price file", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "date,ticker,adj_close") {
        throw ParseError("expected header 'date,ticker,adj_close', got '" + line + "'", 1);
    }

    struct Row {
        Date date;
        std::string ticker;
        double price;
    };
    std::vector<Row> rows;
    std::set<std::pair<long, std::string>> seen;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string ds, ts, ps;
        if (!std::getline(ss, ds, ',') || !std::getline(ss, ts, ',') || !std::getline(ss, ps)) {
            throw ParseError("expected 3 comma-separated fields", lineno);
        }
        Row row;
        try {
            row.date = parse_date(ds);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), lineno);
        }
        row.ticker = ts;
        if (row.ticker.empty()) throw ParseError("empty ticker", lineno);
        try {
            std::size_t pos = 0;
            row.price = std::stod(ps, &pos);
            if (pos != ps.size()) throw std::invalid_argument(ps);
        } catch (const std::exception&) {
            throw ParseError("bad price '" + ps + "'", lineno);
        }
        if (!(row.price > 0.0) || !std::isfinite(row.price)) {
            throw ParseError("non-positive price '" + ps + "'", lineno);
        }
        if (!seen.insert({day_number(row.date), row.ticker}).second) {
            throw DuplicateRowError("duplicate row for " + format_date(row.date) + "," +
                                    row.ticker);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("price file has no data rows", lineno);

    PricePanel pp;
    pp.index_ticker = index_ticker;
    std::set<long> date_set;
    std::set<std::string> ticker_set;
    for (const auto& r : rows) {
        date_set.insert(day_number(r.date));
        ticker_set.insert(r.ticker);
    }
    if (!ticker_set.count(index_ticker)) {
        throw MissingIndexError("index ticker '" + index_ticker + "' absent from file");
    }
    std::map<long, Index> date_pos;
    for (long dn : date_set) {
        date_pos[dn] = static_cast<Index>(pp.dates.size());
        pp.dates.push_back(Date{});
    }
    std::map<std::string, Index> ticker_pos;
    for (const auto& t : ticker_set) {
        ticker_pos[t] = static_cast<Index>(pp.tickers.size());
        pp.tickers.push_back(t);
    }
    pp.index_col = ticker_pos[index_ticker];
    pp.adj_close = Mat::Constant(static_cast<Index>(pp.dates.size()),
                                 static_cast<Index>(pp.tickers.size()), kNaN);
    for (const auto& r : rows) {
        const Index di = date_pos[day_number(r.date)];
        pp.dates[di] = r.date;
        pp.adj_close(di, ticker_pos[r.ticker]) = r.price;
    }
    for (Index di = 0; di < static_cast<Index>(pp.dates.size()); ++di) {
        if (is_missing(pp.adj_close(di, pp.index_col))) {
            throw MissingIndexError("index ticker '" + index_ticker + "' missing on " +
                                    format_date(pp.dates[di]));
        }
    }
    return pp;
}

PricePanel ingest_prices_file(const std::string& path, const std::string& index_ticker) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return ingest_prices(in, index_ticker);
}

ReturnPanel weekly_returns(const PricePanel& pp, bool allow_gaps) {
    if (pp.dates.empty()) throw Error("weekly_returns: empty panel");
    const Index nt = static_cast<Index>(pp.tickers.size());

    // group dates by ISO week; dates are sorted, so weeks come out sorted
    std::vector<long> wids;
    std::vector<Index> last_date;  // last panel date index of each week
    for (Index di = 0; di < static_cast<Index>(pp.dates.size()); ++di) {
        const long wid = week_id(pp.dates[di]);
        if (wids.empty() || wid != wids.back()) {
            wids.push_back(wid);
            last_date.push_back(di);
        } else {
            last_date.back() = di;
        }
    }
    const Index nw = static_cast<Index>(wids.size());

    // per ticker, the last available price within each week
    Mat wprice = Mat::Constant(nw, nt, kNaN);
    {
        Index w = 0;
        for (Index di = 0; di < static_cast<Index>(pp.dates.size()); ++di) {
            while (week_id(pp.dates[di]) != wids[w]) ++w;
            for (Index t = 0; t < nt; ++t) {
                const double px = pp.adj_close(di, t);
                if (!is_missing(px)) wprice(w, t) = px;
            }
        }
    }

    ReturnPanel rp;
    rp.tickers = pp.tickers;
    rp.index_col = pp.index_col;
    for (Index w = 0; w < nw; ++w) {
        rp.week_ends.push_back(pp.dates[last_date[w]]);
        rp.week_ids.push_back(wids[w]);
    }
    rp.r = Mat::Constant(nw, nt, kNaN);
    for (Index t = 0; t < nt; ++t) {
        Index prev = -1;  // most recent week with a price
        for (Index w = 0; w < nw; ++w) {
            const double px = wprice(w, t);
            if (is_missing(px)) continue;
            if (prev >= 0) {
                const bool adjacent = (w == prev + 1) && (wids[w] == wids[prev] + 1);
                if (adjacent || allow_gaps) {
                    rp.r(w, t) = 100.0 * (px - wprice(prev, t)) / wprice(prev, t);
                }
            }
            prev = w;
        }
    }
    return rp;
}

namespace {

struct PairFit {
    FitResult nw;
    FitResult ls;
    double psi = 0.0;  ///< window mean of the index return
};

PairFit fit_window(const Vec& stock, const Vec& index_ret, double clip_d, double clip_exp) {
    Dataset ds;
    ds.y = stock;
    ds.z = index_ret;
    const Design des = build_design(ds);
    PairFit out;
    out.psi = des.psi_hat[0];
    out.nw = fit_norm_weighted_full(des, ds.y, ClipPolicy::for_design(des, clip_d, clip_exp));
    out.ls = fit_least_squares_full(des, ds.y);
    return out;
}

double uncentered_alpha(const FitResult& fit, double psi) {
    return fit.beta[0] - fit.beta[1] * psi;
}

double uncentered_alpha_se(const FitResult& fit, double psi) {
    // delta method with the centering mean held fixed
    const double v = fit.cov(0, 0) - 2.0 * psi * fit.cov(0, 1) + psi * psi * fit.cov(1, 1);
    return std::sqrt(std::max(v, 0.0));
}

}  // namespace

RollingPanel roll_fit(const ReturnPanel& rp, Index window, double high, double low,
                      const RollOptions& opts) {
    if (window < 30) throw Error("roll_fit: window must be at least 30");
    const Index nw = rp.n_weeks();
    const Index nt = static_cast<Index>(rp.tickers.size());
    if (nw < window) throw Error("roll_fit: fewer weeks than the window");

    RollingPanel panel;
    panel.window = window;
    panel.high = high;
    panel.low = low;
    panel.crit = opts.crit > 0.0 ? opts.crit : normal_quantile(0.95);

    struct Slot {
        bool ok = false;
        RollingCell cell;
    };
    const Index n_ends = nw - window + 1;
    std::vector<Slot> slots(static_cast<std::size_t>(n_ends * nt));
    std::vector<char> skipped(static_cast<std::size_t>(n_ends * nt), 0);

    parallel_for(static_cast<std::size_t>(n_ends * nt), opts.threads, [&](std::size_t k) {
        const Index e = static_cast<Index>(k) / nt;
        const Index t = static_cast<Index>(k) % nt;
        const Index w_end = e + window - 1;
        if (t == rp.index_col) return;

        Vec stock(window), index_ret(window);
        for (Index i = 0; i < window; ++i) {
            const Index w = w_end - window + 1 + i;
            stock[i] = rp.r(w, t);
            index_ret[i] = rp.r(w, rp.index_col);
            if (is_missing(stock[i]) || is_missing(index_ret[i])) {
                skipped[k] = 1;
                return;
            }
        }
        try {
            const PairFit pf = fit_window(stock, index_ret, opts.clip_d, opts.clip_exponent);
            RollingCell c;
            c.week = w_end;
            c.ticker = t;
            c.beta_nw = pf.nw.beta[1];
            c.beta_ls = pf.ls.beta[1];
            c.se_nw = pf.nw.se[1];
            c.se_ls = pf.ls.se[1];
            c.alpha_nw = uncentered_alpha(pf.nw, pf.psi);
            c.alpha_ls = uncentered_alpha(pf.ls, pf.psi);
            c.se_alpha_nw = uncentered_alpha_se(pf.nw, pf.psi);
            c.se_alpha_ls = uncentered_alpha_se(pf.ls, pf.psi);
            c.t_high_nw = (c.beta_nw - high) / c.se_nw;
            c.t_high_ls = (c.beta_ls - high) / c.se_ls;
            c.t_low_nw = (c.beta_nw - low) / c.se_nw;
            c.t_low_ls = (c.beta_ls - low) / c.se_ls;
            slots[k].cell = c;
            slots[k].ok = true;
        } catch (const Error&) {
            skipped[k] = 1;
        }
    });

    std::set<Index> ends;
    for (std::size_t k = 0; k < slots.size(); ++k) {
        if (slots[k].ok) {
            panel.cells.push_back(slots[k].cell);
            ends.insert(slots[k].cell.week);
        }
        if (skipped[k]) ++panel.skipped;
    }
    panel.week_ends.assign(ends.begin(), ends.end());
    return panel;
}

std::map<std::string, std::vector<std::vector<Index>>> weekly_selections(
    const RollingPanel& rpanel) {
    std::map<Index, Index> end_pos;
    for (std::size_t i = 0; i < rpanel.week_ends.size(); ++i) {
        end_pos[rpanel.week_ends[i]] = static_cast<Index>(i);
    }
    std::map<std::string, std::vector<std::vector<Index>>> sel;
    for (const char* name : {"LowNW", "LowLS", "HighNW", "HighLS"}) {
        sel[name].resize(rpanel.week_ends.size());
    }
    const double z = rpanel.crit;
    for (const auto& c : rpanel.cells) {
        const Index e = end_pos.at(c.week);
        if (c.t_high_nw > z) sel["HighNW"][e].push_back(c.ticker);
        if (c.t_high_ls > z) sel["HighLS"][e].push_back(c.ticker);
        if (c.t_low_nw < -z) sel["LowNW"][e].push_back(c.ticker);
        if (c.t_low_ls < -z) sel["LowLS"][e].push_back(c.ticker);
    }
    return sel;
}

BacktestReport select_and_backtest(const RollingPanel& rpanel, const ReturnPanel& rp,
                                   const BacktestOptions& opts) {
    if (rpanel.week_ends.size() < 2) {
        throw Error("select_and_backtest: need at least 2 window ends");
    }
    const auto sel = weekly_selections(rpanel);

    // universe per window end = tickers actually fitted there
    std::map<Index, Index> universe;
    for (const auto& c : rpanel.cells) ++universe[c.week];

    BacktestReport report;
    report.crit = rpanel.crit;
    report.summary_estimator = opts.ls_summary ? "least_squares" : "norm_weighted";

    // formation weeks: window ends with a following week in the return panel
    std::vector<Index> form_ends;
    for (Index w : rpanel.week_ends) {
        if (w + 1 < rp.n_weeks()) form_ends.push_back(w);
    }
    if (form_ends.empty()) throw Error("select_and_backtest: no out-of-sample weeks");

    std::map<Index, Index> end_pos;
    for (std::size_t i = 0; i < rpanel.week_ends.size(); ++i) {
        end_pos[rpanel.week_ends[i]] = static_cast<Index>(i);
    }

    auto run_strategy = [&](const std::string& name) {
        StrategyStats st;
        st.name = name;
        Vec ret(static_cast<Index>(form_ends.size()));
        Vec index_ret(static_cast<Index>(form_ends.size()));
        double share_sum = 0.0;
        double dshare_sum = 0.0;
        Index dshare_terms = 0;
        const std::vector<Index>* prev_sel = nullptr;

        for (std::size_t i = 0; i < form_ends.size(); ++i) {
            const Index w = form_ends[i];
            index_ret[static_cast<Index>(i)] = rp.r(w + 1, rp.index_col);
            const std::vector<Index>* cur = nullptr;
            if (name == "Index") {
                ret[static_cast<Index>(i)] = rp.r(w + 1, rp.index_col);
            } else {
                cur = &sel.at(name)[end_pos.at(w)];
                double sum = 0.0;
                Index cnt = 0;
                for (Index t : *cur) {
                    const double v = rp.r(w + 1, t);
                    if (!is_missing(v)) {
                        sum += v;
                        ++cnt;
                    }
                }
                ret[static_cast<Index>(i)] = cnt > 0 ? sum / static_cast<double>(cnt) : 0.0;
                const double uni = static_cast<double>(universe.at(w));
                share_sum += static_cast<double>(cur->size()) / uni;
                if (prev_sel != nullptr) {
                    std::vector<Index> sym;
                    std::set_symmetric_difference(cur->begin(), cur->end(), prev_sel->begin(),
                                                  prev_sel->end(), std::back_inserter(sym));
                    dshare_sum += static_cast<double>(sym.size()) / uni;
                    ++dshare_terms;
                }
                prev_sel = cur;
            }
        }

        const Index m = ret.size();
        st.weeks = m;
        st.mean = ret.mean();
        st.sd = m > 1 ? std::sqrt((ret.array() - st.mean).square().sum() /
                                  static_cast<double>(m - 1))
                      : 0.0;
        st.sharpe = st.sd > 0.0 ? st.mean / st.sd : 0.0;
        st.share = name == "Index" ? 0.0 : share_sum / static_cast<double>(form_ends.size());
        st.delta_share =
            (name == "Index" || dshare_terms == 0) ? 0.0 : dshare_sum / dshare_terms;

        // portfolio alpha/beta against the index over the same weeks
        Dataset ds;
        ds.y = ret;
        ds.z = index_ret;
        try {
            const Design des = build_design(ds);
            FitResult fit;
            if (opts.ls_summary) {
                fit = fit_least_squares_full(des, ds.y);
            } else {
                fit = fit_norm_weighted_full(
                    des, ds.y, ClipPolicy::for_design(des, opts.clip_d, opts.clip_exponent));
            }
            st.beta = fit.beta[1];
            st.alpha = uncentered_alpha(fit, des.psi_hat[0]);
            st.alpha_se = uncentered_alpha_se(fit, des.psi_hat[0]);
        } catch (const Error&) {
            st.beta = std::numeric_limits<double>::quiet_NaN();
            st.alpha = std::numeric_limits<double>::quiet_NaN();
            st.alpha_se = std::numeric_limits<double>::quiet_NaN();
        }
        return st;
    };

    for (const char* name : {"Index", "LowNW", "LowLS", "HighNW", "HighLS"}) {
        report.strategies.push_back(run_strategy(name));
    }

    const RoughnessTable rt = roughness(rpanel);
    report.rough_beta_nw = rt.beta_nw;
    report.rough_beta_ls = rt.beta_ls;
    report.rough_se_nw = rt.se_nw;
    report.rough_se_ls = rt.se_ls;
    return report;
}

RoughnessTable roughness(const RollingPanel& rpanel) {
    std::map<Index, Index> end_pos;
    for (std::size_t i = 0; i < rpanel.week_ends.size(); ++i) {
        end_pos[rpanel.week_ends[i]] = static_cast<Index>(i);
    }
    // cells keyed by (ticker, end position) for step lookups
    std::map<std::pair<Index, Index>, const RollingCell*> by_key;
    for (const auto& c : rpanel.cells) {
        by_key[{c.ticker, end_pos.at(c.week)}] = &c;
    }
    double s_bnw = 0, s_bls = 0, s_snw = 0, s_sls = 0;
    Index steps = 0;
    for (const auto& [key, cell] : by_key) {
        const auto prev = by_key.find({key.first, key.second - 1});
        if (prev == by_key.end()) continue;
        const RollingCell& a = *prev->second;
        const RollingCell& b = *cell;
        const auto sq = [](double d) { return 100.0 * d * 100.0 * d; };
        s_bnw += sq(b.beta_nw - a.beta_nw);
        s_bls += sq(b.beta_ls - a.beta_ls);
        s_snw += sq(b.se_nw - a.se_nw);
        s_sls += sq(b.se_ls - a.se_ls);
        ++steps;
    }
    if (steps == 0) throw Error("roughness: need at least 2 consecutive window ends");
    RoughnessTable out;
    const double m = static_cast<double>(steps);
    out.beta_nw = std::sqrt(s_bnw / m);
    out.beta_ls = std::sqrt(s_bls / m);
    out.se_nw = std::sqrt(s_snw / m);
    out.se_ls = std::sqrt(s_sls / m);
    return out;
}

CrossSection cross_section_summary(const RollingPanel& rpanel, Index week) {
    std::vector<const RollingCell*> cells;
    for (const auto& c : rpanel.cells) {
        if (c.week == week) cells.push_back(&c);
    }
    if (cells.size() < 10) {
        throw Error("cross_section_summary: need at least 10 fitted tickers");
    }
    CrossSection cs;
    cs.week = week;
    cs.tickers = static_cast<Index>(cells.size());

    const auto add_row = [&](const std::string& name, auto getter) {
        std::vector<double> v;
        v.reserve(cells.size());
        for (const auto* c : cells) v.push_back(getter(*c));
        CrossSectionRow row;
        row.name = name;
        row.mean = 0.0;
        for (double x : v) row.mean += x;
        row.mean /= static_cast<double>(v.size());
        row.q10 = quantile_linear(v, 0.1);
        row.q50 = quantile_linear(v, 0.5);
        row.q90 = quantile_linear(v, 0.9);
        cs.rows.push_back(row);
    };
    add_row("beta_nw", [](const RollingCell& c) { return c.beta_nw; });
    add_row("beta_ls", [](const RollingCell& c) { return c.beta_ls; });
    add_row("se_beta_nw", [](const RollingCell& c) { return c.se_nw; });
    add_row("se_beta_ls", [](const RollingCell& c) { return c.se_ls; });
    add_row("alpha_nw", [](const RollingCell& c) { return c.alpha_nw; });
    add_row("alpha_ls", [](const RollingCell& c) { return c.alpha_ls; });
    add_row("se_alpha_nw", [](const RollingCell& c) { return c.se_alpha_nw; });
    add_row("se_alpha_ls", [](const RollingCell& c) { return c.se_alpha_ls; });

    const double z = rpanel.crit;
    for (const auto* c : cells) {
        const bool hn = c->t_high_nw > z;
        const bool hl = c->t_high_ls > z;
        const bool ln = c->t_low_nw < -z;
        const bool ll = c->t_low_ls < -z;
        cs.high_reject_nw += hn;
        cs.high_reject_ls += hl;
        cs.high_agree += hn && hl;
        cs.low_reject_nw += ln;
        cs.low_reject_ls += ll;
        cs.low_agree += ln && ll;
    }
    return cs;
}

}  // namespace nwreg::fin
