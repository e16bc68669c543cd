// nwreg: norm-weighted predictive regression toolkit
//
// Subcommands: fit, simulate, cvm, roll, backtest. Every run writes a
// manifest.json echoing the fully resolved configuration; --from-manifest
// replays it. Exit codes: 0 ok, 2 malformed input, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "nwreg/estimators.hpp"
#include "nwreg/finance.hpp"
#include "nwreg/quantile.hpp"
#include "nwreg/serialize.hpp"
#include "nwreg/sim.hpp"
#include "nwreg/stats.hpp"

namespace {

using nlohmann::json;
using namespace nwreg;

void ensure_out_dir(const std::string& out) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) throw Error("cannot create output directory '" + out + "'");
}

void write_manifest(const std::string& out, const std::string& command, const json& options) {
    json m;
    m["command"] = command;
    m["options"] = options;
    write_text_file(out + "/manifest.json", m.dump(2) + "\n");
}

// ---------------------------------------------------------------- fit ----

struct FitArgs {
    std::string input;
    std::string out = ".";
    double d = 10.0;
    double exponent = 0.2;
    double tau = -1.0;  // < 0 disables the quantile fit
    double bandwidth = 0.0;
    bool middle_matrix = false;
};

Dataset read_fit_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty input", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header;
    {
        std::istringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) header.push_back(f);
    }
    if (header.size() < 2 || header[0] != "y") {
        throw ParseError("expected header starting with 'y' and at least one predictor", 1);
    }
    const std::size_t ncol = header.size();
    std::vector<double> ys;
    std::vector<double> zs;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string f;
        std::vector<double> row;
        while (std::getline(ss, f, ',')) {
            try {
                std::size_t pos = 0;
                row.push_back(std::stod(f, &pos));
                if (pos != f.size()) throw std::invalid_argument(f);
            } catch (const std::exception&) {
                throw ParseError("bad number '" + f + "'", lineno);
            }
        }
        if (row.size() != ncol) throw ParseError("wrong field count", lineno);
        ys.push_back(row[0]);
        for (std::size_t c = 1; c < ncol; ++c) zs.push_back(row[c]);
    }
    if (ys.empty()) throw ParseError("no data rows", lineno);

    Dataset ds;
    const Index n = static_cast<Index>(ys.size());
    const Index p = static_cast<Index>(ncol - 1);
    ds.y = Eigen::Map<Vec>(ys.data(), n);
    ds.z.resize(n, p);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < p; ++i) ds.z(j, i) = zs[static_cast<std::size_t>(j * p + i)];
    }
    return ds;
}

json fit_args_json(const FitArgs& a) {
    json o;
    o["input"] = a.input;
    o["out"] = a.out;
    o["d"] = fmt17(a.d);  // string so inf round-trips
    o["exponent"] = a.exponent;
    o["tau"] = a.tau;
    o["bandwidth"] = a.bandwidth;
    o["middle-matrix"] = a.middle_matrix;
    return o;
}

int run_fit(const FitArgs& a) {
    ensure_out_dir(a.out);
    const Dataset ds = read_fit_csv(a.input);
    const Design des = build_design(ds);
    const ClipPolicy clip = ClipPolicy::for_design(des, a.d, a.exponent);

    json out;
    out["norm_weighted"] = fit_to_json(fit_norm_weighted_full(des, ds.y, clip));
    out["least_squares"] = fit_to_json(fit_least_squares_full(des, ds.y));
    if (a.tau > 0.0) {
        if (a.tau >= 1.0) throw Error("--tau must lie in (0,1)");
        out["quantile"] =
            quantile_fit_to_json(fit_quantile_full(des, ds.y, a.tau, a.bandwidth, a.middle_matrix));
    }
    write_text_file(a.out + "/fit.json", out.dump(2) + "\n");
    write_manifest(a.out, "fit", fit_args_json(a));
    std::cout << "wrote " << a.out << "/fit.json\n";
    return 0;
}

// ----------------------------------------------------------- simulate ----

struct SimArgs {
    Index n = 100;
    double nu = 2.4;
    double sigma_x = 3.24;
    double psi = 0.21;
    double beta0 = 0.0;
    double beta1 = 1.0;
    double sigma = 2.0;
    std::string scale_mode = "variance";
    Index reps = 50000;
    bool full_scale = false;
    std::uint64_t seed = 0;
    double d = 10.0;
    double exponent = 0.2;
    unsigned threads = 0;
    Index qq_grid = 200;
    std::string out = ".";
};

sim::SimConfig to_config(const SimArgs& a) {
    sim::SimConfig cfg;
    cfg.n = a.n;
    cfg.nu = a.nu;
    cfg.sigma_x = a.sigma_x;
    cfg.psi = a.psi;
    cfg.beta0 = a.beta0;
    cfg.beta1 = a.beta1;
    cfg.sigma = a.sigma;
    if (a.scale_mode == "variance") {
        cfg.scale_mode = sim::ScaleMode::VarianceScaled;
    } else if (a.scale_mode == "absmean") {
        cfg.scale_mode = sim::ScaleMode::AbsMeanScaled;
    } else {
        throw ParseError("--scale-mode must be 'variance' or 'absmean'");
    }
    cfg.reps = a.full_scale ? 500000 : a.reps;
    cfg.seed = a.seed;
    return cfg;
}

json sim_args_json(const SimArgs& a) {
    json o;
    o["n"] = a.n;
    o["nu"] = a.nu;
    o["sigma-x"] = a.sigma_x;
    o["psi"] = a.psi;
    o["beta0"] = a.beta0;
    o["beta1"] = a.beta1;
    o["sigma"] = a.sigma;
    o["scale-mode"] = a.scale_mode;
    o["reps"] = a.reps;
    o["full-scale"] = a.full_scale;
    o["seed"] = a.seed;
    o["d"] = fmt17(a.d);  // string so inf round-trips
    o["exponent"] = a.exponent;
    o["threads"] = a.threads;
    o["qq-grid"] = a.qq_grid;
    o["out"] = a.out;
    return o;
}

int run_simulate(const SimArgs& a) {
    ensure_out_dir(a.out);
    const sim::SimConfig cfg = to_config(a);
    sim::RunOptions opts;
    opts.clip_d = a.d;
    opts.clip_exponent = a.exponent;
    opts.threads = a.threads;
    const sim::SimSummary summary = sim::run_replications(cfg, opts);

    write_pivots_csv(a.out + "/pivots.csv", summary);
    const Index grid = std::min<Index>(a.qq_grid, static_cast<Index>(summary.t_nw.size()));
    write_qq_csv(a.out + "/qq.csv", sim::qq_export(summary.t_nw, grid),
                 sim::qq_export(summary.t_ls, grid));

    json s;
    s["cvm_nw"] = summary.cvm_nw;
    s["cvm_ls"] = summary.cvm_ls;
    s["skipped"] = summary.skipped;
    const char* size_names[3] = {"0.10", "0.05", "0.01"};
    for (int k = 0; k < 3; ++k) {
        s["reject_nw"][size_names[k]] = summary.reject_nw[static_cast<std::size_t>(k)];
        s["reject_ls"][size_names[k]] = summary.reject_ls[static_cast<std::size_t>(k)];
    }
    s["replications"] = static_cast<Index>(summary.t_nw.size());
    write_text_file(a.out + "/sim_summary.json", s.dump(2) + "\n");
    write_manifest(a.out, "simulate", sim_args_json(a));
    std::cout << "cvm_nw=" << summary.cvm_nw << " cvm_ls=" << summary.cvm_ls << " skipped="
              << summary.skipped << "\n";
    return 0;
}

// ---------------------------------------------------------------- cvm ----

struct CvmArgs {
    std::vector<double> nu{2.4, 4.4, 8.0};
    std::vector<Index> n{100, 250};
    std::vector<double> sigma{2.0};
    Index reps = 50000;
    bool full_scale = false;
    Index null_trials = 10000;
    std::uint64_t seed = 0;
    double d = 10.0;
    double exponent = 0.2;
    unsigned threads = 0;
    std::string out = ".";
};

json cvm_args_json(const CvmArgs& a) {
    json o;
    o["nu"] = a.nu;
    o["n"] = a.n;
    o["sigma"] = a.sigma;
    o["reps"] = a.reps;
    o["full-scale"] = a.full_scale;
    o["null-trials"] = a.null_trials;
    o["seed"] = a.seed;
    o["d"] = fmt17(a.d);  // string so inf round-trips
    o["exponent"] = a.exponent;
    o["threads"] = a.threads;
    o["out"] = a.out;
    return o;
}

int run_cvm(const CvmArgs& a) {
    ensure_out_dir(a.out);
    const Index reps = a.full_scale ? 500000 : a.reps;
    const auto null_q = sim::cvm_null_quantiles(reps, a.null_trials, {0.5, 0.95, 0.99},
                                                a.seed ^ 0xC3A5C85C97CB3127ULL, a.threads);
    std::vector<CvmGridRow> rows;
    for (double sg : a.sigma) {
        for (double nu : a.nu) {
            for (Index n : a.n) {
                sim::SimConfig cfg;
                cfg.n = n;
                cfg.nu = nu;
                cfg.sigma = sg;
                cfg.reps = reps;
                cfg.seed = a.seed;
                sim::RunOptions opts;
                opts.clip_d = a.d;
                opts.clip_exponent = a.exponent;
                opts.threads = a.threads;
                const sim::SimSummary s = sim::run_replications(cfg, opts);
                CvmGridRow row;
                row.nu = nu;
                row.n = n;
                row.sigma = sg;
                row.cvm_nw = s.cvm_nw;
                row.cvm_ls = s.cvm_ls;
                row.q50 = null_q[0];
                row.q95 = null_q[1];
                row.q99 = null_q[2];
                rows.push_back(row);
                std::cout << "nu=" << nu << " n=" << n << " sigma=" << sg
                          << " cvm_nw=" << s.cvm_nw << " cvm_ls=" << s.cvm_ls << "\n";
            }
        }
    }
    write_cvm_grid_csv(a.out + "/cvm_grid.csv", rows);
    write_manifest(a.out, "cvm", cvm_args_json(a));
    return 0;
}

// --------------------------------------------------------- roll/backtest ----

struct RollArgs {
    std::string input;
    std::string index_ticker = "SPY";
    Index window = 100;
    double high = 1.4;
    double low = 0.8;
    double crit = 0.0;  // 0 = exact one-sided 5% quantile
    bool allow_gaps = false;
    bool ls_summary = false;
    double d = 10.0;
    double exponent = 0.2;
    unsigned threads = 0;
    std::string out = ".";
};

json roll_args_json(const RollArgs& a) {
    json o;
    o["input"] = a.input;
    o["index"] = a.index_ticker;
    o["window"] = a.window;
    o["high"] = a.high;
    o["low"] = a.low;
    o["crit"] = a.crit;
    o["allow-gaps"] = a.allow_gaps;
    o["ls-summary"] = a.ls_summary;
    o["d"] = fmt17(a.d);  // string so inf round-trips
    o["exponent"] = a.exponent;
    o["threads"] = a.threads;
    o["out"] = a.out;
    return o;
}

int run_roll(const RollArgs& a, bool with_backtest) {
    ensure_out_dir(a.out);
    const fin::PricePanel pp = fin::ingest_prices_file(a.input, a.index_ticker);
    const fin::ReturnPanel rp = fin::weekly_returns(pp, a.allow_gaps);
    fin::RollOptions opts;
    opts.crit = a.crit;
    opts.clip_d = a.d;
    opts.clip_exponent = a.exponent;
    opts.threads = a.threads;
    const fin::RollingPanel panel = fin::roll_fit(rp, a.window, a.high, a.low, opts);
    write_rolling_csv(a.out + "/rolling.csv", panel, rp);

    if (with_backtest) {
        fin::BacktestOptions bopts;
        bopts.ls_summary = a.ls_summary;
        bopts.clip_d = a.d;
        bopts.clip_exponent = a.exponent;
        const fin::BacktestReport report = fin::select_and_backtest(panel, rp, bopts);
        write_text_file(a.out + "/backtest.json", backtest_report_json(report));
        if (!panel.week_ends.empty()) {
            try {
                const fin::CrossSection cs =
                    fin::cross_section_summary(panel, panel.week_ends.back());
                write_summary_csv(a.out + "/summary.csv", cs);
            } catch (const Error& e) {
                std::cerr << "summary.csv skipped: " << e.what() << "\n";
            }
        }
    }
    write_manifest(a.out, with_backtest ? "backtest" : "roll", roll_args_json(a));
    std::cout << "fitted " << panel.cells.size() << " window/ticker pairs, skipped "
              << panel.skipped << "\n";
    return 0;
}

// ----------------------------------------------------------- dispatch ----

std::vector<std::string> manifest_to_args(const json& m) {
    std::vector<std::string> args;
    args.push_back(m.at("command").get<std::string>());
    // single --key=value tokens so negative numbers survive reparsing
    for (const auto& [key, value] : m.at("options").items()) {
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back("--" + key);
        } else if (value.is_array()) {
            for (const auto& v : value) {
                args.push_back("--" + key + "=" +
                               (v.is_string() ? v.get<std::string>() : v.dump()));
            }
        } else if (value.is_string()) {
            args.push_back("--" + key + "=" + value.get<std::string>());
        } else {
            args.push_back("--" + key + "=" + value.dump());
        }
    }
    return args;
}

int dispatch(std::vector<std::string> args);

int run_from_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open manifest '" + path + "'");
    json m;
    try {
        in >> m;
    } catch (const std::exception& e) {
        throw ParseError(std::string("bad manifest: ") + e.what());
    }
    return dispatch(manifest_to_args(m));
}

int dispatch(std::vector<std::string> args) {
    CLI::App app{"norm-weighted predictive regression toolkit"};
    app.require_subcommand(0, 1);

    std::string manifest_path;
    app.add_option("--from-manifest", manifest_path,
                   "replay a run from a previously written manifest.json");

    FitArgs fa;
    auto* fit = app.add_subcommand("fit", "fit both estimators to a y,z... CSV");
    fit->add_option("--input", fa.input, "CSV with header y,z1,...")->required();
    fit->add_option("--out", fa.out, "output directory");
    fit->add_option("--d", fa.d, "clipping constant (default 10; inf disables)");
    fit->add_option("--exponent", fa.exponent, "clipping rate exponent (default 1/5)");
    fit->add_option("--tau", fa.tau, "also fit the tau-quantile regression");
    fit->add_option("--bandwidth", fa.bandwidth, "quantile covariance bandwidth (0 = auto)");
    fit->add_flag("--middle-matrix", fa.middle_matrix,
                  "use the alternative printed quantile sandwich (kernel on the "
                  "instrument outer product, S_GX in the middle)");

    SimArgs sa;
    auto* sim_cmd = app.add_subcommand("simulate", "pivot Monte Carlo for one design");
    sim_cmd->add_option("--n", sa.n, "sample size per replication");
    sim_cmd->add_option("--nu", sa.nu, "predictor t degrees of freedom");
    sim_cmd->add_option("--sigma-x", sa.sigma_x, "predictor scale");
    sim_cmd->add_option("--psi", sa.psi, "predictor mean");
    sim_cmd->add_option("--beta0", sa.beta0, "true intercept");
    sim_cmd->add_option("--beta1", sa.beta1, "true slope");
    sim_cmd->add_option("--sigma", sa.sigma, "outcome noise sd");
    sim_cmd->add_option("--scale-mode", sa.scale_mode, "variance | absmean");
    sim_cmd->add_option("--reps", sa.reps, "replications (default 50000)");
    sim_cmd->add_flag("--full-scale", sa.full_scale, "run the full 500000 replications");
    sim_cmd->add_option("--seed", sa.seed, "master seed; all randomness derives from it");
    sim_cmd->add_option("--d", sa.d, "clipping constant");
    sim_cmd->add_option("--exponent", sa.exponent, "clipping rate exponent");
    sim_cmd->add_option("--threads", sa.threads, "worker threads (0 = all cores)");
    sim_cmd->add_option("--qq-grid", sa.qq_grid, "QQ export grid size");
    sim_cmd->add_option("--out", sa.out, "output directory");

    CvmArgs ca;
    auto* cvm_cmd = app.add_subcommand("cvm", "Cramer-von Mises grid over (nu, n, sigma)");
    cvm_cmd->add_option("--nu", ca.nu, "nu grid");
    cvm_cmd->add_option("--n", ca.n, "n grid");
    cvm_cmd->add_option("--sigma", ca.sigma, "sigma grid");
    cvm_cmd->add_option("--reps", ca.reps, "replications per cell");
    cvm_cmd->add_flag("--full-scale", ca.full_scale, "run the full 500000 replications");
    cvm_cmd->add_option("--null-trials", ca.null_trials, "trials for the null quantiles");
    cvm_cmd->add_option("--seed", ca.seed, "master seed");
    cvm_cmd->add_option("--d", ca.d, "clipping constant");
    cvm_cmd->add_option("--exponent", ca.exponent, "clipping rate exponent");
    cvm_cmd->add_option("--threads", ca.threads, "worker threads");
    cvm_cmd->add_option("--out", ca.out, "output directory");

    RollArgs ra;
    auto* roll_cmd = app.add_subcommand("roll", "rolling dual-estimator betas");
    RollArgs ba;
    auto* bt_cmd = app.add_subcommand("backtest", "rolling betas plus portfolio backtest");
    for (auto [cmd, arg] : {std::pair{roll_cmd, &ra}, std::pair{bt_cmd, &ba}}) {
        cmd->add_option("--input", arg->input, "date,ticker,adj_close CSV")->required();
        cmd->add_option("--index", arg->index_ticker, "market index ticker (default SPY)");
        cmd->add_option("--window", arg->window, "rolling window in weeks (default 100)");
        cmd->add_option("--high", arg->high, "high-beta null (default 1.4)");
        cmd->add_option("--low", arg->low, "low-beta null (default 0.8)");
        cmd->add_option("--crit", arg->crit,
                        "one-sided critical value; 0 = exact 5% normal quantile, "
                        "1.64 reproduces the rounded figure convention");
        cmd->add_flag("--allow-gaps", arg->allow_gaps,
                      "let weekly returns span missing weeks instead of marking them missing");
        cmd->add_flag("--ls-summary", arg->ls_summary,
                      "summarize portfolio alpha/beta with the least-squares estimator");
        cmd->add_option("--d", arg->d, "clipping constant");
        cmd->add_option("--exponent", arg->exponent, "clipping rate exponent");
        cmd->add_option("--threads", arg->threads, "worker threads");
        cmd->add_option("--out", arg->out, "output directory");
    }

    std::vector<const char*> argv;
    argv.push_back("nwreg");
    for (const auto& s : args) argv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (!manifest_path.empty()) return run_from_manifest(manifest_path);
    if (fit->parsed()) return run_fit(fa);
    if (sim_cmd->parsed()) return run_simulate(sa);
    if (cvm_cmd->parsed()) return run_cvm(ca);
    if (roll_cmd->parsed()) return run_roll(ra, false);
    if (bt_cmd->parsed()) return run_roll(ba, true);
    std::cerr << app.help();
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return dispatch(std::move(args));
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const DuplicateRowError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const MissingIndexError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
