// Batch experiment harness over the derf library: analytic variance
// comparisons across feature mechanisms, Nadaraya-Watson kernel
// classification, attention benchmarking and parameter dumps. Every command
// is deterministic given --seed and emits one JSON result object.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "derf/experiments.hpp"

namespace {

using derf::json;

struct GridFlag {
    double lo = 0.0, hi = 0.0;
    int n = 0;
    bool set = false;
};

std::vector<double> parse_log_grid(const std::string& s) {
    double lo, hi;
    int n;
    char c1, c2;
    std::istringstream in(s);
    if (!(in >> lo >> c1 >> hi >> c2 >> n) || c1 != ':' || c2 != ':' || !(in >> std::ws).eof())
        throw derf::ConfigError("expected lo:hi:n, got '" + s + "'");
    return derf::log_grid(lo, hi, n);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

template <typename T>
std::vector<T> parse_int_list(const std::string& s) {
    std::vector<T> out;
    for (const auto& item : split_list(s)) out.push_back(static_cast<T>(std::stol(item)));
    return out;
}

int emit(const json& result, const std::string& out_path) {
    const std::string text = result.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(out_path, std::ios::binary);
        if (!f) {
            std::cerr << "error: cannot write '" << out_path << "'\n";
            return 2;
        }
        f << text;
    }
    return 0;
}

int emit_numeric_error(const std::string& command, const derf::NumericError& e,
                       const std::string& out_path) {
    json err{{"schema_version", 1},
             {"command", command},
             {"error", json{{"type", "numeric"}, {"what", e.what()}}}};
    emit(err, out_path);
    return 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variance-optimal positive random features for the scaled softmax kernel"};
    app.require_subcommand(1);
    app.fallthrough(); // --out/--seed/--threads may follow the subcommand

    std::string out_path;
    std::uint64_t seed = 0;
    int threads = 1;
    app.add_option("--out", out_path, "Write the JSON result here (default: stdout)");
    app.add_option("--seed", seed, "Master seed; all randomness derives from it");
    app.add_option("--threads", threads, "Worker threads (never changes emitted numbers)");

    // variance-compare ------------------------------------------------------
    derf::VarianceCompareOpts vc;
    std::string vc_sigma_grid;
    double vc_sigma = 0.0;
    std::string vc_mechs = "pos,gerf,saderf,aderf,sderf";
    auto* cmd_vc = app.add_subcommand(
        "variance-compare", "Mean log relative analytic variance per (mechanism, sigma)");
    cmd_vc->add_option("--regime", vc.regime, "normal | sphere | heterogen");
    cmd_vc->add_option("--csv", vc.csv_x, "CSV source for the x set (overrides --regime)");
    cmd_vc->add_option("--csv-y", vc.csv_y, "CSV source for the y set (default: --csv)");
    cmd_vc->add_option("--L", vc.l, "Points per set");
    cmd_vc->add_option("--d", vc.d, "Dimension (regimes only)");
    cmd_vc->add_option("--sigma", vc_sigma, "Single scale value");
    cmd_vc->add_option("--sigma-grid", vc_sigma_grid, "lo:hi:n log-spaced scales");
    cmd_vc->add_option("--mechs", vc_mechs, "Comma list from {pos,gerf,saderf,aderf,sderf}");
    cmd_vc->add_option("--set-pairs", vc.set_pairs, "Independent set pairs per sigma");
    cmd_vc->add_flag("--ridge", vc.ridge, "Ridge-regularize singular moments for aderf");

    // kernel-classify -------------------------------------------------------
    derf::KernelClassifyOpts kc;
    std::string kc_sigma_grid, kc_m_grid, kc_m;
    std::string kc_mechs = "trig,pos,gerf,saderf,aderf,sderf";
    std::string kc_qmc_psi;
    auto* cmd_kc = app.add_subcommand("kernel-classify",
                                      "Nadaraya-Watson classification, exact vs feature maps");
    cmd_kc->add_option("--csv", kc.csv, "Labeled CSV dataset")->required();
    cmd_kc->add_option("--label-col", kc.label_col, "Name of the label column")->required();
    cmd_kc->add_option("--sigma-grid", kc_sigma_grid, "lo:hi:n log-spaced scales");
    cmd_kc->add_option("--M", kc_m, "Single feature count");
    cmd_kc->add_option("--M-grid", kc_m_grid, "Comma list of feature counts");
    cmd_kc->add_option("--mechs", kc_mechs, "Comma list of mechanisms");
    cmd_kc->add_option("--scheme", kc.scheme, "iid | orthogonal | qmc");
    cmd_kc->add_option("--qmc-psi", kc_qmc_psi,
                       "Correlation for qmc draws: a number or 'antithetic' (-1/(M-1), heuristic)");
    cmd_kc->add_option("--seeds", kc.seeds, "Feature-draw seeds per cell");
    cmd_kc->add_flag("--ridge", kc.ridge, "Ridge-regularize singular moments for aderf");

    // attention-bench -------------------------------------------------------
    derf::AttentionBenchOpts ab;
    std::string ab_ls, ab_m_grid, ab_m;
    std::string ab_qmc_psi;
    auto* cmd_ab = app.add_subcommand("attention-bench",
                                      "Exact vs low-rank attention: error and scaling");
    cmd_ab->add_option("--Ls", ab_ls, "Comma list of sequence lengths");
    cmd_ab->add_option("--d", ab.d, "Head dimension");
    cmd_ab->add_option("--M", ab_m, "Single feature count");
    cmd_ab->add_option("--M-grid", ab_m_grid, "Comma list of feature counts");
    cmd_ab->add_option("--mech", ab.mech, "Feature mechanism (positive families only)");
    cmd_ab->add_option("--scheme", ab.scheme, "iid | orthogonal | qmc");
    cmd_ab->add_option("--qmc-psi", ab_qmc_psi,
                       "Correlation for qmc draws: a number or 'antithetic' (-1/(M-1), heuristic)");
    cmd_ab->add_option("--seeds", ab.seeds, "Batches per length");
    cmd_ab->add_flag("--time", ab.emit_times,
                     "Also emit wall times and log-log slopes (not reproducible byte-for-byte)");
    cmd_ab->add_flag("--ridge", ab.ridge, "Ridge-regularize singular moments for aderf");

    // fit-dump --------------------------------------------------------------
    derf::FitDumpOpts fd;
    auto* cmd_fd = app.add_subcommand("fit-dump", "Fit one mechanism and dump its parameters");
    cmd_fd->add_option("--regime", fd.regime, "normal | sphere | heterogen");
    cmd_fd->add_option("--csv", fd.csv_x, "CSV source for the x set (overrides --regime)");
    cmd_fd->add_option("--csv-y", fd.csv_y, "CSV source for the y set (default: --csv)");
    cmd_fd->add_option("--sigma", fd.sigma, "Scale");
    cmd_fd->add_option("--L", fd.l, "Points per set");
    cmd_fd->add_option("--d", fd.d, "Dimension (regimes only)");
    cmd_fd->add_option("--mech", fd.mech, "Mechanism to fit");
    cmd_fd->add_flag("--ridge", fd.ridge, "Ridge-regularize singular moments for aderf");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    std::string command;
    try {
        json result;
        if (cmd_vc->parsed()) {
            command = "variance-compare";
            vc.seed = seed;
            vc.threads = threads;
            vc.mechs = split_list(vc_mechs);
            if (!vc_sigma_grid.empty())
                vc.sigma_grid = parse_log_grid(vc_sigma_grid);
            else if (vc_sigma > 0.0)
                vc.sigma_grid = {vc_sigma};
            result = derf::run_variance_compare(vc);
        } else if (cmd_kc->parsed()) {
            command = "kernel-classify";
            kc.seed = seed;
            kc.threads = threads;
            kc.mechs = split_list(kc_mechs);
            if (!kc_sigma_grid.empty()) kc.sigma_grid = parse_log_grid(kc_sigma_grid);
            if (!kc_m_grid.empty())
                kc.m_grid = parse_int_list<long>(kc_m_grid);
            else if (!kc_m.empty())
                kc.m_grid = {std::stol(kc_m)};
            if (!kc_qmc_psi.empty()) kc.qmc_psi = derf::QmcPsiFlag::parse(kc_qmc_psi);
            result = derf::run_kernel_classify(kc);
        } else if (cmd_ab->parsed()) {
            command = "attention-bench";
            ab.seed = seed;
            ab.threads = threads;
            if (!ab_ls.empty()) ab.ls = parse_int_list<derf::Index>(ab_ls);
            if (!ab_m_grid.empty())
                ab.m_grid = parse_int_list<long>(ab_m_grid);
            else if (!ab_m.empty())
                ab.m_grid = {std::stol(ab_m)};
            if (!ab_qmc_psi.empty()) ab.qmc_psi = derf::QmcPsiFlag::parse(ab_qmc_psi);
            result = derf::run_attention_bench(ab);
        } else if (cmd_fd->parsed()) {
            command = "fit-dump";
            fd.seed = seed;
            result = derf::run_fit_dump(fd);
        }
        return emit(result, out_path);
    } catch (const derf::NumericError& e) {
        return emit_numeric_error(command, e, out_path);
    } catch (const derf::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
