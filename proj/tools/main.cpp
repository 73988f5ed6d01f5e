#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "robustreg/adaptive.hpp"
#include "robustreg/datagen.hpp"
#include "robustreg/io.hpp"
#include "robustreg/verify.hpp"

namespace rr = robustreg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string strip_ext(const std::string& path) {
    auto slash = path.find_last_of('/');
    auto dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path;
    return path.substr(0, dot);
}

void write_manifest(const std::string& path, const rr::ExperimentConfig& cf, const std::string& kind) {
    std::ofstream out(path);
    if (!out) throw rr::ConfigError("cannot open for writing: " + path);
    out << "kind = " << kind << "\n";
    out << "seed = " << cf.seed << "\n";
    out << "config_hash = " << cf.config_hash << "\n";
    out << "n = " << cf.dims.n << "\np = " << cf.dims.p << "\nK = " << cf.dims.K << "\n";
    out << "eta = " << cf.dims.eta << "\neps = " << cf.dims.eps << "\no = " << cf.dims.o << "\n";
    out << "profile = " << cf.consts.name << "\n";
    out << "attack = " << cf.attack.name() << "\n";
    out << "b_star =";
    for (Eigen::Index j = 0; j < cf.b_star.size(); ++j) out << ' ' << cf.b_star(j);
    out << "\n";
}

rr::LabeledDataset load_dataset(const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".bin") return rr::read_dataset_binary(path);
    return rr::read_dataset_csv(path);
}

double resolved_L(const rr::ExperimentConfig& cf) {
    return cf.L > 0.0 ? cf.L : rr::feature_hypercontractivity(cf.dist);
}

void apply_overrides(rr::ExperimentConfig& cf, std::optional<std::uint64_t> seed_override,
                     const std::string& profile) {
    if (seed_override) cf.seed = *seed_override;
    if (!profile.empty()) cf.consts = rr::ConstantsProfile::by_name(profile);
}

int cmd_generate(const std::string& config_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed_override, const std::string& profile) {
    rr::ExperimentConfig cf = rr::ExperimentConfig::from_file(config_path);
    apply_overrides(cf, seed_override, profile);

    rr::LabeledDataset clean = rr::generate_clean(cf.dims, cf.dist, cf.b_star, cf.seed);
    rr::LabeledDataset data = rr::contaminate(clean, cf.attack, cf.dims.o, cf.seed);

    std::string stem = strip_ext(out_path);
    rr::write_dataset_csv(stem + ".csv", data);
    rr::write_dataset_binary(stem + ".bin", data);
    write_manifest(stem + ".manifest.txt", cf, "generate");
    std::cout << "wrote " << stem << ".csv, " << stem << ".bin (" << data.rows() << " rows, o=" << cf.dims.o
              << ")\n";
    return kExitOk;
}

int cmd_fit(const std::string& data_path, const std::string& config_path, const std::string& out_path,
            const std::string& mode, std::optional<std::uint64_t> seed_override,
            const std::string& profile) {
    rr::ExperimentConfig cf = rr::ExperimentConfig::from_file(config_path);
    apply_overrides(cf, seed_override, profile);
    rr::LabeledDataset data = load_dataset(data_path);
    if (data.rows() != 2 * cf.dims.n || data.dim() != cf.dims.p)
        throw rr::ConfigError("fit: dataset shape disagrees with dims.*");

    double L = resolved_L(cf);
    rr::ValidationReport vr = rr::validate_config(cf.dims, cf.consts, cf.spectral, L, cf.zeta, cf.fit.T2);
    for (const auto& w : vr.warnings) std::cerr << "warning: " << w << "\n";

    std::string stem = strip_ext(out_path);
    if (mode == "adaptive") {
        rr::LepskiGrid grid = rr::LepskiGrid::create(cf.lepski_zeta0, cf.lepski_gamma);
        rr::AdaptiveResult res = rr::adaptive_fit(data, cf.dims, cf.consts, cf.spectral, grid, L, cf.fit,
                                                  cf.seed);
        rr::write_lepski_report(stem + "_lepski.csv", res, cf.seed, cf.config_hash);
        const rr::FitResult& chosen = res.levels[static_cast<std::size_t>(res.chosen_level - 1)].fit;
        rr::write_fit_report(out_path, chosen, cf.seed, cf.config_hash);
        rr::write_bhat_csv(stem + "_bhat.csv", res.b_hat);
        for (const auto& f : res.flags) std::cerr << "flag: " << f << "\n";
        std::cout << "adaptive fit: chose level " << res.chosen_level << " of " << grid.M << "\n";
    } else if (mode == "fixed-r1") {
        rr::RateBundle rates = rr::compute_rates(cf.dims, cf.consts, cf.spectral, cf.zeta, L);
        rr::FitParams fp = cf.fit;
        fp.r1 = rates.r1;
        rr::FitResult res = rr::robust_regression(data, cf.dims, cf.consts, cf.spectral, rates, fp, cf.seed);
        rr::write_fit_report(out_path, res, cf.seed, cf.config_hash);
        rr::write_bhat_csv(stem + "_bhat.csv", res.b_hat);
        for (const auto& f : res.flags) std::cerr << "flag: " << f << "\n";
        std::cout << "fit: " << res.accepted_steps << "/" << fp.T1 << " steps accepted\n";
    } else {
        throw rr::ConfigError("fit: mode must be fixed-r1 or adaptive");
    }
    write_manifest(stem + "_manifest.txt", cf, "fit (" + mode + ")");
    return kExitOk;
}

struct SweepCell {
    int n = 0;
    double eps = 0;
    std::string strategy;
    int seed_index = 0;
};

struct SweepRow {
    SweepCell cell;
    int p = 0;
    std::uint64_t seed = 0;
    double err_robust = 0, err_ols = 0, err_oracle_ols = 0;
};

SweepRow run_cell(const rr::ExperimentConfig& base, const SweepCell& cell, std::uint64_t root_seed) {
    rr::ExperimentConfig cf = base;
    cf.dims = rr::ProblemDims::create(cell.n, base.dims.p, base.dims.K, base.dims.eta, cell.eps);
    cf.attack = rr::ContaminationStrategy::parse(cell.strategy, base.attack.magnitude, base.attack.target);

    rr::Rng cell_rng = rr::Rng(root_seed)
                           .split("sweep-cell", static_cast<std::uint64_t>(cell.n))
                           .split(cell.strategy, static_cast<std::uint64_t>(cell.seed_index))
                           .split("eps", static_cast<std::uint64_t>(std::llround(cell.eps * 1e6)));
    std::uint64_t seed = cell_rng.key();

    rr::LabeledDataset clean = rr::generate_clean(cf.dims, cf.dist, cf.b_star, seed);
    rr::LabeledDataset data = rr::contaminate(clean, cf.attack, cf.dims.o, seed);

    double L = resolved_L(cf);
    rr::RateBundle rates = rr::compute_rates(cf.dims, cf.consts, cf.spectral, cf.zeta, L);
    rr::FitParams fp = cf.fit;
    fp.r1 = rates.r1;
    rr::FitResult fit = rr::robust_regression(data, cf.dims, cf.consts, cf.spectral, rates, fp, seed);

    SweepRow row;
    row.cell = cell;
    row.p = cf.dims.p;
    row.seed = seed;
    row.err_robust = (fit.b_hat - cf.b_star).norm();
    row.err_ols = (rr::ols_fit(data.X, data.y) - cf.b_star).norm();

    std::vector<int> clean_rows;
    for (int r = 0; r < static_cast<int>(data.rows()); ++r)
        if (!(*data.corrupted)[static_cast<std::size_t>(r)]) clean_rows.push_back(r);
    rr::LabeledDataset oracle = data.subset(clean_rows);
    row.err_oracle_ols = (rr::ols_fit(oracle.X, oracle.y) - cf.b_star).norm();
    return row;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir, int jobs,
              std::optional<std::uint64_t> seed_override, const std::string& profile) {
    rr::KeyValueConfig kv = rr::KeyValueConfig::parse_file(config_path);
    rr::ExperimentConfig base = rr::ExperimentConfig::from_kv(kv);
    apply_overrides(base, seed_override, profile);

    std::vector<double> n_list = kv.get_list_or("sweep.n", {static_cast<double>(base.dims.n)});
    std::vector<double> eps_list = kv.get_list_or("sweep.eps", {base.dims.eps});
    int seeds = kv.get_int_or("sweep.seeds", 10);
    std::string strategies_raw = kv.get_or("sweep.strategies", base.attack.name());

    std::vector<std::string> strategies;
    {
        std::stringstream ss(strategies_raw);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            auto a = cell.find_first_not_of(" \t");
            auto b = cell.find_last_not_of(" \t");
            if (a != std::string::npos) strategies.push_back(cell.substr(a, b - a + 1));
        }
    }

    std::vector<SweepCell> cells;
    for (double n : n_list)
        for (double eps : eps_list)
            for (const auto& strat : strategies)
                for (int s = 0; s < seeds; ++s)
                    cells.push_back({static_cast<int>(n), eps, strat, s});

    std::vector<SweepRow> rows(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) break;
            rows[i] = run_cell(base, cells[i], base.seed);
        }
    };
    jobs = std::max(1, jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::string path = out_dir + "/summary.csv";
    std::ofstream out(path);
    if (!out) throw rr::ConfigError("cannot open for writing: " + path);
    out << "# sweep_schema=1 seed=" << base.seed << " config_hash=" << base.config_hash << "\n";
    out << "n,p,eps,strategy,seed,err_robust,err_ols,err_oracle_ols\n";
    char buf[64];
    for (const auto& r : rows) {
        auto fmt = [&](double v) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            return std::string(buf);
        };
        out << r.cell.n << ',' << r.p << ',' << fmt(r.cell.eps) << ',' << r.cell.strategy << ',' << r.seed
            << ',' << fmt(r.err_robust) << ',' << fmt(r.err_ols) << ',' << fmt(r.err_oracle_ols) << '\n';
    }
    std::cout << "wrote " << path << " (" << rows.size() << " rows)\n";
    return kExitOk;
}

int cmd_verify(const std::string& suite, std::uint64_t seed) {
    std::vector<rr::SuiteResult> results;
    if (suite == "init" || suite == "all") results.push_back(rr::run_init_suite(200, seed));
    if (suite == "rounding" || suite == "all") results.push_back(rr::run_rounding_suite(500, 200, seed));
    if (suite == "contraction" || suite == "all") {
        auto c = rr::run_contraction_suite();
        results.insert(results.end(), c.begin(), c.end());
    }
    if (results.empty()) throw rr::ConfigError("verify: unknown suite '" + suite + "'");

    bool all_ok = true;
    for (const auto& r : results) {
        std::printf("[%s] %-32s observed=%.6g threshold=%.6g  %s\n", r.passed ? "PASS" : "FAIL",
                    r.name.c_str(), r.observed, r.threshold, r.details.c_str());
        all_ok = all_ok && r.passed;
    }
    return all_ok ? kExitOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"robustreg: outlier-robust heavy-tailed linear regression experiments"};
    app.require_subcommand(1);

    std::string config_path, out_path = "out", data_path, mode = "fixed-r1", suite = "all";
    std::string profile;
    std::uint64_t seed = 1;
    bool seed_set = false;
    int jobs = 1;

    auto* gen = app.add_subcommand("generate", "generate a contaminated dataset");
    gen->add_option("--config", config_path, "config file")->required();
    gen->add_option("--out", out_path, "output path stem");
    gen->add_option("--seed", seed, "seed override")->each([&](const std::string&) { seed_set = true; });
    gen->add_option("--profile", profile, "constants profile override (paper | practical)");

    auto* fit = app.add_subcommand("fit", "fit a dataset");
    fit->add_option("--data", data_path, "dataset (.csv or .bin)")->required();
    fit->add_option("--config", config_path, "config file")->required();
    fit->add_option("--out", out_path, "report path");
    fit->add_option("--mode", mode, "fixed-r1 | adaptive");
    fit->add_option("--seed", seed, "seed override")->each([&](const std::string&) { seed_set = true; });
    fit->add_option("--profile", profile, "constants profile override (paper | practical)");

    auto* sweep = app.add_subcommand("sweep", "run a (n, eps, strategy, seed) grid");
    sweep->add_option("--config", config_path, "config file")->required();
    sweep->add_option("--out", out_path, "output directory");
    sweep->add_option("--jobs", jobs, "worker threads");
    sweep->add_option("--seed", seed, "seed override")->each([&](const std::string&) { seed_set = true; });
    sweep->add_option("--profile", profile, "constants profile override (paper | practical)");

    auto* verify = app.add_subcommand("verify", "run the statistical acceptance suites");
    verify->add_option("--suite", suite, "init | rounding | contraction | all");
    verify->add_option("--seed", seed, "suite seed");

    CLI11_PARSE(app, argc, argv);

    try {
        std::optional<std::uint64_t> seed_opt = seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt;
        if (gen->parsed()) return cmd_generate(config_path, out_path, seed_opt, profile);
        if (fit->parsed()) return cmd_fit(data_path, config_path, out_path, mode, seed_opt, profile);
        if (sweep->parsed()) return cmd_sweep(config_path, out_path, jobs, seed_opt, profile);
        if (verify->parsed()) return cmd_verify(suite, seed);
    } catch (const rr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const rr::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}
