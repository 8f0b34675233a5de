// hsr: command-line front end for hyperspectral super-resolution by coupled
// LL1 tensor factorization.

#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hsr/hsr.hpp"

namespace {

enum Exit : int { ok = 0, other = 1, config_error = 2, dimension_error = 3, numerical_error = 4 };

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> snr;
    std::optional<hsr::Index> ratio;
    std::optional<hsr::Index> rank;
    std::optional<hsr::Index> term_rank;
    std::optional<int> max_iters;
    bool no_accel = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "run configuration file (key=value sections)");
    cmd->add_option("--seed", o.seed, "run seed");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--snr", o.snr, "noise level in dB (or inf)");
    cmd->add_option("--ratio", o.ratio, "spatial downsampling ratio");
    cmd->add_option("--rank", o.rank, "number of LL1 terms R");
    cmd->add_option("--term-rank", o.term_rank, "rank L of each abundance map");
    cmd->add_option("--max-iters", o.max_iters, "iteration cap");
    cmd->add_flag("--no-accel", o.no_accel, "disable extrapolation");
}

hsr::RunConfig resolve(const Overrides& o) {
    hsr::RunConfig cfg = o.config.empty() ? hsr::RunConfig{} : hsr::load_run_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (o.out) cfg.paths.out = *o.out;
    if (o.snr) cfg.snr_db = hsr::detail::parse_snr("--snr", *o.snr);
    if (o.ratio) cfg.blur.ratio = *o.ratio;
    if (o.rank) cfg.rank = *o.rank;
    if (o.term_rank) cfg.term_rank = *o.term_rank;
    if (o.max_iters) cfg.max_iters = *o.max_iters;
    if (o.no_accel) cfg.solver.accelerate = false;
    cfg.blur.validate();
    auto s = cfg.solver;
    s.max_iters = cfg.max_iters.value_or(0);
    s.validate();
    return cfg;
}

// Spatial sizes for `check` when --dims is absent: read headers of the
// configured HSI/MSI, otherwise derive them from [synthetic] and [blur].
hsr::RecoverabilityQuery query_from_config(const hsr::RunConfig& cfg) {
    hsr::RecoverabilityQuery q;
    if (cfg.paths.hsi && cfg.paths.msi) {
        const auto hsi = hsr::io::read_htf(*cfg.paths.hsi).dims();
        const auto msi = hsr::io::read_htf(*cfg.paths.msi).dims();
        q.msi_rows = msi.I;
        q.msi_cols = msi.J;
        q.msi_bands = msi.K;
        q.hsi_rows = hsi.I;
        q.hsi_cols = hsi.J;
        return q;
    }
    const auto spec = cfg.synthetic.value_or(hsr::SyntheticSpec{});
    auto down = [&](hsr::Index n) {
        return (n - cfg.blur.offset + cfg.blur.ratio - 1) / cfg.blur.ratio;
    };
    q.msi_rows = spec.dims.I;
    q.msi_cols = spec.dims.J;
    q.hsi_rows = down(spec.dims.I);
    q.hsi_cols = down(spec.dims.J);
    q.msi_bands = static_cast<hsr::Index>(cfg.bands.empty()
                                              ? hsr::detail::default_band_ranges(spec.dims.K).size()
                                              : cfg.bands.size());
    return q;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hyperspectral super-resolution via coupled LL1 tensor factorization"};
    app.set_version_flag("--version", std::string("hsr ") + hsr::version);
    app.require_subcommand(1);

    Overrides o;
    auto* simulate = app.add_subcommand("simulate", "degrade an SRI into an HSI/MSI pair");
    auto* fuse = app.add_subcommand("fuse", "SC-LL1 fusion with known degradation operators");
    auto* blind = app.add_subcommand("blind-fuse", "BSC-LL1 fusion with only PM known");
    auto* evaluate = app.add_subcommand("evaluate", "quality metrics of an estimate");
    auto* check = app.add_subcommand("check", "recoverability conditions for (dims, R, L)");
    for (auto* c : {simulate, fuse, blind, evaluate, check}) {
        add_common(c, o);
    }

    std::vector<std::string> eval_files;
    evaluate->add_option("files", eval_files, "REFERENCE ESTIMATE (.htf)")->expected(0, 2);

    std::vector<hsr::Index> check_dims;
    bool check_blind = false;
    check->add_option("--dims", check_dims, "I_M,J_M,I_H,J_H,K_M")->delimiter(',')->expected(5);
    check->add_flag("--blind", check_blind, "unknown spatial operators");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        const hsr::RunConfig cfg = resolve(o);
        hsr::json result;
        if (simulate->parsed()) {
            result = hsr::cmd_simulate(cfg);
        } else if (fuse->parsed()) {
            result = hsr::cmd_fuse(cfg);
        } else if (blind->parsed()) {
            result = hsr::cmd_blind_fuse(cfg);
        } else if (evaluate->parsed()) {
            std::filesystem::path ref, est;
            if (eval_files.size() == 2) {
                ref = eval_files[0];
                est = eval_files[1];
            } else if (eval_files.empty() && cfg.paths.reference) {
                ref = *cfg.paths.reference;
                est = cfg.paths.out / "sri.htf";
            } else {
                throw hsr::ConfigError("evaluate needs REFERENCE and ESTIMATE files");
            }
            result = hsr::cmd_evaluate(ref, est, cfg.blur.ratio);
            if (o.out) {
                hsr::detail::prepare_out(cfg.paths.out);
                hsr::detail::write_json(cfg.paths.out / "metrics.json", result);
            }
        } else {
            hsr::RecoverabilityQuery q;
            if (!check_dims.empty()) {
                q.msi_rows = check_dims[0];
                q.msi_cols = check_dims[1];
                q.hsi_rows = check_dims[2];
                q.hsi_cols = check_dims[3];
                q.msi_bands = check_dims[4];
            } else {
                q = query_from_config(cfg);
            }
            const auto spec = cfg.synthetic.value_or(hsr::SyntheticSpec{});
            q.terms = cfg.rank > 0 ? cfg.rank : spec.terms;
            q.term_rank = cfg.term_rank > 0 ? cfg.term_rank : spec.term_rank;
            q.blind = check_blind;
            result = hsr::cmd_check(q);
        }
        std::cout << result.dump(2) << "\n";
        return ok;
    } catch (const hsr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const hsr::DimensionError& e) {
        std::cerr << "dimension error: " << e.what() << "\n";
        return dimension_error;
    } catch (const hsr::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return numerical_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return other;
    }
}
