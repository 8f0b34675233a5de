#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "io.hpp"
#include "ll1.hpp"
#include "metrics.hpp"
#include "solver.hpp"
#include "version.hpp"

namespace hsr {

using json = nlohmann::ordered_json;

namespace detail {

// splitmix64 finalizer; keeps per-stream seeds apart when run seeds are small
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

enum SeedStream : std::uint64_t { truth = 0, hsi_noise = 1, msi_noise = 2 };

/// JSON has no infinity; non-finite numbers are written as strings.
inline json number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    return v;
}

inline json dims_json(const Dims3& d) {
    return json::array({d.I, d.J, d.K});
}

inline std::string config_hash(const RunConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(io::fnv1a(cfg.canonical())));
    return buf;
}

inline json manifest_header(const RunConfig& cfg, const std::string& command) {
    json m;
    m["tool"] = "hsr";
    m["version"] = version;
    m["command"] = command;
    m["config_hash"] = config_hash(cfg);
    m["seed"] = cfg.seed;
    return m;
}

inline void require_file(const std::optional<std::filesystem::path>& p, const char* key) {
    if (!p) {
        throw ConfigError(std::string("missing required path '") + key + "'");
    }
    if (!std::filesystem::is_regular_file(*p)) {
        throw ConfigError(std::string(key) + ": no such file " + p->string());
    }
}

inline void prepare_out(const std::filesystem::path& out) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec || !std::filesystem::is_directory(out)) {
        throw ConfigError("cannot create output directory " + out.string());
    }
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    io::write_text(path, j.dump(2) + "\n");
}

inline double realized_snr(const Tensor3& clean, const Tensor3& noisy) {
    return rsnr(clean.data().squaredNorm(), (noisy.data() - clean.data()).squaredNorm());
}

inline std::string encode_trace(const std::vector<double>& objective,
                                const std::vector<double>& elapsed) {
    std::string out = "iteration,objective,elapsed_seconds\n";
    for (std::size_t t = 0; t < objective.size(); ++t) {
        out += std::to_string(t) + "," + io::format_double(objective[t]) + "," +
               io::format_double(t < elapsed.size() ? elapsed[t] : 0.0) + "\n";
    }
    return out;
}

inline json metrics_json(const MetricReport& m) {
    json j;
    j["rsnr_db"] = number(m.rsnr_db);
    j["ssim"] = number(m.ssim);
    j["cc"] = number(m.cc);
    j["uiqi"] = number(m.uiqi);
    j["rmse"] = number(m.rmse);
    j["ergas"] = number(m.ergas);
    j["sam_rad"] = number(m.sam_rad);
    j["sam_skipped_pixels"] = m.sam_skipped_pixels;
    return j;
}

inline json per_band_json(const std::vector<BandMetrics>& rows) {
    json a = json::array();
    for (std::size_t k = 0; k < rows.size(); ++k) {
        a.push_back({{"band", k},
                     {"rsnr_db", number(rows[k].rsnr_db)},
                     {"ssim", number(rows[k].ssim)},
                     {"uiqi", number(rows[k].uiqi)},
                     {"rmse", number(rows[k].rmse)}});
    }
    return a;
}

inline json recoverability_json(const RecoverabilityResult& r) {
    return {{"satisfied", r.satisfied}, {"failed_conditions", r.failed_conditions}};
}

inline void warn(std::ostream& log, const std::string& msg) {
    log << "warning: " << msg << "\n";
}

} // namespace detail

// ---------------------------------------------------------------------------
// simulate

/**
 * Degrades an SRI (read from paths.sri or drawn from [synthetic]) into an
 * HSI/MSI pair. Writes sri.htf, hsi.htf, msi.htf, p1.csv, p2.csv, pm.csv and
 * manifest.json into paths.out.
 */
inline json cmd_simulate(const RunConfig& cfg, std::ostream& log = std::cerr) {
    if (cfg.paths.sri) {
        detail::require_file(cfg.paths.sri, "paths.sri");
    }
    for (const auto& [p, key] :
         {std::pair{&cfg.paths.p1, "paths.p1"}, std::pair{&cfg.paths.p2, "paths.p2"},
          std::pair{&cfg.paths.pm, "paths.pm"}}) {
        if (*p) {
            detail::require_file(*p, key);
        }
    }
    detail::prepare_out(cfg.paths.out);

    Tensor3 sri;
    Index R = cfg.rank;
    Index L = cfg.term_rank;
    if (cfg.paths.sri) {
        sri = io::read_htf(*cfg.paths.sri);
    } else {
        const SyntheticSpec spec = cfg.synthetic.value_or(SyntheticSpec{});
        const auto f = random_ll1(spec.dims, spec.terms, spec.term_rank,
                                  detail::derive_seed(cfg.seed, detail::truth), spec.nonneg);
        sri = reconstruct(f);
        R = R > 0 ? R : spec.terms;
        L = L > 0 ? L : spec.term_rank;
    }

    const Matrix P1 =
        cfg.paths.p1 ? io::read_matrix_csv(*cfg.paths.p1) : build_spatial_op(sri.rows(), cfg.blur);
    const Matrix P2 =
        cfg.paths.p2 ? io::read_matrix_csv(*cfg.paths.p2) : build_spatial_op(sri.cols(), cfg.blur);
    const Matrix PM =
        cfg.paths.pm ? io::read_matrix_csv(*cfg.paths.pm)
                     : build_spectral_op(
                           cfg.bands.empty() ? detail::default_band_ranges(sri.bands()) : cfg.bands,
                           sri.bands());
    detail::require_dims(P1.cols() == sri.rows() && P2.cols() == sri.cols() &&
                             PM.cols() == sri.bands(),
                         "simulate: operators do not match SRI " + sri.dims().str());
    const DegradationOps ops(P1, P2, PM);

    const Tensor3 hsi_clean = degrade_spatial(sri, ops);
    const Tensor3 msi_clean = degrade_spectral(sri, ops);
    const Tensor3 hsi =
        add_noise(hsi_clean, cfg.snr_db, detail::derive_seed(cfg.seed, detail::hsi_noise));
    const Tensor3 msi =
        add_noise(msi_clean, cfg.snr_db, detail::derive_seed(cfg.seed, detail::msi_noise));

    const auto& out = cfg.paths.out;
    io::write_htf(out / "sri.htf", sri);
    io::write_htf(out / "hsi.htf", hsi);
    io::write_htf(out / "msi.htf", msi);
    io::write_matrix_csv(out / "p1.csv", P1);
    io::write_matrix_csv(out / "p2.csv", P2);
    io::write_matrix_csv(out / "pm.csv", PM);

    json m = detail::manifest_header(cfg, "simulate");
    m["sri_dims"] = detail::dims_json(sri.dims());
    m["hsi_dims"] = detail::dims_json(hsi.dims());
    m["msi_dims"] = detail::dims_json(msi.dims());
    m["op_dims"] = {{"p1", {P1.rows(), P1.cols()}},
                    {"p2", {P2.rows(), P2.cols()}},
                    {"pm", {PM.rows(), PM.cols()}}};
    m["requested_snr_db"] = detail::number(cfg.snr_db);
    m["realized_snr_db"] = {{"hsi", detail::number(detail::realized_snr(hsi_clean, hsi))},
                            {"msi", detail::number(detail::realized_snr(msi_clean, msi))}};
    json warnings = json::array();
    if (R > 0 && L > 0) {
        RecoverabilityQuery q{sri.rows(),  sri.cols(), hsi.rows(), hsi.cols(),
                              msi.bands(), L,          R,          false};
        const auto known = check_recoverability(q);
        q.blind = true;
        const auto blind = check_recoverability(q);
        m["rank"] = R;
        m["term_rank"] = L;
        m["recoverability"] = {{"known", detail::recoverability_json(known)},
                               {"blind", detail::recoverability_json(blind)}};
        for (const auto& c : known.failed_conditions) {
            const std::string msg = "recoverability condition fails for R=" + std::to_string(R) +
                                    ", L=" + std::to_string(L) + ": " + c;
            detail::warn(log, msg);
            warnings.push_back(msg);
        }
    }
    m["warnings"] = warnings;
    detail::write_json(out / "manifest.json", m);
    return m;
}

// ---------------------------------------------------------------------------
// fuse / blind-fuse

namespace detail {

inline void write_fusion_outputs(const RunConfig& cfg, const std::string& command,
                                 const FusionReport& rep, const SolverConfig& scfg, json& report) {
    const auto& out = cfg.paths.out;
    io::write_htf(out / "sri.htf", rep.sri);
    io::write_text(out / "trace.csv", encode_trace(rep.objective_trace, rep.elapsed_seconds));

    report["iterations"] = rep.iterations;
    report["converged"] = rep.converged;
    report["max_iters"] = scfg.max_iters;
    report["accelerate"] = scfg.accelerate;
    report["final_objective"] = number(rep.objective_trace.back());
    report["elapsed_seconds"] = rep.elapsed_seconds.back();
    report["sri_dims"] = dims_json(rep.sri.dims());
    if (cfg.paths.reference) {
        const Tensor3 ref = io::read_htf(*cfg.paths.reference);
        report["metrics"] = metrics_json(evaluate(ref, rep.sri, cfg.blur.ratio));
        report["per_band"] = per_band_json(per_band_curves(ref, rep.sri));
    }
    write_json(out / "report.json", report);

    // timing-free record of the run
    json m = manifest_header(cfg, command);
    m["sri_dims"] = dims_json(rep.sri.dims());
    m["iterations"] = rep.iterations;
    m["converged"] = rep.converged;
    write_json(out / "manifest.json", m);
}

template <typename Solve>
json run_fusion(const RunConfig& cfg, const std::string& command, const SolverConfig& scfg,
                Solve&& solve) {
    json report = manifest_header(cfg, command);
    report["rank"] = cfg.rank;
    try {
        const FusionReport rep = solve();
        write_fusion_outputs(cfg, command, rep, scfg, report);
    } catch (const DivergenceError& e) {
        io::write_text(cfg.paths.out / "trace.csv", encode_trace(e.trace, e.elapsed));
        throw;
    }
    return report;
}

inline void require_rank(const RunConfig& cfg) {
    if (cfg.rank <= 0) {
        throw ConfigError("model rank R is required (model.rank or --rank)");
    }
}

} // namespace detail

/// SC-LL1 fusion with known P1, P2, PM read from CSV.
inline json cmd_fuse(const RunConfig& cfg, std::ostream& log = std::cerr) {
    (void)log;
    detail::require_file(cfg.paths.hsi, "paths.hsi");
    detail::require_file(cfg.paths.msi, "paths.msi");
    detail::require_file(cfg.paths.p1, "paths.p1");
    detail::require_file(cfg.paths.p2, "paths.p2");
    detail::require_file(cfg.paths.pm, "paths.pm");
    if (cfg.paths.reference) {
        detail::require_file(cfg.paths.reference, "paths.reference");
    }
    detail::require_rank(cfg);
    detail::prepare_out(cfg.paths.out);

    const Tensor3 hsi = io::read_htf(*cfg.paths.hsi);
    const Tensor3 msi = io::read_htf(*cfg.paths.msi);
    const DegradationOps ops(io::read_matrix_csv(*cfg.paths.p1), io::read_matrix_csv(*cfg.paths.p2),
                             io::read_matrix_csv(*cfg.paths.pm));
    const SolverConfig scfg = cfg.solver_for(false);
    return detail::run_fusion(cfg, "fuse", scfg,
                              [&] { return solve_sc_ll1(hsi, msi, ops, cfg.rank, scfg); });
}

/// BSC-LL1 fusion; only PM is used.
inline json cmd_blind_fuse(const RunConfig& cfg, std::ostream& log = std::cerr) {
    detail::require_file(cfg.paths.hsi, "paths.hsi");
    detail::require_file(cfg.paths.msi, "paths.msi");
    detail::require_file(cfg.paths.pm, "paths.pm");
    if (cfg.paths.reference) {
        detail::require_file(cfg.paths.reference, "paths.reference");
    }
    detail::require_rank(cfg);
    if (cfg.paths.p1 || cfg.paths.p2) {
        detail::warn(log, "blind-fuse ignores paths.p1 / paths.p2");
    }
    detail::prepare_out(cfg.paths.out);

    const Tensor3 hsi = io::read_htf(*cfg.paths.hsi);
    const Tensor3 msi = io::read_htf(*cfg.paths.msi);
    const Matrix pm = io::read_matrix_csv(*cfg.paths.pm);
    const SolverConfig scfg = cfg.solver_for(true);
    return detail::run_fusion(cfg, "blind-fuse", scfg,
                              [&] { return solve_bsc_ll1(hsi, msi, pm, cfg.rank, scfg); });
}

// ---------------------------------------------------------------------------
// evaluate / check

inline json cmd_evaluate(const std::filesystem::path& reference,
                         const std::filesystem::path& estimate, Index ratio) {
    detail::require_file(reference, "reference");
    detail::require_file(estimate, "estimate");
    const Tensor3 ref = io::read_htf(reference);
    const Tensor3 est = io::read_htf(estimate);
    json j;
    j["tool"] = "hsr";
    j["version"] = version;
    j["command"] = "evaluate";
    j["ratio"] = ratio;
    j["metrics"] = detail::metrics_json(evaluate(ref, est, ratio));
    j["per_band"] = detail::per_band_json(per_band_curves(ref, est));
    return j;
}

inline json cmd_check(const RecoverabilityQuery& q) {
    const auto r = check_recoverability(q);
    json j;
    j["tool"] = "hsr";
    j["version"] = version;
    j["command"] = "check";
    j["mode"] = q.blind ? "blind" : "known";
    j["msi_dims"] = {q.msi_rows, q.msi_cols, q.msi_bands};
    j["hsi_spatial"] = {q.hsi_rows, q.hsi_cols};
    j["rank"] = q.terms;
    j["term_rank"] = q.term_rank;
    j.update(detail::recoverability_json(r));
    return j;
}

} // namespace hsr
