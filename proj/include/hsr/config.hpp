#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "degradation.hpp"
#include "io.hpp"
#include "solver.hpp"

namespace hsr {

/// Ground truth drawn from random_ll1 when no SRI file is given to `simulate`.
struct SyntheticSpec {
    Dims3 dims{32, 32, 16};
    Index terms = 3;
    Index term_rank = 2;
    bool nonneg = true;
};

/**
 * Run configuration read from a key=value file with [sections]:
 *
 *   [run]        seed
 *   [paths]      sri hsi msi p1 p2 pm reference out
 *   [synthetic]  rows cols bands rank term_rank nonneg
 *   [blur]       kernel_width sigma ratio boundary offset
 *   [spectral]   bands        (e.g. "0-3,4-7,8-11")
 *   [noise]      snr_db       (number or "inf")
 *   [model]      rank term_rank
 *   [solver]     lambda theta eta p tau q epsilon max_iters rel_tol accelerate
 *
 * Unknown sections or keys are rejected.
 */
struct RunConfig {
    std::uint64_t seed = 0;

    struct Paths {
        std::optional<std::filesystem::path> sri;
        std::optional<std::filesystem::path> hsi;
        std::optional<std::filesystem::path> msi;
        std::optional<std::filesystem::path> p1;
        std::optional<std::filesystem::path> p2;
        std::optional<std::filesystem::path> pm;
        std::optional<std::filesystem::path> reference;
        std::filesystem::path out = ".";
    } paths;

    std::optional<SyntheticSpec> synthetic;
    BlurSpec blur;
    std::vector<BandRange> bands; // empty: four contiguous groups
    double snr_db = 30.0;

    Index rank = 0;      // R, 0 if unset
    Index term_rank = 0; // L, 0 if unset

    SolverConfig solver;
    std::optional<int> max_iters; // unset: 300 known / 600 blind

    /// Solver settings with the per-mode iteration default applied.
    SolverConfig solver_for(bool blind) const {
        SolverConfig s = solver;
        s.max_iters = max_iters.value_or(blind ? SolverConfig::blind_defaults().max_iters
                                               : SolverConfig::known_defaults().max_iters);
        s.seed = seed;
        return s;
    }

    /// Deterministic key=value listing of the effective configuration.
    std::string canonical() const;
};

namespace detail {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    if constexpr (std::is_unsigned_v<T>) {
        if (text.find('-') != std::string::npos) {
            throw ConfigError("config: '" + key + "' must be non-negative, got '" + text + "'");
        }
    }
    std::istringstream in(text);
    T v{};
    in >> v;
    if (in.fail() || !(in >> std::ws).eof()) {
        throw ConfigError("config: '" + key + "' expects a number, got '" + text + "'");
    }
    return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") {
        return true;
    }
    if (text == "false" || text == "0" || text == "no" || text == "off") {
        return false;
    }
    throw ConfigError("config: '" + key + "' expects a boolean, got '" + text + "'");
}

inline double parse_snr(const std::string& key, const std::string& text) {
    if (text == "inf" || text == "+inf" || text == "Inf" || text == "infinity") {
        return noiseless;
    }
    return parse_number<double>(key, text);
}

/// "0-3,4-7,8" -> {[0,3],[4,7],[8,8]}
inline std::vector<BandRange> parse_band_ranges(const std::string& text) {
    std::vector<BandRange> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto dash = item.find('-');
        if (dash == std::string::npos) {
            const auto b = parse_number<Index>("spectral.bands", item);
            out.emplace_back(b, b);
        } else {
            out.emplace_back(parse_number<Index>("spectral.bands", item.substr(0, dash)),
                             parse_number<Index>("spectral.bands", item.substr(dash + 1)));
        }
    }
    if (out.empty()) {
        throw ConfigError("config: spectral.bands is empty");
    }
    return out;
}

inline std::vector<BandRange> default_band_ranges(Index bands, Index groups = 4) {
    groups = std::min(groups, bands);
    std::vector<BandRange> out;
    for (Index g = 0; g < groups; ++g) {
        out.emplace_back(g * bands / groups, (g + 1) * bands / groups - 1);
    }
    return out;
}

inline std::string format_snr(double snr) {
    return std::isinf(snr) ? "inf" : io::format_double(snr);
}

} // namespace detail

inline RunConfig parse_run_config(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    static const std::map<std::string, std::set<std::string>> schema{
        {"run", {"seed"}},
        {"paths", {"sri", "hsi", "msi", "p1", "p2", "pm", "reference", "out"}},
        {"synthetic", {"rows", "cols", "bands", "rank", "term_rank", "nonneg"}},
        {"blur", {"kernel_width", "sigma", "ratio", "boundary", "offset"}},
        {"spectral", {"bands"}},
        {"noise", {"snr_db"}},
        {"model", {"rank", "term_rank"}},
        {"solver",
         {"lambda", "theta", "eta", "p", "tau", "q", "epsilon", "max_iters", "rel_tol",
          "accelerate"}},
    };

    RunConfig cfg;
    for (const auto& [section, body] : tree) {
        const auto it = schema.find(section);
        if (it == schema.end() || body.empty()) {
            throw ConfigError("config: unknown section or top-level key '" + section + "'");
        }
        for (const auto& [key, node] : body) {
            if (!it->second.contains(key)) {
                throw ConfigError("config: unknown key '" + section + "." + key + "'");
            }
            const std::string full = section + "." + key;
            const std::string v = node.get_value<std::string>();
            if (section == "run") {
                cfg.seed = detail::parse_number<std::uint64_t>(full, v);
            } else if (section == "paths") {
                if (key == "out") {
                    cfg.paths.out = v;
                } else {
                    auto& slot = key == "sri"   ? cfg.paths.sri
                                 : key == "hsi" ? cfg.paths.hsi
                                 : key == "msi" ? cfg.paths.msi
                                 : key == "p1"  ? cfg.paths.p1
                                 : key == "p2"  ? cfg.paths.p2
                                 : key == "pm"  ? cfg.paths.pm
                                                : cfg.paths.reference;
                    slot = std::filesystem::path(v);
                }
            } else if (section == "synthetic") {
                if (!cfg.synthetic) {
                    cfg.synthetic.emplace();
                }
                auto& s = *cfg.synthetic;
                if (key == "rows") s.dims.I = detail::parse_number<Index>(full, v);
                else if (key == "cols") s.dims.J = detail::parse_number<Index>(full, v);
                else if (key == "bands") s.dims.K = detail::parse_number<Index>(full, v);
                else if (key == "rank") s.terms = detail::parse_number<Index>(full, v);
                else if (key == "term_rank") s.term_rank = detail::parse_number<Index>(full, v);
                else s.nonneg = detail::parse_bool(full, v);
            } else if (section == "blur") {
                if (key == "kernel_width")
                    cfg.blur.kernel_width = detail::parse_number<Index>(full, v);
                else if (key == "sigma") cfg.blur.sigma = detail::parse_number<double>(full, v);
                else if (key == "ratio") cfg.blur.ratio = detail::parse_number<Index>(full, v);
                else if (key == "offset") cfg.blur.offset = detail::parse_number<Index>(full, v);
                else if (v == "circular") cfg.blur.boundary = Boundary::circular;
                else if (v == "reflect") cfg.blur.boundary = Boundary::reflect;
                else throw ConfigError("config: blur.boundary must be circular or reflect");
            } else if (section == "spectral") {
                cfg.bands = detail::parse_band_ranges(v);
            } else if (section == "noise") {
                cfg.snr_db = detail::parse_snr(full, v);
            } else if (section == "model") {
                auto& slot = key == "rank" ? cfg.rank : cfg.term_rank;
                slot = detail::parse_number<Index>(full, v);
                if (slot < 0) {
                    throw ConfigError("config: " + full + " must be >= 0");
                }
            } else { // solver
                auto& s = cfg.solver;
                if (key == "lambda") s.lambda = detail::parse_number<double>(full, v);
                else if (key == "theta") s.theta = detail::parse_number<double>(full, v);
                else if (key == "eta") s.eta = detail::parse_number<double>(full, v);
                else if (key == "p") s.schatten.p = detail::parse_number<double>(full, v);
                else if (key == "tau") s.schatten.tau = detail::parse_number<double>(full, v);
                else if (key == "q") s.tv.q = detail::parse_number<double>(full, v);
                else if (key == "epsilon") s.tv.epsilon = detail::parse_number<double>(full, v);
                else if (key == "max_iters") {
                    cfg.max_iters = detail::parse_number<int>(full, v);
                    if (*cfg.max_iters < 0) {
                        throw ConfigError("config: solver.max_iters must be >= 0");
                    }
                } else if (key == "rel_tol") s.rel_tol = detail::parse_number<double>(full, v);
                else s.accelerate = detail::parse_bool(full, v);
            }
        }
    }
    cfg.blur.validate();
    cfg.solver.validate();
    return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

inline std::string RunConfig::canonical() const {
    using io::format_double;
    std::ostringstream o;
    auto path = [](const std::optional<std::filesystem::path>& p) {
        return p ? p->generic_string() : std::string();
    };
    o << "run.seed=" << seed << "\n";
    o << "paths.sri=" << path(paths.sri) << "\npaths.hsi=" << path(paths.hsi)
      << "\npaths.msi=" << path(paths.msi) << "\npaths.p1=" << path(paths.p1)
      << "\npaths.p2=" << path(paths.p2) << "\npaths.pm=" << path(paths.pm)
      << "\npaths.reference=" << path(paths.reference) << "\n";
    if (synthetic) {
        o << "synthetic.dims=" << synthetic->dims.str() << "\nsynthetic.rank=" << synthetic->terms
          << "\nsynthetic.term_rank=" << synthetic->term_rank
          << "\nsynthetic.nonneg=" << synthetic->nonneg << "\n";
    }
    o << "blur.kernel_width=" << blur.kernel_width << "\nblur.sigma=" << format_double(blur.sigma)
      << "\nblur.ratio=" << blur.ratio
      << "\nblur.boundary=" << (blur.boundary == Boundary::circular ? "circular" : "reflect")
      << "\nblur.offset=" << blur.offset << "\nspectral.bands=";
    for (std::size_t i = 0; i < bands.size(); ++i) {
        o << (i ? "," : "") << bands[i].first << "-" << bands[i].second;
    }
    o << "\nnoise.snr_db=" << detail::format_snr(snr_db) << "\nmodel.rank=" << rank
      << "\nmodel.term_rank=" << term_rank << "\nsolver.lambda=" << format_double(solver.lambda)
      << "\nsolver.theta=" << format_double(solver.theta)
      << "\nsolver.eta=" << format_double(solver.eta)
      << "\nsolver.p=" << format_double(solver.schatten.p)
      << "\nsolver.tau=" << format_double(solver.schatten.tau)
      << "\nsolver.q=" << format_double(solver.tv.q)
      << "\nsolver.epsilon=" << format_double(solver.tv.epsilon)
      << "\nsolver.max_iters=" << (max_iters ? std::to_string(*max_iters) : "default")
      << "\nsolver.rel_tol=" << format_double(solver.rel_tol)
      << "\nsolver.accelerate=" << solver.accelerate << "\n";
    return o.str();
}

} // namespace hsr
