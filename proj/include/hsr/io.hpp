#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tensor.hpp"

namespace hsr::io {

// ---------------------------------------------------------------------------
// HTF: "HTF1" | I, J, K as u32 LE | I*J*K f64 LE, i fastest then j then k.

inline constexpr std::array<char, 4> htf_magic{'H', 'T', 'F', '1'};
inline constexpr std::size_t htf_header_bytes = 16;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) {
        out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
    }
}

inline void put_f64(std::string& out, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int b = 0; b < 8; ++b) {
        out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
    }
}

inline std::uint64_t get_le(const unsigned char* p, int bytes) {
    std::uint64_t v = 0;
    for (int b = bytes - 1; b >= 0; --b) {
        v = (v << 8) | p[b];
    }
    return v;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw ConfigError("write failed for " + path.string());
    }
}

} // namespace detail

inline std::string encode_htf(const Tensor3& t) {
    const auto& d = t.dims();
    for (Index n : {d.I, d.J, d.K}) {
        if (n > static_cast<Index>(UINT32_MAX)) {
            throw FormatError("HTF: dimension exceeds 32 bits");
        }
    }
    std::string out;
    out.reserve(htf_header_bytes + 8 * static_cast<std::size_t>(t.size()));
    out.append(htf_magic.data(), htf_magic.size());
    detail::put_u32(out, static_cast<std::uint32_t>(d.I));
    detail::put_u32(out, static_cast<std::uint32_t>(d.J));
    detail::put_u32(out, static_cast<std::uint32_t>(d.K));
    for (Index i = 0; i < t.size(); ++i) {
        detail::put_f64(out, t.data()[i]);
    }
    return out;
}

/// Decodes an HTF payload. Non-finite entries are rejected.
inline Tensor3 decode_htf(std::string_view bytes, const std::string& source = "<memory>") {
    if (bytes.size() < htf_header_bytes ||
        std::memcmp(bytes.data(), htf_magic.data(), htf_magic.size()) != 0) {
        throw FormatError(source + ": not an HTF1 file (bad magic)");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint64_t I = detail::get_le(p + 4, 4);
    const std::uint64_t J = detail::get_le(p + 8, 4);
    const std::uint64_t K = detail::get_le(p + 12, 4);
    if (I == 0 || J == 0 || K == 0) {
        throw FormatError(source + ": HTF dims must be positive");
    }
    const std::uint64_t payload = bytes.size() - htf_header_bytes;
    // I*J*K < 2^96; compare without overflow
    const long double needed = static_cast<long double>(I) * J * K * 8.0L;
    if (needed != static_cast<long double>(payload)) {
        throw FormatError(source + ": HTF payload is " + std::to_string(payload) +
                          " bytes but header " + std::to_string(I) + "x" + std::to_string(J) + "x" +
                          std::to_string(K) +
                          (needed > payload ? " needs more (truncated)" : " needs fewer"));
    }
    Tensor3 t(static_cast<Index>(I), static_cast<Index>(J), static_cast<Index>(K));
    for (Index n = 0; n < t.size(); ++n) {
        const double v = std::bit_cast<double>(detail::get_le(p + htf_header_bytes + 8 * n, 8));
        if (!std::isfinite(v)) {
            throw FormatError(source + ": non-finite value at flat index " + std::to_string(n));
        }
        t.data()[n] = v;
    }
    return t;
}

inline Tensor3 read_htf(const std::filesystem::path& path) {
    return decode_htf(detail::slurp(path), path.string());
}

inline void write_htf(const std::filesystem::path& path, const Tensor3& t) {
    detail::spit(path, encode_htf(t));
}

// ---------------------------------------------------------------------------
// CSV matrices: one row per line, comma separated, shortest round-trip decimals.

inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) {
        throw FormatError("cannot format value");
    }
    return {buf.data(), end};
}

inline std::string encode_matrix_csv(const Matrix& m) {
    std::string out;
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j > 0) {
                out.push_back(',');
            }
            out += format_double(m(i, j));
        }
        out.push_back('\n');
    }
    return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

} // namespace detail

inline Matrix decode_matrix_csv(std::string_view text, const std::string& source = "<memory>") {
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto line = detail::trim(
            text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos));
        ++line_no;
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        if (line.empty()) {
            continue;
        }
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            const auto cell = detail::trim(line.substr(
                start, comma == std::string_view::npos ? line.size() - start : comma - start));
            double v = 0.0;
            const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || ec != std::errc{} || end != cell.data() + cell.size() ||
                !std::isfinite(v)) {
                throw FormatError(source + ": row " + std::to_string(line_no) +
                                  ": non-numeric cell '" + std::string(cell) + "'");
            }
            row.push_back(v);
            if (comma == std::string_view::npos) {
                break;
            }
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw FormatError(source + ": row " + std::to_string(line_no) + " has " +
                              std::to_string(row.size()) + " columns, expected " +
                              std::to_string(rows.front().size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw FormatError(source + ": empty matrix");
    }
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return m;
}

inline Matrix read_matrix_csv(const std::filesystem::path& path) {
    return decode_matrix_csv(detail::slurp(path), path.string());
}

inline void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
    detail::spit(path, encode_matrix_csv(m));
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    detail::spit(path, text);
}

/// 64-bit FNV-1a, used to fingerprint configurations in manifests.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace hsr::io
