#pragma once

// Binary containers, all little-endian and ending in a CRC32 of every
// preceding byte.
//
//   LCSF  field:   "LCSF" u16 version, u8 dtype (0 f64, 1 i32), u8 ndim,
//                  u64 shape[ndim], row-major payload, u32 crc
//   LCSM  model:   "LCSM" u16 version, lightcone shape, past and future
//                  cluster models, psi map with pooled counts and PMFs, u32 crc
//   LCSR  rule:    "LCSR" u16 version, u32 radius, u32 states, u64 entries,
//                  entries of (i32 key[2r+1], u64 count, f64 pmf[states]), u32 crc

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "lcs/array2d.hpp"
#include "lcs/causal_states.hpp"
#include "lcs/dynamics.hpp"
#include "lcs/errors.hpp"

namespace lcs::io {

inline constexpr std::uint16_t kVersion = 1;

enum class DType : std::uint8_t { f64 = 0, i32 = 1 };

inline std::uint32_t crc32_of(std::string_view bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large buffers in pieces.
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
        crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), n);
        pos += n;
    }
    return static_cast<std::uint32_t>(crc);
}

class ByteWriter {
public:
    void raw(std::string_view s) { buf_.append(s); }
    template <typename U>
    void uint(U v) {
        static_assert(std::is_unsigned_v<U>);
        for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void u8(std::uint8_t v) { uint(v); }
    void u16(std::uint16_t v) { uint(v); }
    void u32(std::uint32_t v) { uint(v); }
    void u64(std::uint64_t v) { uint(v); }
    void i32(std::int32_t v) { uint(static_cast<std::uint32_t>(v)); }
    void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }

    // Appends the CRC32 of everything written so far and returns the bytes.
    std::string finish() && {
        const auto crc = crc32_of(buf_);
        u32(crc);
        return std::move(buf_);
    }

private:
    std::string buf_;
};

class ByteReader {
public:
    // Verifies the trailing CRC32 and the magic before any parsing.
    ByteReader(std::string_view bytes, std::string_view magic) {
        if (bytes.size() < magic.size() + 2 + 4) throw IoError(std::string(magic) + ": file truncated");
        const std::string_view body = bytes.substr(0, bytes.size() - 4);
        ByteReader tail(bytes.substr(bytes.size() - 4));
        if (tail.u32() != crc32_of(body)) throw IoError(std::string(magic) + ": CRC mismatch (file corrupted)");
        data_ = body;
        if (data_.substr(0, magic.size()) != magic) throw IoError("bad magic, expected " + std::string(magic));
        pos_ = magic.size();
        if (const auto v = u16(); v != kVersion)
            throw IoError(std::string(magic) + ": unsupported version " + std::to_string(v));
    }

    template <typename U>
    U uint() {
        need(sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i)
            v |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i));
        pos_ += sizeof(U);
        return v;
    }
    std::uint8_t u8() { return uint<std::uint8_t>(); }
    std::uint16_t u16() { return uint<std::uint16_t>(); }
    std::uint32_t u32() { return uint<std::uint32_t>(); }
    std::uint64_t u64() { return uint<std::uint64_t>(); }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    std::size_t remaining() const { return data_.size() - pos_; }
    void expect_end() const {
        if (pos_ != data_.size()) throw IoError("trailing bytes after container payload");
    }

private:
    explicit ByteReader(std::string_view raw) : data_(raw) {}
    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) throw IoError("container truncated");
    }
    std::string_view data_;
    std::size_t pos_ = 0;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path.string());
    return bytes;
}

// Writes through a temporary file and renames, so readers never see a
// partially written output.
inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot create " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

// ---- LCSF ----

namespace detail {
template <typename T>
constexpr DType dtype_of() {
    if constexpr (std::is_same_v<T, double>) return DType::f64;
    else {
        static_assert(std::is_same_v<T, std::int32_t>, "LCSF holds float64 or int32");
        return DType::i32;
    }
}
} // namespace detail

template <typename T>
std::string encode_lcsf(const Array2D<T>& a) {
    ByteWriter w;
    w.raw("LCSF");
    w.u16(kVersion);
    w.u8(static_cast<std::uint8_t>(detail::dtype_of<T>()));
    w.u8(2);
    w.u64(a.rows());
    w.u64(a.cols());
    for (const T& v : a.data()) {
        if constexpr (std::is_same_v<T, double>) w.f64(v);
        else w.i32(v);
    }
    return std::move(w).finish();
}

template <typename T>
Array2D<T> decode_lcsf(std::string_view bytes) {
    ByteReader r(bytes, "LCSF");
    const auto dtype = r.u8();
    if (dtype != static_cast<std::uint8_t>(detail::dtype_of<T>()))
        throw IoError("LCSF: dtype code " + std::to_string(dtype) + " does not match the requested element type");
    const auto ndim = r.u8();
    if (ndim != 2) throw IoError("LCSF: expected a 2D field, found ndim=" + std::to_string(ndim));
    const auto rows = r.u64(), cols = r.u64();
    if (cols != 0 && rows > r.remaining() / sizeof(T) / cols)
        throw IoError("LCSF: payload shorter than the declared shape");
    if (rows * cols * sizeof(T) != r.remaining()) throw IoError("LCSF: payload length does not match the shape");
    std::vector<T> data(rows * cols);
    for (auto& v : data) {
        if constexpr (std::is_same_v<T, double>) v = r.f64();
        else v = r.i32();
    }
    r.expect_end();
    return Array2D<T>(rows, cols, std::move(data));
}

template <typename T>
void save_lcsf(const std::filesystem::path& path, const Array2D<T>& a) {
    write_file(path, encode_lcsf(a));
}

template <typename T>
Array2D<T> load_lcsf(const std::filesystem::path& path) {
    try {
        return decode_lcsf<T>(read_file(path));
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

// ---- LCSM ----

namespace detail {
inline void put_cluster_model(ByteWriter& w, const ClusterModel& m) {
    w.u8(m.kind == ConeKind::past ? 0 : 1);
    w.u32(static_cast<std::uint32_t>(m.k()));
    w.u32(static_cast<std::uint32_t>(m.dim()));
    for (double v : m.centroids.data()) w.f64(v);
    for (auto c : m.counts) w.u64(c);
    w.f64(m.inertia);
}

inline ClusterModel get_cluster_model(ByteReader& r, const LightconeShape& shape) {
    ClusterModel m;
    m.shape = shape;
    const auto kind = r.u8();
    if (kind > 1) throw IoError("LCSM: bad cone kind");
    m.kind = kind == 0 ? ConeKind::past : ConeKind::future;
    const auto k = r.u32(), dim = r.u32();
    if (static_cast<std::uint64_t>(k) * dim * 8 > r.remaining()) throw IoError("LCSM: truncated centroids");
    std::vector<double> c(static_cast<std::size_t>(k) * dim);
    for (auto& v : c) v = r.f64();
    m.centroids = Matrix(k, dim, std::move(c));
    m.counts.resize(k);
    for (auto& v : m.counts) v = r.u64();
    m.inertia = r.f64();
    return m;
}
} // namespace detail

inline std::string encode_model(const EpsilonModel& model) {
    ByteWriter w;
    w.raw("LCSM");
    w.u16(kVersion);
    w.i32(model.shape.h_minus);
    w.i32(model.shape.h_plus);
    w.i32(model.shape.c);
    w.f64(model.shape.tau);
    detail::put_cluster_model(w, model.gamma_minus);
    detail::put_cluster_model(w, model.gamma_plus);
    const auto& psi = model.psi;
    w.u32(static_cast<std::uint32_t>(psi.mapping.size()));
    for (auto s : psi.mapping) w.i32(s);
    w.u32(static_cast<std::uint32_t>(psi.n_states()));
    w.u32(static_cast<std::uint32_t>(psi.state_pmfs.cols()));
    for (auto c : psi.state_counts.data()) w.u64(c);
    for (double p : psi.state_pmfs.data()) w.f64(p);
    return std::move(w).finish();
}

inline EpsilonModel decode_model(std::string_view bytes) {
    ByteReader r(bytes, "LCSM");
    EpsilonModel m;
    m.shape.h_minus = r.i32();
    m.shape.h_plus = r.i32();
    m.shape.c = r.i32();
    m.shape.tau = r.f64();
    try {
        m.shape.validate();
    } catch (const ConfigError& e) {
        throw IoError(std::string("LCSM: ") + e.what());
    }
    m.gamma_minus = detail::get_cluster_model(r, m.shape);
    m.gamma_plus = detail::get_cluster_model(r, m.shape);
    const auto n_past = r.u32();
    if (static_cast<std::uint64_t>(n_past) * 4 > r.remaining()) throw IoError("LCSM: truncated psi map");
    m.psi.mapping.resize(n_past);
    for (auto& s : m.psi.mapping) s = r.i32();
    const auto S = r.u32(), nf = r.u32();
    if (static_cast<std::uint64_t>(S) * nf * 16 > r.remaining()) throw IoError("LCSM: truncated state PMFs");
    m.psi.state_counts = Array2D<std::uint64_t>(S, nf);
    for (auto& c : m.psi.state_counts.data()) c = r.u64();
    m.psi.state_pmfs = Matrix(S, nf);
    for (auto& p : m.psi.state_pmfs.data()) p = r.f64();
    r.expect_end();
    try {
        m.validate();
    } catch (const ConfigError& e) {
        throw IoError(std::string("LCSM: ") + e.what());
    }
    return m;
}

inline void save_model(const std::filesystem::path& path, const EpsilonModel& model) {
    write_file(path, encode_model(model));
}

inline EpsilonModel load_model(const std::filesystem::path& path) {
    try {
        return decode_model(read_file(path));
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

// ---- LCSR ----

inline std::string encode_rule(const SCARule& rule) {
    ByteWriter w;
    w.raw("LCSR");
    w.u16(kVersion);
    w.u32(static_cast<std::uint32_t>(rule.radius));
    w.u32(static_cast<std::uint32_t>(rule.n_states));
    w.u64(rule.table.size());
    for (const auto& [key, entry] : rule.table) {
        for (auto s : key) w.i32(s);
        w.u64(entry.total);
        for (double p : entry.pmf) w.f64(p);
    }
    return std::move(w).finish();
}

inline SCARule decode_rule(std::string_view bytes) {
    ByteReader r(bytes, "LCSR");
    SCARule rule;
    rule.radius = static_cast<int>(r.u32());
    rule.n_states = r.u32();
    if (rule.radius < 1 || rule.radius > 64) throw IoError("LCSR: bad radius");
    const auto entries = r.u64();
    const std::size_t width = static_cast<std::size_t>(2 * rule.radius + 1);
    const std::uint64_t record = width * 4 + 8 + rule.n_states * 8;
    if (entries > r.remaining() / record) throw IoError("LCSR: truncated rule table");
    for (std::uint64_t e = 0; e < entries; ++e) {
        Neighborhood key(width);
        for (auto& s : key) {
            s = r.i32();
            if (s < 0 || static_cast<std::size_t>(s) >= rule.n_states) throw IoError("LCSR: key label out of range");
        }
        RuleEntry entry;
        entry.total = r.u64();
        entry.pmf.resize(rule.n_states);
        entry.counts.resize(rule.n_states);
        for (std::size_t s = 0; s < rule.n_states; ++s) {
            entry.pmf[s] = r.f64();
            entry.counts[s] = static_cast<std::uint64_t>(std::llround(entry.pmf[s] * static_cast<double>(entry.total)));
        }
        rule.table.emplace(std::move(key), std::move(entry));
    }
    r.expect_end();
    return rule;
}

inline void save_rule(const std::filesystem::path& path, const SCARule& rule) {
    write_file(path, encode_rule(rule));
}

inline SCARule load_rule(const std::filesystem::path& path) {
    try {
        return decode_rule(read_file(path));
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

} // namespace lcs::io
