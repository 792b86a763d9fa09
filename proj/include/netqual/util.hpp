#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace netqual {

// Canonical float formatting: 12 significant digits, no locale, no trailing
// noise.  Every file the toolkit writes goes through this so that repeated
// runs are byte-identical.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// Round to 12 significant digits (the value whose shortest decimal form is
// what format_double prints).  Applied before numbers enter JSON documents.
inline double round_sig12(double v) {
    if (!std::isfinite(v)) return v;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::strtod(buf, nullptr);
}

inline std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(std::string_view s, char delim) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = s.find(delim, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    const std::string t = trim(s);
    if (t.empty()) return std::nullopt;
    double v{};
    const char* first = t.data();
    const char* last = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    return v;
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
    const std::string t = trim(s);
    if (t.empty()) return std::nullopt;
    std::int64_t v{};
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size()) return std::nullopt;
    return v;
}

// Run fn(chunk_index, begin, end) over [0, n) split into contiguous chunks.
// Scheduling primitive only: callers that need results invariant under the
// thread count must write per-item (or fixed-size-batch) outputs into
// preallocated slots and reduce them in item order afterwards, because chunk
// boundaries move with the worker count.
template <typename Fn>
void parallel_chunks(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
        if (n > 0) fn(0, std::size_t{0}, n);
        return;
    }
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t base = n / workers, extra = n % workers;
    std::size_t begin = 0;
    for (unsigned c = 0; c < workers; ++c) {
        const std::size_t len = base + (c < extra ? 1 : 0);
        const std::size_t end = begin + len;
        pool.emplace_back([&fn, c, begin, end] { fn(c, begin, end); });
        begin = end;
    }
    for (auto& t : pool) t.join();
}

inline unsigned num_chunks(std::size_t n, unsigned threads) {
    if (threads <= 1 || n <= 1) return n > 0 ? 1u : 0u;
    return static_cast<unsigned>(std::min<std::size_t>(threads, n));
}

} // namespace netqual
