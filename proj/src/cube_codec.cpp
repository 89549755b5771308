#include "hairseg/formats.hpp"

#include <charconv>
#include <cstdio>

namespace hairseg {
namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        const std::size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

double parse_real(std::string_view token, std::size_t line_no) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw FormatError("cube line " + std::to_string(line_no) + ": '" + std::string(token) + "' is not a number");
    }
    return v;
}

Rgb parse_triple(const std::vector<std::string_view>& tokens, std::size_t first, std::size_t line_no) {
    if (tokens.size() != first + 3) {
        throw FormatError("cube line " + std::to_string(line_no) + ": expected 3 components");
    }
    Rgb out{};
    for (int c = 0; c < 3; ++c) out[c] = static_cast<float>(parse_real(tokens[first + c], line_no));
    return out;
}

} // namespace

Lut3d parse_cube(std::string_view text) {
    std::size_t n = 0;
    std::vector<Rgb> entries;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto eol = text.find('\n', pos);
        const auto raw = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto tokens = split_ws(line);
        const std::string_view key = tokens.front();

        if (key == "TITLE") continue;
        if (key == "LUT_3D_SIZE") {
            if (n != 0) throw FormatError("cube line " + std::to_string(line_no) + ": duplicate LUT_3D_SIZE");
            if (tokens.size() != 2) throw FormatError("cube line " + std::to_string(line_no) + ": malformed LUT_3D_SIZE");
            const double size = parse_real(tokens[1], line_no);
            if (size < 2 || size > 256 || size != static_cast<double>(static_cast<std::size_t>(size))) {
                throw FormatError("cube line " + std::to_string(line_no) + ": LUT_3D_SIZE must be an integer in [2, 256]");
            }
            n = static_cast<std::size_t>(size);
            entries.reserve(n * n * n);
            continue;
        }
        if (key == "DOMAIN_MIN" || key == "DOMAIN_MAX") {
            const Rgb d = parse_triple(tokens, 1, line_no);
            const float want = key == "DOMAIN_MIN" ? 0.0f : 1.0f;
            if (d[0] != want || d[1] != want || d[2] != want) {
                throw FormatError("cube line " + std::to_string(line_no) + ": only the unit domain is supported");
            }
            continue;
        }
        if (key == "LUT_1D_SIZE" || key == "LUT_3D_INPUT_RANGE" || key == "LUT_1D_INPUT_RANGE") {
            throw FormatError("cube line " + std::to_string(line_no) + ": unsupported keyword " + std::string(key));
        }
        if (n == 0) throw FormatError("cube line " + std::to_string(line_no) + ": data before LUT_3D_SIZE declaration");
        const Rgb e = parse_triple(tokens, 0, line_no);
        for (float v : e) {
            if (!(v >= 0.0f && v <= 1.0f)) {
                throw FormatError("cube line " + std::to_string(line_no) + ": component outside [0, 1]");
            }
        }
        entries.push_back(e);
    }
    if (n == 0) throw FormatError("cube file is missing the LUT_3D_SIZE declaration");
    if (entries.size() != n * n * n) {
        throw FormatError("cube file has " + std::to_string(entries.size()) + " data lines, expected " +
                          std::to_string(n * n * n));
    }
    return Lut3d(n, std::move(entries));
}

std::string write_cube(const Lut3d& lut, const std::string& title) {
    std::string out;
    if (!title.empty()) out += "TITLE \"" + title + "\"\n";
    out += "LUT_3D_SIZE " + std::to_string(lut.size()) + "\n";
    char line[64];
    for (const Rgb& e : lut.entries()) {
        std::snprintf(line, sizeof line, "%.6f %.6f %.6f\n", e[0], e[1], e[2]);
        out += line;
    }
    return out;
}

} // namespace hairseg
