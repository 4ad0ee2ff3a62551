#include "oscidecay/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "oscidecay/error.hpp"

namespace oscidecay {

std::string format_double(double x) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc{}) {
        throw Error("failed to format double");
    }
    return std::string(buf.data(), end);
}

double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw ValidationError("not a number: '" + std::string(s) + "'");
    }
    return x;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r') {
        out.back().pop_back();
    }
    return out;
}

std::vector<double> parse_number_list(std::string_view s) {
    std::vector<double> out;
    for (const auto& cell : split_csv_line(s)) {
        out.push_back(parse_double(cell));
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw Error("cannot open '" + path + "' for writing");
    }
    os << contents;
    if (!os) {
        throw Error("failed writing '" + path + "'");
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw ValidationError("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace oscidecay
