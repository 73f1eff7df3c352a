#include <geocorr/errors.hpp>
#include <geocorr/format.hpp>

#include <array>
#include <charconv>
#include <cmath>

namespace geocorr {

std::string format_double(double value) {
    std::array<char, 64> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc()) return "nan";
    return std::string(buf.data(), end);
}

std::string_view trim(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\n\r");
    if (first == std::string_view::npos) return {};
    const auto last = text.find_last_not_of(" \t\n\r");
    return text.substr(first, last - first + 1);
}

double parse_double(std::string_view text, std::string_view what) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value))
        throw ParseError("invalid number '" + std::string(text) + "' for " + std::string(what));
    return value;
}

std::vector<double> parse_double_list(std::string_view text, std::string_view what) {
    std::vector<double> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = text.find(',', start);
        out.push_back(parse_double(text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                          : comma - start),
                                   what));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace geocorr
