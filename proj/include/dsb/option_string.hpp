#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dsb {

// Parsed form of strings like "dsb:init=32,max=unbounded" or "vanilla".
struct OptionString {
    std::string                                      name;
    std::vector<std::pair<std::string, std::string>> params;

    std::optional<std::string> get(std::string_view key) const;
    // Throws InvalidArgument if any parameter key is not in `allowed`.
    void require_only(std::initializer_list<std::string_view> allowed) const;

    int    get_int(std::string_view key, std::optional<int> fallback = std::nullopt) const;
    double get_double(std::string_view key, std::optional<double> fallback = std::nullopt) const;
};

OptionString parse_option_string(std::string_view text);

} // namespace dsb
