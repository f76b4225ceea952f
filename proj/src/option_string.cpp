#include "dsb/option_string.hpp"

#include "dsb/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>

namespace dsb {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    return s;
}

} // namespace

OptionString parse_option_string(std::string_view text) {
    text = trim(text);
    OptionString out;
    const auto colon = text.find(':');
    out.name         = std::string(trim(text.substr(0, colon)));
    if (out.name.empty()) {
        throw InvalidArgument("empty option string");
    }
    if (colon == std::string_view::npos) {
        return out;
    }
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
        const auto       comma = rest.find(',');
        std::string_view item  = trim(rest.substr(0, comma));
        rest                   = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        const auto eq          = item.find('=');
        if (item.empty() || eq == std::string_view::npos || eq == 0) {
            throw InvalidArgument("malformed parameter '" + std::string(item) + "' in '" + std::string(text) + "'");
        }
        out.params.emplace_back(std::string(trim(item.substr(0, eq))), std::string(trim(item.substr(eq + 1))));
    }
    return out;
}

std::optional<std::string> OptionString::get(std::string_view key) const {
    for (const auto & [k, v] : params) {
        if (k == key) {
            return v;
        }
    }
    return std::nullopt;
}

void OptionString::require_only(std::initializer_list<std::string_view> allowed) const {
    for (const auto & [k, v] : params) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
            throw InvalidArgument("unknown parameter '" + k + "' for '" + name + "'");
        }
    }
}

int OptionString::get_int(std::string_view key, std::optional<int> fallback) const {
    const auto v = get(key);
    if (!v) {
        if (fallback) {
            return *fallback;
        }
        throw InvalidArgument("missing parameter '" + std::string(key) + "' for '" + name + "'");
    }
    int value         = 0;
    const auto * last = v->data() + v->size();
    auto [ptr, ec]    = std::from_chars(v->data(), last, value);
    if (ec != std::errc{} || ptr != last) {
        throw InvalidArgument("parameter '" + std::string(key) + "' is not an integer: '" + *v + "'");
    }
    return value;
}

double OptionString::get_double(std::string_view key, std::optional<double> fallback) const {
    const auto v = get(key);
    if (!v) {
        if (fallback) {
            return *fallback;
        }
        throw InvalidArgument("missing parameter '" + std::string(key) + "' for '" + name + "'");
    }
    char *       end   = nullptr;
    const double value = std::strtod(v->c_str(), &end);
    if (v->empty() || end != v->c_str() + v->size()) {
        throw InvalidArgument("parameter '" + std::string(key) + "' is not a number: '" + *v + "'");
    }
    return value;
}

} // namespace dsb
