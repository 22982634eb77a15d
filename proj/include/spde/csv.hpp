#pragma once

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <type_traits>

namespace spde {

/// Shortest decimal string that parses back to exactly `x`; "nan"/"inf" for
/// non-finite values.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

/// Writes LF-terminated rows; fields are written verbatim.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    template <typename... Fields>
    void row(const Fields&... fields) {
        bool first = true;
        ((write_field(fields, first)), ...);
        out_ << '\n';
    }

private:
    template <typename T>
    void write_field(const T& value, bool& first) {
        if (!first) out_ << ',';
        first = false;
        if constexpr (std::is_floating_point_v<T>) {
            out_ << format_double(static_cast<double>(value));
        } else {
            out_ << value;
        }
    }

    std::ostream& out_;
};

}  // namespace spde
