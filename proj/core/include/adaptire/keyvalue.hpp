#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace adaptire {

/// Shortest decimal text that parses back to the identical double.
[[nodiscard]] std::string format_double(double value);

/// Strict parse of a full token; throws InvalidInput on trailing garbage.
[[nodiscard]] double parse_double(std::string_view text);

/// Flat `key = value` document with optional `[section]` headers. Keys inside a
/// section are addressed as `section.key`. `#` starts a comment.
class KeyValueDocument {
public:
    static KeyValueDocument parse(std::istream& in, std::string_view sourceName = "<stream>");
    static KeyValueDocument load(const std::string& path);

    void set(const std::string& key, std::string value);
    void set(const std::string& key, double value);

    [[nodiscard]] bool contains(const std::string& key) const;
    [[nodiscard]] const std::string& text(const std::string& key) const;
    [[nodiscard]] double number(const std::string& key) const;
    [[nodiscard]] double number_or(const std::string& key, double fallback) const;
    [[nodiscard]] bool boolean_or(const std::string& key, bool fallback) const;

    /// Keys in first-insertion order.
    [[nodiscard]] const std::vector<std::string>& keys() const { return order_; }

    /// Throws InvalidInput naming the first key not in `allowed`.
    void require_known(const std::vector<std::string>& allowed) const;

    /// Writes keys grouped by section prefix, in insertion order.
    void write(std::ostream& out) const;
    void save(const std::string& path) const;

private:
    std::map<std::string, std::string> values_;
    std::vector<std::string> order_;
    std::string source_;
};

}  // namespace adaptire
