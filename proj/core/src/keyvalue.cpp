#include "adaptire/keyvalue.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "adaptire/error.hpp"

namespace adaptire {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

std::string format_double(double value) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) {
        throw InvalidInput("cannot format double");
    }
    return std::string(buf.data(), ptr);
}

double parse_double(std::string_view text) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || text.empty()) {
        throw InvalidInput("not a number: '" + std::string(text) + "'");
    }
    return value;
}

KeyValueDocument KeyValueDocument::parse(std::istream& in, std::string_view sourceName) {
    KeyValueDocument doc;
    doc.source_ = std::string(sourceName);
    std::string section;
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) {
            view = view.substr(0, hash);
        }
        view = trim(view);
        if (view.empty()) {
            continue;
        }
        if (view.front() == '[') {
            if (view.back() != ']') {
                throw InvalidInput(doc.source_ + ":" + std::to_string(lineNo) + ": malformed section header");
            }
            section = std::string(trim(view.substr(1, view.size() - 2)));
            continue;
        }
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw InvalidInput(doc.source_ + ":" + std::to_string(lineNo) + ": expected 'key = value'");
        }
        const auto key = trim(view.substr(0, eq));
        const auto value = trim(view.substr(eq + 1));
        if (key.empty()) {
            throw InvalidInput(doc.source_ + ":" + std::to_string(lineNo) + ": empty key");
        }
        const std::string fullKey = section.empty() ? std::string(key) : section + "." + std::string(key);
        if (doc.contains(fullKey)) {
            throw InvalidInput(doc.source_ + ":" + std::to_string(lineNo) + ": duplicate key '" + fullKey + "'");
        }
        doc.set(fullKey, std::string(value));
    }
    return doc;
}

KeyValueDocument KeyValueDocument::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    return parse(in, path);
}

void KeyValueDocument::set(const std::string& key, std::string value) {
    if (!values_.contains(key)) {
        order_.push_back(key);
    }
    values_[key] = std::move(value);
}

void KeyValueDocument::set(const std::string& key, double value) { set(key, format_double(value)); }

bool KeyValueDocument::contains(const std::string& key) const { return values_.contains(key); }

const std::string& KeyValueDocument::text(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        throw InvalidInput(source_ + ": missing key '" + key + "'");
    }
    return it->second;
}

double KeyValueDocument::number(const std::string& key) const {
    try {
        return parse_double(text(key));
    } catch (const InvalidInput& e) {
        if (!contains(key)) {
            throw;
        }
        throw InvalidInput(source_ + ": key '" + key + "': " + e.what());
    }
}

double KeyValueDocument::number_or(const std::string& key, double fallback) const {
    return contains(key) ? number(key) : fallback;
}

bool KeyValueDocument::boolean_or(const std::string& key, bool fallback) const {
    if (!contains(key)) {
        return fallback;
    }
    const auto& v = text(key);
    if (v == "true" || v == "on" || v == "1" || v == "yes") {
        return true;
    }
    if (v == "false" || v == "off" || v == "0" || v == "no") {
        return false;
    }
    throw InvalidInput(source_ + ": key '" + key + "': expected a boolean, got '" + v + "'");
}

void KeyValueDocument::require_known(const std::vector<std::string>& allowed) const {
    for (const auto& key : order_) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw InvalidInput(source_ + ": unknown key '" + key + "'");
        }
    }
}

void KeyValueDocument::write(std::ostream& out) const {
    // Emit unsectioned keys first, then each section in order of first appearance.
    std::vector<std::string> sections;
    for (const auto& key : order_) {
        const auto dot = key.find('.');
        if (dot == std::string::npos) {
            out << key << " = " << values_.at(key) << '\n';
        } else if (const auto sec = key.substr(0, dot);
                   std::find(sections.begin(), sections.end(), sec) == sections.end()) {
            sections.push_back(sec);
        }
    }
    for (const auto& sec : sections) {
        out << '\n' << '[' << sec << "]\n";
        for (const auto& key : order_) {
            if (key.size() > sec.size() && key.compare(0, sec.size() + 1, sec + ".") == 0) {
                out << key.substr(sec.size() + 1) << " = " << values_.at(key) << '\n';
            }
        }
    }
}

void KeyValueDocument::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path);
    }
    write(out);
    if (!out) {
        throw IoError("write failed for " + path);
    }
}

}  // namespace adaptire
