#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "srtk/core.hpp"

namespace srtk::report {

// Doubles are printed with 17 significant digits so a parsed report
// reproduces every f64 bit-exactly.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Minimal JSON document with insertion-ordered object keys, so identical
// inputs serialize to identical bytes.
class Value {
public:
    using Array = std::vector<Value>;
    using Object = std::vector<std::pair<std::string, Value>>;

    Value() : v_(nullptr) {}
    Value(std::nullptr_t) : v_(nullptr) {}
    Value(bool b) : v_(b) {}
    Value(int i) : v_(static_cast<std::int64_t>(i)) {}
    Value(std::int64_t i) : v_(i) {}
    Value(std::uint64_t i) : v_(static_cast<std::int64_t>(i)) {}
    Value(double d) {
        if (std::isfinite(d))
            v_ = d;
        else
            v_ = std::string(d > 0 ? "inf" : (d < 0 ? "-inf" : "nan"));
    }
    Value(const char* s) : v_(std::string(s)) {}
    Value(std::string s) : v_(std::move(s)) {}

    static Value object() {
        Value v;
        v.v_ = Object{};
        return v;
    }
    static Value array() {
        Value v;
        v.v_ = Array{};
        return v;
    }

    bool is_object() const { return std::holds_alternative<Object>(v_); }
    bool is_array() const { return std::holds_alternative<Array>(v_); }

    // insert-or-fetch on objects, preserving insertion order
    Value& operator[](const std::string& key) {
        if (!is_object()) v_ = Object{};
        auto& obj = std::get<Object>(v_);
        for (auto& [k, val] : obj)
            if (k == key) return val;
        obj.emplace_back(key, Value());
        return obj.back().second;
    }

    void push_back(Value v) {
        if (!is_array()) v_ = Array{};
        std::get<Array>(v_).push_back(std::move(v));
    }

    std::string dump(int indent = 2) const {
        std::string out;
        dump_to(out, indent, 0);
        out.push_back('\n');
        return out;
    }

private:
    std::variant<std::nullptr_t, bool, std::int64_t, double, std::string, Array,
                 Object>
        v_;

    static void append_escaped(std::string& out, const std::string& s) {
        out.push_back('"');
        for (char c : s) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\r': out += "\\r"; break;
                case '\t': out += "\\t"; break;
                case '\b': out += "\\b"; break;
                case '\f': out += "\\f"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                        out += buf;
                    } else {
                        out.push_back(c);
                    }
            }
        }
        out.push_back('"');
    }

    void dump_to(std::string& out, int indent, int depth) const {
        const std::string pad(static_cast<std::size_t>(indent) * depth, ' ');
        const std::string pad_in(static_cast<std::size_t>(indent) * (depth + 1), ' ');
        if (std::holds_alternative<std::nullptr_t>(v_)) {
            out += "null";
        } else if (std::holds_alternative<bool>(v_)) {
            out += std::get<bool>(v_) ? "true" : "false";
        } else if (std::holds_alternative<std::int64_t>(v_)) {
            out += std::to_string(std::get<std::int64_t>(v_));
        } else if (std::holds_alternative<double>(v_)) {
            out += format_double(std::get<double>(v_));
        } else if (std::holds_alternative<std::string>(v_)) {
            append_escaped(out, std::get<std::string>(v_));
        } else if (std::holds_alternative<Array>(v_)) {
            const auto& arr = std::get<Array>(v_);
            if (arr.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < arr.size(); ++i) {
                out += pad_in;
                arr[i].dump_to(out, indent, depth + 1);
                if (i + 1 < arr.size()) out.push_back(',');
                out.push_back('\n');
            }
            out += pad + "]";
        } else {
            const auto& obj = std::get<Object>(v_);
            if (obj.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            for (std::size_t i = 0; i < obj.size(); ++i) {
                out += pad_in;
                append_escaped(out, obj[i].first);
                out += ": ";
                obj[i].second.dump_to(out, indent, depth + 1);
                if (i + 1 < obj.size()) out.push_back(',');
                out.push_back('\n');
            }
            out += pad + "}";
        }
    }
};

}  // namespace srtk::report
