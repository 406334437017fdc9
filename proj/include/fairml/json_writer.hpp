#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace fairml {

// Fixed 6-decimal rendering used for every metric the report emits; keeps
// report bytes stable across runs and platforms.
inline std::string fixed6(double v) {
    if (std::isnan(v) || std::isinf(v)) return "null";
    if (v == 0.0) v = 0.0; // collapse -0
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// Minimal JSON emitter with caller-controlled key order. nlohmann cannot pin
// number formatting, which the canonical report needs.
class JsonWriter {
public:
    std::string take() && { return std::move(out_); }

    void begin_object() { open('{'); }
    void end_object() { close('}'); }
    void begin_array() { open('['); }
    void end_array() { close(']'); }

    void key(const std::string& k) {
        comma();
        out_ += quote(k);
        out_ += ": ";
        pending_value_ = true;
    }

    void string(const std::string& v) { emit(quote(v)); }
    void boolean(bool v) { emit(v ? "true" : "false"); }
    void integer(long long v) { emit(std::to_string(v)); }
    void metric(double v) { emit(fixed6(v)); }
    void null() { emit("null"); }
    void raw(const std::string& fragment) { emit(fragment); }

    static std::string quote(const std::string& s) {
        std::string q = "\"";
        for (char c : s) {
            switch (c) {
                case '"': q += "\\\""; break;
                case '\\': q += "\\\\"; break;
                case '\n': q += "\\n"; break;
                case '\r': q += "\\r"; break;
                case '\t': q += "\\t"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                        q += buf;
                    } else {
                        q += c;
                    }
            }
        }
        q += '"';
        return q;
    }

private:
    void open(char c) {
        if (!pending_value_) comma();
        pending_value_ = false;
        out_ += c;
        depth_.push_back(false);
    }

    void close(char c) {
        bool had_items = depth_.back();
        depth_.pop_back();
        if (had_items) {
            out_ += '\n';
            indent();
        }
        out_ += c;
        if (!depth_.empty()) depth_.back() = true;
    }

    void comma() {
        if (depth_.empty()) return;
        if (depth_.back()) out_ += ',';
        out_ += '\n';
        depth_.back() = true;
        indent();
    }

    void emit(const std::string& v) {
        if (!pending_value_) comma();
        pending_value_ = false;
        out_ += v;
        if (!depth_.empty()) depth_.back() = true;
    }

    void indent() { out_.append(depth_.size() * 2, ' '); }

    std::string out_;
    std::vector<bool> depth_;
    bool pending_value_ = false;
};

} // namespace fairml
