#pragma once

// Private helpers for reading JSON records with line/field-aware errors.

#include <cstdint>
#include <string>
#include <string_view>

#include "avdn/dataset.hpp"
#include "avdn/errors.hpp"
#include "json.hpp"

namespace avdn::detail {

using json = nlohmann::ordered_json;

class Fields {
public:
    Fields(const json& value, std::size_t line, std::string path = "")
        : value_(&value), line_(line), path_(std::move(path)) {}

    const json& value() const { return *value_; }
    std::string location() const { return "line " + std::to_string(line_); }

    bool has(std::string_view key) const { return value_->is_object() && value_->contains(key); }

    [[noreturn]] void fail(std::string_view field, std::string_view message) const {
        throw FormatError(location() + ": field '" + qualified(field) + "': " + std::string(message));
    }

    std::string string(std::string_view key) const {
        const json& v = get(key);
        if (!v.is_string()) fail(key, "expected a string");
        return v.get<std::string>();
    }

    double number(std::string_view key) const {
        const json& v = get(key);
        if (!v.is_number()) fail(key, "expected a number");
        return v.get<double>();
    }

    std::int64_t integer(std::string_view key) const {
        const json& v = get(key);
        if (!v.is_number_integer()) fail(key, "expected an integer");
        return v.get<std::int64_t>();
    }

    std::uint64_t uint64(std::string_view key) const {
        const json& v = get(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            fail(key, "expected an unsigned integer");
        }
        return v.get<std::uint64_t>();
    }

    bool boolean(std::string_view key) const {
        const json& v = get(key);
        if (!v.is_boolean()) fail(key, "expected a boolean");
        return v.get<bool>();
    }

    Fields object(std::string_view key) const {
        const json& v = get(key);
        if (!v.is_object()) fail(key, "expected an object");
        return Fields(v, line_, qualified(key));
    }

    Fields array(std::string_view key) const {
        const json& v = get(key);
        if (!v.is_array()) fail(key, "expected an array");
        return Fields(v, line_, qualified(key));
    }

    std::size_t size() const { return value_->size(); }

    Fields element(std::size_t i) const { return Fields(value_->at(i), line_, path_ + "[" + std::to_string(i) + "]"); }

    double as_number() const {
        if (!value_->is_number()) throw FormatError(location() + ": field '" + path_ + "': expected a number");
        return value_->get<double>();
    }

private:
    std::string qualified(std::string_view field) const {
        return path_.empty() ? std::string(field) : path_ + "." + std::string(field);
    }

    const json& get(std::string_view key) const {
        if (!value_->is_object()) throw FormatError(location() + ": expected an object at '" + path_ + "'");
        const auto it = value_->find(key);
        if (it == value_->end()) {
            throw FormatError(location() + ": missing field '" + qualified(key) + "'");
        }
        return *it;
    }

    const json* value_;
    std::size_t line_;
    std::string path_;
};

inline json parse_line(std::string_view text, std::size_t line) {
    try {
        json v = json::parse(text);
        if (!v.is_object()) throw FormatError("line " + std::to_string(line) + ": record is not a JSON object");
        return v;
    } catch (const json::parse_error& e) {
        throw FormatError("line " + std::to_string(line) + ": invalid JSON: " + e.what());
    }
}

json view_to_json(const ViewArea& v);
ViewArea view_from_json(const Fields& f);
json trajectory_to_json(const Trajectory& t);
Trajectory parse_trajectory(const Fields& f);
json episode_to_json_value(const Episode& ep);
Episode episode_from_json_value(const json& value, std::size_t line_number);

}  // namespace avdn::detail
