#include "genesis/canonical_json.hpp"

#include "genesis/error.hpp"

namespace genesis {

std::string to_document(const Json& value) {
    return value.dump(2, ' ', false, Json::error_handler_t::replace) + "\n";
}

std::string to_line(const Json& value) {
    return value.dump(-1, ' ', false, Json::error_handler_t::replace);
}

Json parse_json(std::string_view text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        // nlohmann reports the 1-based index of the offending byte
        std::size_t pos = e.byte == 0 ? 0 : e.byte - 1;
        throw ParseError(e.what(), pos);
    }
}

FieldReader::FieldReader(const Json& object, std::string where)
    : object_(object), where_(std::move(where)) {
    if (!object_.is_object()) {
        throw SchemaError(where_ + ": expected an object");
    }
}

void FieldReader::fail(const std::string& key, const std::string& what) const {
    throw SchemaError(where_ + "." + key + ": " + what);
}

const Json& FieldReader::require(const std::string& key) {
    auto it = object_.find(key);
    if (it == object_.end()) {
        fail(key, "missing required field");
    }
    seen_.insert(key);
    return *it;
}

bool FieldReader::has(const std::string& key) const { return object_.contains(key); }

std::string FieldReader::string(const std::string& key) {
    const Json& v = require(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
}

std::string FieldReader::non_empty_string(const std::string& key) {
    std::string s = string(key);
    if (s.empty()) fail(key, "must not be empty");
    return s;
}

std::optional<std::string> FieldReader::optional_string(const std::string& key) {
    if (!has(key) || object_.at(key).is_null()) {
        seen_.insert(key);
        return std::nullopt;
    }
    return string(key);
}

double FieldReader::number(const std::string& key) {
    const Json& v = require(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
}

std::int64_t FieldReader::integer(const std::string& key) {
    const Json& v = require(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<std::int64_t>();
}

std::optional<std::int64_t> FieldReader::optional_integer(const std::string& key) {
    if (!has(key) || object_.at(key).is_null()) {
        seen_.insert(key);
        return std::nullopt;
    }
    return integer(key);
}

const Json& FieldReader::array(const std::string& key) {
    const Json& v = require(key);
    if (!v.is_array()) fail(key, "expected an array");
    return v;
}

const Json* FieldReader::optional_array(const std::string& key) {
    if (!has(key)) return nullptr;
    return &array(key);
}

const Json& FieldReader::object(const std::string& key) {
    const Json& v = require(key);
    if (!v.is_object()) fail(key, "expected an object");
    return v;
}

std::vector<std::string> FieldReader::string_list(const std::string& key) {
    return string_list_from(array(key), where_ + "." + key);
}

std::vector<std::string> FieldReader::optional_string_list(const std::string& key) {
    const Json* a = optional_array(key);
    if (a == nullptr) return {};
    return string_list_from(*a, where_ + "." + key);
}

void FieldReader::finish() const {
    for (const auto& [key, _] : object_.items()) {
        if (!seen_.contains(key)) {
            throw SchemaError(where_ + ": unknown field \"" + key + "\"");
        }
    }
}

std::vector<std::string> string_list_from(const Json& array, const std::string& where) {
    if (!array.is_array()) throw SchemaError(where + ": expected an array");
    std::vector<std::string> out;
    out.reserve(array.size());
    for (std::size_t i = 0; i < array.size(); ++i) {
        if (!array[i].is_string()) {
            throw SchemaError(where + "[" + std::to_string(i) + "]: expected a string");
        }
        out.push_back(array[i].get<std::string>());
    }
    return out;
}

}  // namespace genesis
