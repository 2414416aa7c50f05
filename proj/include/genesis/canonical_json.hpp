#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace genesis {

/// Object keys are kept in a std::map, so every dump is sorted lexicographically.
using Json = nlohmann::json;

/// Multi-line canonical form: two-space indent, sorted keys, UTF-8, LF, trailing newline.
std::string to_document(const Json& value);

/// Single-line canonical form used for log records and CLI output.
std::string to_line(const Json& value);

/// Throws ParseError carrying the byte offset of the failure.
Json parse_json(std::string_view text);

/// Strict reader over one JSON object: typed field access plus rejection of
/// unknown keys in `finish()`. All failures raise SchemaError naming the field.
class FieldReader {
public:
    FieldReader(const Json& object, std::string where);

    std::string string(const std::string& key);
    std::string non_empty_string(const std::string& key);
    std::optional<std::string> optional_string(const std::string& key);
    double number(const std::string& key);
    std::int64_t integer(const std::string& key);
    std::optional<std::int64_t> optional_integer(const std::string& key);
    const Json& array(const std::string& key);
    /// Returns nullptr when the key is absent.
    const Json* optional_array(const std::string& key);
    const Json& object(const std::string& key);
    std::vector<std::string> string_list(const std::string& key);
    std::vector<std::string> optional_string_list(const std::string& key);

    bool has(const std::string& key) const;
    void finish() const;

private:
    const Json& require(const std::string& key);
    [[noreturn]] void fail(const std::string& key, const std::string& what) const;

    const Json& object_;
    std::string where_;
    std::set<std::string> seen_;
};

/// Decodes an array of strings; `where` names the field for error messages.
std::vector<std::string> string_list_from(const Json& array, const std::string& where);

}  // namespace genesis
