#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace neuroevo {

struct SchemaIssue {
    std::string path;  // JSON pointer into the validated document
    std::string message;
};

// Validator for the JSON Schema subset used by the published schemas:
// type, enum, const, properties, required, additionalProperties, items,
// minItems, maxItems, minimum, maximum and $ref (local pointers or other
// registered schemas by $id). Any other assertion keyword is rejected when
// the schema is registered.
class SchemaValidator {
public:
    void add_schema(nlohmann::json schema);

    // First violation found, in document order; nullopt when valid.
    std::optional<SchemaIssue> validate(const nlohmann::json& document, std::string_view schema_id) const;

private:
    std::optional<SchemaIssue> check(const nlohmann::json& value, const nlohmann::json& schema,
                                     const nlohmann::json& root, const std::string& path) const;
    std::pair<const nlohmann::json*, const nlohmann::json*> resolve(const std::string& ref,
                                                                    const nlohmann::json& root) const;

    std::map<std::string, nlohmann::json, std::less<>> schemas_;
};

inline constexpr std::string_view kGenomeSchemaId = "urn:neuroevo:schema:genome";
inline constexpr std::string_view kHistorySchemaId = "urn:neuroevo:schema:history";

// Validator preloaded with the genome and history schemas shipped in
// schemas/.
const SchemaValidator& published_schemas();
std::string_view genome_schema_text();
std::string_view history_schema_text();

} // namespace neuroevo
