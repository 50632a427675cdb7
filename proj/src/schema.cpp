#include "neuroevo/schema.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "neuroevo/schemas_embedded.hpp"

namespace neuroevo {

namespace {

using nlohmann::json;

const std::set<std::string, std::less<>> kKnownKeywords = {
    "$schema", "$id", "$defs", "$ref", "title", "description", "type", "enum", "const", "properties",
    "required", "additionalProperties", "items", "minItems", "maxItems", "minimum", "maximum"};

void check_keywords(const json& schema, const std::string& where) {
    if (!schema.is_object()) {
        return;
    }
    for (const auto& [key, value] : schema.items()) {
        if (!kKnownKeywords.contains(key)) {
            throw std::invalid_argument("schema keyword '" + key + "' at " + where + " is not supported");
        }
        if (key == "properties" || key == "$defs") {
            for (const auto& [name, sub] : value.items()) {
                check_keywords(sub, where + "/" + key + "/" + name);
            }
        } else if (key == "items" || key == "additionalProperties") {
            check_keywords(value, where + "/" + key);
        }
    }
}

bool is_integer(const json& v) {
    if (v.is_number_integer()) {
        return true;
    }
    if (v.is_number_float()) {
        const double d = v.get<double>();
        return std::isfinite(d) && std::floor(d) == d;
    }
    return false;
}

bool has_type(const json& v, std::string_view type) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "boolean") return v.is_boolean();
    if (type == "null") return v.is_null();
    if (type == "number") return v.is_number();
    if (type == "integer") return is_integer(v);
    return false;
}

std::string escape_pointer(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~') {
            out += "~0";
        } else if (c == '/') {
            out += "~1";
        } else {
            out += c;
        }
    }
    return out;
}

} // namespace

void SchemaValidator::add_schema(json schema) {
    if (!schema.is_object() || !schema.contains("$id") || !schema["$id"].is_string()) {
        throw std::invalid_argument("schema must be an object with a string $id");
    }
    const auto id = schema["$id"].get<std::string>();
    check_keywords(schema, id);
    schemas_[id] = std::move(schema);
}

std::pair<const json*, const json*> SchemaValidator::resolve(const std::string& ref, const json& root) const {
    const auto hash = ref.find('#');
    const std::string doc = ref.substr(0, hash);
    const std::string pointer = hash == std::string::npos ? "" : ref.substr(hash + 1);
    const json* target_root = &root;
    if (!doc.empty()) {
        auto it = schemas_.find(doc);
        if (it == schemas_.end()) {
            throw std::invalid_argument("unresolved schema reference " + ref);
        }
        target_root = &it->second;
    }
    const json* target = &target_root->at(json::json_pointer(pointer));
    return {target, target_root};
}

std::optional<SchemaIssue> SchemaValidator::validate(const json& document, std::string_view schema_id) const {
    auto it = schemas_.find(schema_id);
    if (it == schemas_.end()) {
        throw std::invalid_argument("unknown schema " + std::string(schema_id));
    }
    return check(document, it->second, it->second, "");
}

std::optional<SchemaIssue> SchemaValidator::check(const json& value, const json& schema, const json& root,
                                                  const std::string& path) const {
    if (schema.is_boolean()) {
        if (!schema.get<bool>()) {
            return SchemaIssue{path, "value not allowed here"};
        }
        return std::nullopt;
    }
    if (auto ref = schema.find("$ref"); ref != schema.end()) {
        const auto [target, target_root] = resolve(ref->get<std::string>(), root);
        if (auto issue = check(value, *target, *target_root, path)) {
            return issue;
        }
    }
    if (auto type = schema.find("type"); type != schema.end()) {
        bool ok = false;
        if (type->is_array()) {
            for (const auto& t : *type) {
                ok = ok || has_type(value, t.get<std::string>());
            }
        } else {
            ok = has_type(value, type->get<std::string>());
        }
        if (!ok) {
            return SchemaIssue{path, "expected type " + type->dump() + ", got " + value.type_name()};
        }
    }
    if (auto c = schema.find("const"); c != schema.end() && value != *c) {
        return SchemaIssue{path, "expected " + c->dump() + ", got " + value.dump()};
    }
    if (auto e = schema.find("enum"); e != schema.end()) {
        bool found = false;
        for (const auto& option : *e) {
            found = found || value == option;
        }
        if (!found) {
            return SchemaIssue{path, "value " + value.dump() + " not one of " + e->dump()};
        }
    }
    if (value.is_number()) {
        const double v = value.get<double>();
        if (auto m = schema.find("minimum"); m != schema.end() && v < m->get<double>()) {
            return SchemaIssue{path, "value " + value.dump() + " below minimum " + m->dump()};
        }
        if (auto m = schema.find("maximum"); m != schema.end() && v > m->get<double>()) {
            return SchemaIssue{path, "value " + value.dump() + " above maximum " + m->dump()};
        }
    }
    if (value.is_object()) {
        if (auto req = schema.find("required"); req != schema.end()) {
            for (const auto& name : *req) {
                if (!value.contains(name.get<std::string>())) {
                    return SchemaIssue{path + "/" + escape_pointer(name.get<std::string>()),
                                       "missing required field '" + name.get<std::string>() + "'"};
                }
            }
        }
        const auto props = schema.find("properties");
        const auto additional = schema.find("additionalProperties");
        for (const auto& [key, member] : value.items()) {
            const std::string member_path = path + "/" + escape_pointer(key);
            if (props != schema.end() && props->contains(key)) {
                if (auto issue = check(member, (*props)[key], root, member_path)) {
                    return issue;
                }
            } else if (additional != schema.end()) {
                if (additional->is_boolean() && !additional->get<bool>()) {
                    return SchemaIssue{member_path, "unexpected field '" + key + "'"};
                }
                if (auto issue = check(member, *additional, root, member_path)) {
                    return issue;
                }
            }
        }
    }
    if (value.is_array()) {
        if (auto m = schema.find("minItems"); m != schema.end() && value.size() < m->get<std::size_t>()) {
            return SchemaIssue{path, "expected at least " + m->dump() + " items"};
        }
        if (auto m = schema.find("maxItems"); m != schema.end() && value.size() > m->get<std::size_t>()) {
            return SchemaIssue{path, "expected at most " + m->dump() + " items"};
        }
        if (auto items = schema.find("items"); items != schema.end()) {
            for (std::size_t i = 0; i < value.size(); ++i) {
                if (auto issue = check(value[i], *items, root, path + "/" + std::to_string(i))) {
                    return issue;
                }
            }
        }
    }
    return std::nullopt;
}

std::string_view genome_schema_text() {
    return schemas::kGenome;
}

std::string_view history_schema_text() {
    return schemas::kHistory;
}

const SchemaValidator& published_schemas() {
    static const SchemaValidator validator = [] {
        SchemaValidator v;
        v.add_schema(json::parse(schemas::kGenome));
        v.add_schema(json::parse(schemas::kHistory));
        return v;
    }();
    return validator;
}

} // namespace neuroevo
