#include "yprov/prov_json.hpp"
#include "yprov/util.hpp"

#include <charconv>
#include <cmath>
#include <set>

namespace yprov {

using nlohmann::json;

namespace {

constexpr std::int64_t kMaxSafeInteger = std::int64_t{1} << 53;

constexpr std::string_view kRecordSections[] = {"entity", "activity", "agent"};

bool is_modeled_section(std::string_view key)
{
    if (key == "prefix") {
        return true;
    }
    for (const auto section : kRecordSections) {
        if (key == section) {
            return true;
        }
    }
    return relation_kind_from_string(key).has_value();
}

std::string_view section_name(RecordKind kind)
{
    return kRecordSections[static_cast<std::size_t>(kind)];
}

[[noreturn]] void schema_error(const std::string& message)
{
    fail(ErrorCode::SchemaError, message);
}

QualifiedName qualified_or_schema_error(const std::string& text, std::string_view where)
{
    try {
        return QualifiedName::parse(text);
    } catch (const Error& e) {
        schema_error(std::string(where) + ": " + e.what());
    }
}

std::string non_finite_text(double d)
{
    if (std::isnan(d)) {
        return "NaN";
    }
    return d > 0 ? "INF" : "-INF";
}

std::optional<double> non_finite_from_text(std::string_view text)
{
    if (text == "NaN") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (text == "INF") {
        return std::numeric_limits<double>::infinity();
    }
    if (text == "-INF") {
        return -std::numeric_limits<double>::infinity();
    }
    return std::nullopt;
}

std::optional<TimestampMs> time_from_json(const json& value, std::string_view where)
{
    const json* text = &value;
    if (value.is_object() && value.contains("$")) {
        text = &value["$"];
    }
    if (!text->is_string()) {
        schema_error(std::string(where) + " must be an xsd:dateTime string");
    }
    try {
        return parse_rfc3339(text->get<std::string>());
    } catch (const Error& e) {
        schema_error(std::string(where) + ": " + e.what());
    }
}

Attributes attributes_from_json(const json& object, std::string_view where,
                                const std::set<std::string_view>& skip_keys)
{
    if (!object.is_object()) {
        schema_error(std::string(where) + " must be a JSON object");
    }
    Attributes attrs;
    for (const auto& [key, value] : object.items()) {
        if (skip_keys.contains(key)) {
            continue;
        }
        try {
            attrs.emplace(key, attribute_from_json(value));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::SchemaError) {
                throw;
            }
            schema_error(std::string(where) + "." + key + ": " + e.what());
        }
    }
    return attrs;
}

json attributes_to_json(const Attributes& attrs)
{
    json out = json::object();
    for (const auto& [key, value] : attrs) {
        out[key] = attribute_to_json(value);
    }
    return out;
}

ParsedDocument parse_structure(std::string_view bytes)
{
    json root;
    try {
        root = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        fail(ErrorCode::MalformedJson, e.what());
    }
    if (!root.is_object()) {
        schema_error("top level must be a JSON object");
    }
    if (root.contains("bundle")) {
        schema_error("PROV-JSON bundles are not supported");
    }

    ParsedDocument parsed;
    auto& doc = parsed.document;

    if (root.contains("prefix")) {
        const auto& prefixes = root["prefix"];
        if (!prefixes.is_object()) {
            schema_error("prefix must be a JSON object");
        }
        for (const auto& [prefix, uri] : prefixes.items()) {
            if (!uri.is_string()) {
                schema_error("namespace URI for '" + prefix + "' must be a string");
            }
            try {
                doc.declare_prefix(prefix, uri.get<std::string>());
            } catch (const Error& e) {
                schema_error(e.what());
            }
        }
    }

    std::set<std::string> seen_ids;
    for (const auto kind : {RecordKind::Entity, RecordKind::Activity, RecordKind::Agent}) {
        const std::string section(section_name(kind));
        if (!root.contains(section)) {
            continue;
        }
        const auto& records = root[section];
        if (!records.is_object()) {
            schema_error(section + " must be a JSON object");
        }
        for (const auto& [id_text, body] : records.items()) {
            const auto where = section + "." + id_text;
            if (!seen_ids.insert(id_text).second) {
                schema_error("duplicate record id " + id_text);
            }
            ProvRecord record;
            record.id = qualified_or_schema_error(id_text, where);
            record.kind = kind;
            if (kind == RecordKind::Activity) {
                record.attributes = attributes_from_json(body, where, {"prov:startTime", "prov:endTime"});
                if (body.contains("prov:startTime")) {
                    record.start_time = time_from_json(body["prov:startTime"], where + ".prov:startTime");
                }
                if (body.contains("prov:endTime")) {
                    record.end_time = time_from_json(body["prov:endTime"], where + ".prov:endTime");
                }
            } else {
                record.attributes = attributes_from_json(body, where, {});
            }
            doc.insert_record_unchecked(std::move(record));
        }
    }

    for (const auto kind : kAllRelationKinds) {
        const std::string section(to_string(kind));
        if (!root.contains(section)) {
            continue;
        }
        const auto& relations = root[section];
        if (!relations.is_object()) {
            schema_error(section + " must be a JSON object");
        }
        const auto& rule = endpoint_rule(kind);
        for (const auto& [id_text, body] : relations.items()) {
            const auto where = section + "." + id_text;
            if (!body.is_object()) {
                schema_error(where + " must be a JSON object");
            }
            if (doc.find_relation(id_text)) {
                schema_error("duplicate relation id " + id_text);
            }
            auto role = [&](std::string_view key) {
                const auto it = body.find(std::string(key));
                if (it == body.end() || !it->is_string()) {
                    schema_error(where + " lacks role key " + std::string(key));
                }
                return qualified_or_schema_error(it->get<std::string>(), where);
            };
            Relation relation;
            relation.id = qualified_or_schema_error(id_text, where);
            relation.kind = kind;
            relation.subject = role(rule.subject_role);
            relation.object = role(rule.object_role);
            relation.attributes = attributes_from_json(body, where, {rule.subject_role, rule.object_role});
            doc.insert_relation_unchecked(std::move(relation));
        }
    }

    for (const auto& [key, value] : root.items()) {
        if (!is_modeled_section(key)) {
            parsed.extensions.emplace(key, value);
        }
    }
    return parsed;
}

std::string join_violations(const std::vector<Violation>& violations)
{
    std::string out;
    for (const auto& v : violations) {
        if (!out.empty()) {
            out += "; ";
        }
        out += std::string(to_string(v.kind)) + " " + v.subject + " (" + v.detail + ")";
    }
    return out;
}

}  // namespace

IntegrityError::IntegrityError(std::vector<Violation> violations) :
    Error(ErrorCode::IntegrityError, join_violations(violations)),
    violations_(std::move(violations))
{}

json attribute_to_json(const AttributeValue& value)
{
    const auto& datatype = value.datatype();
    auto typed = [&](json literal, std::string_view fallback_type = {}) -> json {
        if (datatype) {
            return json{{"$", std::move(literal)}, {"type", *datatype}};
        }
        if (!fallback_type.empty()) {
            return json{{"$", std::move(literal)}, {"type", std::string(fallback_type)}};
        }
        return literal;
    };
    return std::visit(
        [&](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::int64_t>) {
                if (v > kMaxSafeInteger || v < -kMaxSafeInteger) {
                    return typed(std::to_string(v), "xsd:long");
                }
                return typed(v);
            } else if constexpr (std::is_same_v<T, double>) {
                if (!std::isfinite(v)) {
                    return typed(non_finite_text(v), "xsd:double");
                }
                return typed(v);
            } else {
                return typed(v);
            }
        },
        value.value());
}

AttributeValue attribute_from_json(const json& value)
{
    auto scalar = [](const json& v) -> AttributeValue::Scalar {
        if (v.is_string()) {
            return v.get<std::string>();
        }
        if (v.is_boolean()) {
            return v.get<bool>();
        }
        if (v.is_number_unsigned()) {
            const auto u = v.get<std::uint64_t>();
            if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
                return static_cast<double>(u);
            }
            return static_cast<std::int64_t>(u);
        }
        if (v.is_number_integer()) {
            return v.get<std::int64_t>();
        }
        if (v.is_number_float()) {
            return v.get<double>();
        }
        schema_error("unsupported attribute value " + v.dump());
    };

    if (value.is_object()) {
        if (!value.contains("$")) {
            schema_error("typed literal lacks '$': " + value.dump());
        }
        if (value.contains("lang")) {
            schema_error("language-tagged strings are not supported: " + value.dump());
        }
        for (const auto& [key, _] : value.items()) {
            if (key != "$" && key != "type") {
                schema_error("unexpected key '" + key + "' in typed literal");
            }
        }
        std::optional<std::string> datatype;
        if (value.contains("type")) {
            if (!value["type"].is_string()) {
                schema_error("literal type must be a string: " + value.dump());
            }
            datatype = value["type"].get<std::string>();
        }
        const auto& literal = value["$"];
        if (datatype && literal.is_string()) {
            const auto text = literal.get<std::string>();
            if (*datatype == "xsd:double" || *datatype == "xsd:float") {
                if (const auto d = non_finite_from_text(text)) {
                    return AttributeValue(*d, datatype);
                }
            }
        }
        try {
            return AttributeValue(scalar(literal), std::move(datatype));
        } catch (const Error& e) {
            schema_error(e.what());
        }
    }
    return AttributeValue(scalar(value));
}

json to_json(const ProvDocument& doc, const ExtensionBucket& extensions)
{
    json root = json::object();
    root["prefix"] = json(doc.prefixes());

    for (const auto& record : doc.records()) {
        auto body = attributes_to_json(record.attributes);
        if (record.start_time) {
            body["prov:startTime"] = format_rfc3339(*record.start_time);
        }
        if (record.end_time) {
            body["prov:endTime"] = format_rfc3339(*record.end_time);
        }
        root[std::string(section_name(record.kind))][record.id.str()] = std::move(body);
    }
    for (const auto& relation : doc.relations()) {
        const auto& rule = endpoint_rule(relation.kind);
        auto body = attributes_to_json(relation.attributes);
        body[std::string(rule.subject_role)] = relation.subject.str();
        body[std::string(rule.object_role)] = relation.object.str();
        root[std::string(to_string(relation.kind))][relation.id.str()] = std::move(body);
    }
    for (const auto& [key, value] : extensions) {
        if (is_modeled_section(key) || key == "bundle") {
            fail(ErrorCode::InvalidArgument, "extension section '" + key + "' clashes with a modeled section");
        }
        root[key] = value;
    }
    return root;
}

namespace {

std::string canonical_double(double d)
{
    auto text = format_double(d);
    if (text.find_first_of(".e") != std::string::npos) {
        return text;
    }
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), d, std::chars_format::scientific);
    const std::string sci(buf, end);
    std::string digits;
    for (const char c : sci.substr(0, sci.find('e'))) {
        if (c >= '0' && c <= '9') {
            digits += c;
        }
    }
    const auto magnitude = text.substr(text[0] == '-' ? 1 : 0);
    if (magnitude.compare(0, digits.size(), digits) != 0 ||
        magnitude.find_first_not_of('0', digits.size()) != std::string::npos) {
        return sci;
    }
    return text + ".0";
}

void dump_canonical(const json& value, std::string& out)
{
    switch (value.type()) {
    case json::value_t::object: {
        out += '{';
        bool first = true;
        for (const auto& [key, item] : value.items()) {
            if (!first) {
                out += ',';
            }
            first = false;
            out += json(key).dump(-1, ' ', false, json::error_handler_t::strict);
            out += ':';
            dump_canonical(item, out);
        }
        out += '}';
        break;
    }
    case json::value_t::array: {
        out += '[';
        for (std::size_t i = 0; i < value.size(); ++i) {
            if (i != 0) {
                out += ',';
            }
            dump_canonical(value[i], out);
        }
        out += ']';
        break;
    }
    case json::value_t::number_float: {
        const double d = value.get<double>();
        if (!std::isfinite(d)) {
            out += "null";
            break;
        }
        out += canonical_double(d);
        break;
    }
    default:
        out += value.dump(-1, ' ', false, json::error_handler_t::strict);
    }
}

}  // namespace

std::string canonical_dump(const json& value)
{
    std::string out;
    dump_canonical(value, out);
    return out;
}

std::string serialize(const ProvDocument& doc, const ExtensionBucket& extensions)
{
    if (const auto violations = doc.validate(); !violations.empty()) {
        fail(ErrorCode::InvalidDocument, join_violations(violations));
    }
    return canonical_dump(to_json(doc, extensions)) + "\n";
}

ParsedDocument parse_unchecked(std::string_view bytes)
{
    return parse_structure(bytes);
}

ParsedDocument parse(std::string_view bytes)
{
    auto parsed = parse_structure(bytes);
    if (auto violations = parsed.document.validate(); !violations.empty()) {
        throw IntegrityError(std::move(violations));
    }
    return parsed;
}

std::string canonicalize(std::string_view bytes)
{
    try {
        return canonical_dump(json::parse(bytes.begin(), bytes.end())) + "\n";
    } catch (const json::parse_error& e) {
        fail(ErrorCode::MalformedJson, e.what());
    }
}

ParsedDocument load_document(const std::filesystem::path& path)
{
    return parse(read_file(path));
}

void save_document(const std::filesystem::path& path, const ProvDocument& doc, const ExtensionBucket& extensions)
{
    write_file_atomic(path, serialize(doc, extensions));
}

}  // namespace yprov
