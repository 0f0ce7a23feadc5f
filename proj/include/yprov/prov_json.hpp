#pragma once

// Canonical PROV-JSON: keys sorted at every level, no insignificant whitespace,
// shortest round-trip doubles, one trailing newline.

#include "yprov/error.hpp"
#include "yprov/prov_document.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace yprov {

/// Unknown top-level PROV-JSON sections (e.g. `wasDerivedFrom`), kept verbatim.
using ExtensionBucket = std::map<std::string, nlohmann::json>;

class IntegrityError : public Error
{
public:
    explicit IntegrityError(std::vector<Violation> violations);

    [[nodiscard]] const std::vector<Violation>& violations() const noexcept { return violations_; }

private:
    std::vector<Violation> violations_;
};

struct ParsedDocument
{
    ProvDocument document;
    ExtensionBucket extensions;
};

/// Throws InvalidDocument when the document does not validate.
std::string serialize(const ProvDocument& doc, const ExtensionBucket& extensions = {});

/// The document as a JSON value (same layout as `serialize`).
nlohmann::json to_json(const ProvDocument& doc, const ExtensionBucket& extensions = {});

/// Throws MalformedJson, SchemaError, or IntegrityError.
ParsedDocument parse(std::string_view bytes);

/// Structural parse only; referential integrity is left for `ProvDocument::validate`.
ParsedDocument parse_unchecked(std::string_view bytes);

/// Re-renders arbitrary JSON text in canonical form.
std::string canonicalize(std::string_view bytes);

/// Canonical rendering of an in-memory JSON value (no trailing newline).
std::string canonical_dump(const nlohmann::json& value);

/// JSON encoding of a single attribute value (plain scalar or `{"$": v, "type": t}`).
nlohmann::json attribute_to_json(const AttributeValue& value);
AttributeValue attribute_from_json(const nlohmann::json& value);

ParsedDocument load_document(const std::filesystem::path& path);
void save_document(const std::filesystem::path& path, const ProvDocument& doc,
                   const ExtensionBucket& extensions = {});

}  // namespace yprov
