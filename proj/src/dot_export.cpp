#include "yprov/graph_tools.hpp"

#include "yprov/error.hpp"

#include <algorithm>

namespace yprov {

namespace {

constexpr std::size_t kLabelAttributes = 3;

std::string escape(std::string_view text)
{
    std::string out;
    out.reserve(text.size() + 2);
    for (const char c : text) {
        switch (c) {
        case '"':
            out += "\\\"";
            break;
        case '\\':
            out += "\\\\";
            break;
        case '\n':
            out += "\\n";
            break;
        case '\r':
            break;
        default:
            out.push_back(c);
        }
    }
    return out;
}

std::string_view shape(RecordKind kind)
{
    switch (kind) {
    case RecordKind::Entity:
        return "ellipse";
    case RecordKind::Activity:
        return "box";
    case RecordKind::Agent:
        return "house";
    }
    return "ellipse";
}

}  // namespace

DotGraph to_dot(const ProvDocument& doc)
{
    if (const auto violations = doc.validate(); !violations.empty()) {
        fail(ErrorCode::InvalidDocument, std::to_string(violations.size()) + " violation(s), first: "
                                             + violations.front().subject + " " + violations.front().detail);
    }

    std::vector<const ProvRecord*> records;
    for (const auto& record : doc.records()) {
        records.push_back(&record);
    }
    std::sort(records.begin(), records.end(), [](const ProvRecord* a, const ProvRecord* b) {
        return a->id.str() < b->id.str();
    });

    std::vector<const Relation*> relations;
    for (const auto& relation : doc.relations()) {
        relations.push_back(&relation);
    }
    std::sort(relations.begin(), relations.end(), [](const Relation* a, const Relation* b) {
        return natural_less(a->id.str(), b->id.str());
    });

    std::string out = "digraph prov {\n";
    for (const auto* record : records) {
        const auto id = record->id.str();
        std::string label = escape(id);
        std::size_t shown = 0;
        for (const auto& [key, value] : record->attributes) {
            if (shown++ == kLabelAttributes) {
                break;
            }
            label += "\\n" + escape(key + "=" + value.display());
        }
        out += "  \"" + escape(id) + "\" [shape=" + std::string(shape(record->kind)) + ", label=\"" + label + "\"];\n";
    }
    for (const auto* relation : relations) {
        out += "  \"" + escape(relation->subject.str()) + "\" -> \"" + escape(relation->object.str())
               + "\" [label=\"" + std::string(to_string(relation->kind)) + "\"];\n";
    }
    out += "}\n";
    return DotGraph{std::move(out)};
}

}  // namespace yprov
