#include "yprov/graph_tools.hpp"

#include "yprov/error.hpp"
#include "yprov/tracker.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace yprov {

namespace {

std::set<std::string> experiment_ids(const ProvDocument& doc)
{
    std::set<std::string> ids;
    for (const auto& record : doc.records()) {
        if (record.kind == RecordKind::Entity && record.id.prefix() == "yprov4ml"
            && record.id.local().starts_with("experiment/") && prov_type(record) == "prov:Collection") {
            ids.insert(record.id.str());
        }
    }
    return ids;
}

std::vector<std::string> resolve_labels(std::size_t count, std::span<const std::string> given)
{
    std::vector<std::string> labels;
    if (given.empty()) {
        for (std::size_t i = 0; i < count; ++i) {
            labels.push_back(std::to_string(i));
        }
        return labels;
    }
    if (given.size() != count) {
        fail(ErrorCode::InvalidArgument, std::to_string(given.size()) + " labels for " + std::to_string(count)
                                             + " documents");
    }
    std::set<std::string> seen;
    for (const auto& label : given) {
        if (label.empty() || label.find_first_of(" \t\r\n@") != std::string::npos) {
            fail(ErrorCode::InvalidArgument, "rank label must be non-empty without whitespace or '@': '" + label
                                                 + "'");
        }
        if (!seen.insert(label).second) {
            fail(ErrorCode::InvalidArgument, "duplicate rank label '" + label + "'");
        }
    }
    return {given.begin(), given.end()};
}

}  // namespace

ProvDocument merge(std::span<const ProvDocument> docs, std::span<const std::string> rank_labels)
{
    if (docs.empty()) {
        fail(ErrorCode::InvalidArgument, "merge needs at least one document");
    }
    const auto labels = resolve_labels(docs.size(), rank_labels);
    if (docs.size() == 1) {
        return docs.front();
    }

    std::optional<std::string> experiment;
    for (const auto& doc : docs) {
        const auto ids = experiment_ids(doc);
        if (ids.size() != 1 || (experiment && *experiment != *ids.begin())) {
            std::string found;
            for (const auto& id : ids) {
                found += (found.empty() ? "" : ", ") + id;
            }
            fail(ErrorCode::MixedExperiments, "expected one shared experiment entity, found {" + found + "}"
                                                  + (experiment ? " besides " + *experiment : std::string()));
        }
        experiment = *ids.begin();
    }

    std::set<std::string> conflicts;
    std::map<std::string, std::string> prefixes;
    for (const auto& doc : docs) {
        for (const auto& [prefix, uri] : doc.prefixes()) {
            const auto [it, inserted] = prefixes.emplace(prefix, uri);
            if (!inserted && it->second != uri) {
                conflicts.insert(prefix);
            }
        }
    }

    std::map<std::string, ProvRecord> records;
    std::map<std::string, Relation> relations;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        for (const auto& record : docs[i].records()) {
            const auto [it, inserted] = records.emplace(record.id.str(), record);
            if (!inserted && !(it->second == record)) {
                conflicts.insert(it->first);
            }
        }
        for (auto relation : docs[i].relations()) {
            // Already-labeled ids come from an earlier merge and keep their label.
            if (relation.id.local().find('@') == std::string::npos) {
                relation.id = QualifiedName(relation.id.prefix(), relation.id.local() + "@" + labels[i]);
            }
            const auto [it, inserted] = relations.emplace(relation.id.str(), relation);
            if (!inserted && !(it->second == relation)) {
                conflicts.insert(it->first);
            }
        }
    }
    if (!conflicts.empty()) {
        throw ConflictError({conflicts.begin(), conflicts.end()});
    }

    ProvDocument merged(prefixes.at("yprov4ml"));
    for (const auto& [prefix, uri] : prefixes) {
        merged.declare_prefix(prefix, uri);
    }
    for (auto& [id, record] : records) {
        merged.insert_record_unchecked(std::move(record));
    }
    for (auto& [id, relation] : relations) {
        merged.insert_relation_unchecked(std::move(relation));
    }
    return merged;
}

}  // namespace yprov
