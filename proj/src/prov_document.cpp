#include "yprov/prov_document.hpp"

#include "yprov/error.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

namespace yprov {

namespace {

constexpr std::string_view kRelationLocalPrefix = "rel/";
constexpr std::int64_t kMaxSafeInteger = std::int64_t{1} << 53;

bool is_space(char c)
{
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool prefix_is_implicit(std::string_view prefix)
{
    return prefix == "_";
}

const EndpointRule kRules[] = {
    {RecordKind::Activity, RecordKind::Entity, "prov:activity", "prov:entity"},      // used
    {RecordKind::Entity, RecordKind::Activity, "prov:entity", "prov:activity"},      // wasGeneratedBy
    {RecordKind::Activity, RecordKind::Agent, "prov:activity", "prov:agent"},        // wasAssociatedWith
    {RecordKind::Activity, RecordKind::Activity, "prov:informed", "prov:informant"}, // wasInformedBy
    {RecordKind::Entity, RecordKind::Entity, "prov:collection", "prov:entity"},      // hadMember
};

}  // namespace

// ---------------------------------------------------------------------------
// QualifiedName

QualifiedName::QualifiedName(std::string prefix, std::string local) :
    prefix_(std::move(prefix)),
    local_(std::move(local))
{
    if (!is_valid_prefix(prefix_)) {
        fail(ErrorCode::InvalidArgument, "invalid namespace prefix '" + prefix_ + "'");
    }
    if (local_.empty() || std::any_of(local_.begin(), local_.end(), is_space)) {
        fail(ErrorCode::InvalidArgument, "invalid local name '" + local_ + "'");
    }
}

QualifiedName QualifiedName::parse(std::string_view text)
{
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        fail(ErrorCode::InvalidArgument, "qualified name lacks a prefix: '" + std::string(text) + "'");
    }
    return QualifiedName(std::string(text.substr(0, colon)), std::string(text.substr(colon + 1)));
}

bool QualifiedName::is_valid_prefix(std::string_view prefix) noexcept
{
    if (prefix.empty()) {
        return false;
    }
    const auto head = static_cast<unsigned char>(prefix.front());
    if (!(std::isalpha(head) || head == '_')) {
        return false;
    }
    return std::all_of(prefix.begin() + 1, prefix.end(), [](char c) {
        const auto u = static_cast<unsigned char>(c);
        return std::isalnum(u) || c == '_' || c == '.' || c == '-';
    });
}

QualifiedName yprov_name(std::string local)
{
    return QualifiedName("yprov4ml", std::move(local));
}

// ---------------------------------------------------------------------------
// AttributeValue

AttributeValue::AttributeValue(Scalar value, std::optional<std::string> datatype) :
    value_(std::move(value)),
    datatype_(std::move(datatype))
{
    if (datatype_) {
        validate_datatype(*datatype_);
        normalize();
        return;
    }
    if (const auto* i = std::get_if<std::int64_t>(&value_); i && (*i > kMaxSafeInteger || *i < -kMaxSafeInteger)) {
        datatype_ = "xsd:long";
    }
}

void AttributeValue::validate_datatype(const std::string& datatype)
{
    const auto colon = datatype.find(':');
    if (colon == std::string::npos || !QualifiedName::is_valid_prefix(datatype.substr(0, colon))
        || colon + 1 == datatype.size()) {
        fail(ErrorCode::InvalidArgument, "datatype must be a qualified name: '" + datatype + "'");
    }
}

void AttributeValue::normalize()
{
    // Keep one in-memory form per JSON encoding so parse(serialize(v)) == v.
    const bool floating_type = *datatype_ == "xsd:double" || *datatype_ == "xsd:float";
    if (const auto* s = std::get_if<std::string>(&value_); s && floating_type) {
        if (*s == "NaN") {
            value_ = std::numeric_limits<double>::quiet_NaN();
        } else if (*s == "INF") {
            value_ = std::numeric_limits<double>::infinity();
        } else if (*s == "-INF") {
            value_ = -std::numeric_limits<double>::infinity();
        }
    }
    if (const auto* d = std::get_if<double>(&value_); d && !std::isfinite(*d)) {
        if (!floating_type) {
            fail(ErrorCode::InvalidArgument, "non-finite value needs datatype xsd:double or xsd:float, got "
                                                 + *datatype_);
        }
        if (*datatype_ == "xsd:double") {
            datatype_.reset();
        }
        return;
    }
    if (const auto* i = std::get_if<std::int64_t>(&value_);
        i && (*i > kMaxSafeInteger || *i < -kMaxSafeInteger) && !is_integer_datatype(*datatype_)) {
        fail(ErrorCode::InvalidArgument, "integer beyond 2^53 needs an integer datatype, got " + *datatype_);
    }
    if (const auto* s = std::get_if<std::string>(&value_); s && is_integer_datatype(*datatype_)) {
        std::int64_t n = 0;
        const auto [ptr, ec] = std::from_chars(s->data(), s->data() + s->size(), n);
        if (ec == std::errc{} && ptr == s->data() + s->size() && !s->empty() && (*s)[0] != '+'
            && std::to_string(n) == *s && (n > kMaxSafeInteger || n < -kMaxSafeInteger)) {
            value_ = n;
        }
    }
}

bool is_integer_datatype(std::string_view datatype) noexcept
{
    static constexpr std::string_view kIntegerTypes[] = {
        "xsd:long", "xsd:int", "xsd:integer", "xsd:short", "xsd:byte", "xsd:unsignedLong",
        "xsd:unsignedInt", "xsd:unsignedShort", "xsd:unsignedByte", "xsd:nonNegativeInteger",
        "xsd:positiveInteger", "xsd:negativeInteger", "xsd:nonPositiveInteger"};
    return std::find(std::begin(kIntegerTypes), std::end(kIntegerTypes), datatype) != std::end(kIntegerTypes);
}

std::string AttributeValue::display() const
{
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::string>) {
                return v;
            } else if constexpr (std::is_same_v<T, bool>) {
                return v ? "true" : "false";
            } else if constexpr (std::is_same_v<T, double>) {
                return format_double(v);
            } else {
                return std::to_string(v);
            }
        },
        value_);
}

bool operator==(const AttributeValue& a, const AttributeValue& b)
{
    if (a.datatype_ != b.datatype_ || a.value_.index() != b.value_.index()) {
        return false;
    }
    if (const auto* da = std::get_if<double>(&a.value_)) {
        const double db = std::get<double>(b.value_);
        if (std::isnan(*da) && std::isnan(db)) {
            return true;
        }
        return std::bit_cast<std::uint64_t>(*da) == std::bit_cast<std::uint64_t>(db);
    }
    return a.value_ == b.value_;
}

// ---------------------------------------------------------------------------
// Records and relations

std::string_view to_string(RecordKind kind) noexcept
{
    switch (kind) {
    case RecordKind::Entity: return "entity";
    case RecordKind::Activity: return "activity";
    case RecordKind::Agent: return "agent";
    }
    return "unknown";
}

ProvRecord ProvRecord::entity(QualifiedName id, Attributes attrs)
{
    return ProvRecord{std::move(id), RecordKind::Entity, std::move(attrs), std::nullopt, std::nullopt};
}

ProvRecord ProvRecord::activity(QualifiedName id, Attributes attrs, std::optional<TimestampMs> start,
                                std::optional<TimestampMs> end)
{
    return ProvRecord{std::move(id), RecordKind::Activity, std::move(attrs), start, end};
}

ProvRecord ProvRecord::agent(QualifiedName id, Attributes attrs)
{
    return ProvRecord{std::move(id), RecordKind::Agent, std::move(attrs), std::nullopt, std::nullopt};
}

std::string_view to_string(RelationKind kind) noexcept
{
    switch (kind) {
    case RelationKind::Used: return "used";
    case RelationKind::WasGeneratedBy: return "wasGeneratedBy";
    case RelationKind::WasAssociatedWith: return "wasAssociatedWith";
    case RelationKind::WasInformedBy: return "wasInformedBy";
    case RelationKind::HadMember: return "hadMember";
    }
    return "unknown";
}

std::optional<RelationKind> relation_kind_from_string(std::string_view name) noexcept
{
    for (const auto kind : kAllRelationKinds) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    return std::nullopt;
}

const EndpointRule& endpoint_rule(RelationKind kind) noexcept
{
    return kRules[static_cast<std::size_t>(kind)];
}

bool natural_less(std::string_view a, std::string_view b)
{
    auto split = [](std::string_view s) {
        std::size_t i = s.size();
        while (i > 0 && s[i - 1] >= '0' && s[i - 1] <= '9') {
            --i;
        }
        return i;
    };
    const auto ia = split(a);
    const auto ib = split(b);
    const auto stem_a = a.substr(0, ia);
    const auto stem_b = b.substr(0, ib);
    if (stem_a != stem_b || ia == a.size() || ib == b.size()) {
        return a < b;
    }
    auto digits_a = a.substr(ia);
    auto digits_b = b.substr(ib);
    // strip leading zeros, then compare by length and lexicographically
    const auto strip = [](std::string_view d) {
        const auto nz = d.find_first_not_of('0');
        return nz == std::string_view::npos ? std::string_view{} : d.substr(nz);
    };
    const auto sa = strip(digits_a);
    const auto sb = strip(digits_b);
    if (sa.size() != sb.size()) {
        return sa.size() < sb.size();
    }
    if (sa != sb) {
        return sa < sb;
    }
    return a < b;
}

std::string_view to_string(ViolationKind kind) noexcept
{
    switch (kind) {
    case ViolationKind::DanglingReference: return "DanglingReference";
    case ViolationKind::EndpointKindMismatch: return "EndpointKindMismatch";
    case ViolationKind::UndeclaredPrefix: return "UndeclaredPrefix";
    case ViolationKind::TimestampInversion: return "TimestampInversion";
    }
    return "Unknown";
}

// ---------------------------------------------------------------------------
// ProvDocument

ProvDocument::ProvDocument(std::string yprov_namespace)
{
    prefixes_["prov"] = std::string(kProvNamespace);
    prefixes_["xsd"] = std::string(kXsdNamespace);
    prefixes_["yprov4ml"] = std::move(yprov_namespace);
}

void ProvDocument::declare_prefix(const std::string& prefix, const std::string& uri)
{
    if (!QualifiedName::is_valid_prefix(prefix)) {
        fail(ErrorCode::InvalidArgument, "invalid namespace prefix '" + prefix + "'");
    }
    prefixes_[prefix] = uri;
}

bool ProvDocument::is_declared(std::string_view prefix) const
{
    return prefix_is_implicit(prefix) || prefixes_.find(std::string(prefix)) != prefixes_.end();
}

void ProvDocument::check_record(const ProvRecord& record) const
{
    if (record_index_.contains(record.id.str())) {
        fail(ErrorCode::DuplicateId, record.id.str());
    }
    if (!is_declared(record.id.prefix())) {
        fail(ErrorCode::UndeclaredPrefix, record.id.str());
    }
    if (record.kind != RecordKind::Activity && (record.start_time || record.end_time)) {
        fail(ErrorCode::InvalidArgument, std::string(to_string(record.kind)) + " " + record.id.str()
                                             + " cannot carry timestamps");
    }
    if (record.start_time && record.end_time && *record.start_time > *record.end_time) {
        fail(ErrorCode::TimestampInversion, record.id.str());
    }
    for (const auto& [key, value] : record.attributes) {
        if (key.empty()) {
            fail(ErrorCode::InvalidArgument, "empty attribute name on " + record.id.str());
        }
        if (record.kind == RecordKind::Activity && (key == "prov:startTime" || key == "prov:endTime")) {
            fail(ErrorCode::InvalidArgument, key + " is reserved for activity timestamps");
        }
    }
}

void ProvDocument::add_record(ProvRecord record)
{
    check_record(record);
    insert_record_unchecked(std::move(record));
}

void ProvDocument::check_relation(const Relation& relation) const
{
    if (relation_index_.contains(relation.id.str())) {
        fail(ErrorCode::DuplicateId, relation.id.str());
    }
    if (!is_declared(relation.id.prefix())) {
        fail(ErrorCode::UndeclaredPrefix, relation.id.str());
    }
    const auto* subject = find(relation.subject);
    const auto* object = find(relation.object);
    if (!subject) {
        fail(ErrorCode::DanglingReference, relation.subject.str());
    }
    if (!object) {
        fail(ErrorCode::DanglingReference, relation.object.str());
    }
    const auto& rule = endpoint_rule(relation.kind);
    if (subject->kind != rule.subject || object->kind != rule.object) {
        fail(ErrorCode::EndpointKindMismatch,
             std::string(to_string(relation.kind)) + " expects " + std::string(to_string(rule.subject)) + "->"
                 + std::string(to_string(rule.object)) + ", got " + std::string(to_string(subject->kind))
                 + "->" + std::string(to_string(object->kind)));
    }
    for (const auto& [key, value] : relation.attributes) {
        if (key.empty() || key == rule.subject_role || key == rule.object_role) {
            fail(ErrorCode::InvalidArgument, "attribute '" + key + "' clashes with a relation role key");
        }
    }
}

QualifiedName ProvDocument::add_relation(RelationKind kind, const QualifiedName& subject,
                                         const QualifiedName& object, Attributes attrs)
{
    auto counter = next_relation_;
    QualifiedName id;
    do {
        id = yprov_name(std::string(kRelationLocalPrefix) + std::to_string(counter++));
    } while (relation_index_.contains(id.str()));
    add_relation(Relation{id, kind, subject, object, std::move(attrs)});
    return id;
}

void ProvDocument::add_relation(Relation relation)
{
    check_relation(relation);
    insert_relation_unchecked(std::move(relation));
}

const ProvRecord* ProvDocument::find(const QualifiedName& id) const
{
    return find(id.str());
}

const ProvRecord* ProvDocument::find(std::string_view id) const
{
    const auto it = record_index_.find(std::string(id));
    return it == record_index_.end() ? nullptr : &records_[it->second];
}

ProvRecord* ProvDocument::find_mutable(std::string_view id)
{
    const auto it = record_index_.find(std::string(id));
    return it == record_index_.end() ? nullptr : &records_[it->second];
}

const Relation* ProvDocument::find_relation(std::string_view id) const
{
    const auto it = relation_index_.find(std::string(id));
    return it == relation_index_.end() ? nullptr : &relations_[it->second];
}

std::vector<Neighbor> ProvDocument::neighbors(const QualifiedName& id, EdgeDirection direction) const
{
    if (!find(id)) {
        fail(ErrorCode::UnknownId, id.str());
    }
    std::vector<Neighbor> out;
    for (const auto& relation : relations_) {
        const bool outbound = relation.subject == id;
        const bool inbound = relation.object == id;
        if (outbound && direction != EdgeDirection::Inbound) {
            out.push_back({relation, relation.object});
        } else if (inbound && direction != EdgeDirection::Outbound) {
            out.push_back({relation, relation.subject});
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
        return natural_less(a.relation.id.str(), b.relation.id.str());
    });
    return out;
}

std::vector<Violation> ProvDocument::validate() const
{
    std::vector<Violation> out;
    for (const auto& record : records_) {
        if (!is_declared(record.id.prefix())) {
            out.push_back({ViolationKind::UndeclaredPrefix, record.id.str(),
                           "prefix '" + record.id.prefix() + "' is not declared"});
        }
        if (record.start_time && record.end_time && *record.start_time > *record.end_time) {
            out.push_back({ViolationKind::TimestampInversion, record.id.str(),
                           format_rfc3339(*record.start_time) + " > " + format_rfc3339(*record.end_time)});
        }
    }
    for (const auto& relation : relations_) {
        const auto rel_id = relation.id.str();
        if (!is_declared(relation.id.prefix())) {
            out.push_back({ViolationKind::UndeclaredPrefix, rel_id,
                           "prefix '" + relation.id.prefix() + "' is not declared"});
        }
        const auto* subject = find(relation.subject);
        const auto* object = find(relation.object);
        if (!subject) {
            out.push_back({ViolationKind::DanglingReference, rel_id, relation.subject.str() + " does not exist"});
        }
        if (!object) {
            out.push_back({ViolationKind::DanglingReference, rel_id, relation.object.str() + " does not exist"});
        }
        if (subject && object) {
            const auto& rule = endpoint_rule(relation.kind);
            if (subject->kind != rule.subject || object->kind != rule.object) {
                out.push_back({ViolationKind::EndpointKindMismatch, rel_id,
                               std::string(to_string(relation.kind)) + " expects "
                                   + std::string(to_string(rule.subject)) + "->"
                                   + std::string(to_string(rule.object)) + ", got "
                                   + std::string(to_string(subject->kind)) + "->"
                                   + std::string(to_string(object->kind))});
            }
        }
    }
    return out;
}

void ProvDocument::insert_record_unchecked(ProvRecord record)
{
    auto key = record.id.str();
    if (const auto it = record_index_.find(key); it != record_index_.end()) {
        records_[it->second] = std::move(record);
        return;
    }
    record_index_.emplace(std::move(key), records_.size());
    records_.push_back(std::move(record));
}

void ProvDocument::note_relation_id(const QualifiedName& id)
{
    if (id.prefix() != "yprov4ml" || !id.local().starts_with(kRelationLocalPrefix)) {
        return;
    }
    const auto digits = std::string_view(id.local()).substr(kRelationLocalPrefix.size());
    std::uint64_t n = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (ec == std::errc{} && ptr == digits.data() + digits.size() && n >= next_relation_) {
        next_relation_ = n + 1;
    }
}

void ProvDocument::insert_relation_unchecked(Relation relation)
{
    note_relation_id(relation.id);
    auto key = relation.id.str();
    if (const auto it = relation_index_.find(key); it != relation_index_.end()) {
        relations_[it->second] = std::move(relation);
        return;
    }
    relation_index_.emplace(std::move(key), relations_.size());
    relations_.push_back(std::move(relation));
}

bool ProvDocument::erase_record(std::string_view id)
{
    const auto it = record_index_.find(std::string(id));
    if (it == record_index_.end()) {
        return false;
    }
    records_.erase(records_.begin() + static_cast<std::ptrdiff_t>(it->second));
    reindex();
    return true;
}

bool ProvDocument::erase_prefix(const std::string& prefix)
{
    return prefixes_.erase(prefix) > 0;
}

void ProvDocument::reindex()
{
    record_index_.clear();
    for (std::size_t i = 0; i < records_.size(); ++i) {
        record_index_.emplace(records_[i].id.str(), i);
    }
    relation_index_.clear();
    for (std::size_t i = 0; i < relations_.size(); ++i) {
        relation_index_.emplace(relations_[i].id.str(), i);
    }
}

bool operator==(const ProvDocument& a, const ProvDocument& b)
{
    if (a.prefixes_ != b.prefixes_ || a.records_.size() != b.records_.size()
        || a.relations_.size() != b.relations_.size()) {
        return false;
    }
    for (const auto& record : a.records_) {
        const auto* other = b.find(record.id);
        if (!other || !(*other == record)) {
            return false;
        }
    }
    for (const auto& relation : a.relations_) {
        const auto* other = b.find_relation(relation.id.str());
        if (!other || !(*other == relation)) {
            return false;
        }
    }
    return true;
}

}  // namespace yprov
