#pragma once

// In-memory W3C PROV document: typed records (entity/activity/agent), the five
// relation kinds used by the tracker, and referential-integrity validation.

#include "yprov/util.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace yprov {

inline constexpr std::string_view kProvNamespace = "http://www.w3.org/ns/prov#";
inline constexpr std::string_view kXsdNamespace = "http://www.w3.org/2001/XMLSchema#";
inline constexpr std::string_view kDefaultYprovNamespace = "urn:yprov4ml:";

/// `prefix:local`. The prefix must match `[A-Za-z_][A-Za-z0-9_.-]*`; the local part is
/// non-empty and free of whitespace.
class QualifiedName
{
public:
    QualifiedName() = default;
    QualifiedName(std::string prefix, std::string local);

    /// Splits at the first ':'.
    static QualifiedName parse(std::string_view text);
    static bool is_valid_prefix(std::string_view prefix) noexcept;

    [[nodiscard]] const std::string& prefix() const noexcept { return prefix_; }
    [[nodiscard]] const std::string& local() const noexcept { return local_; }
    [[nodiscard]] std::string str() const { return prefix_ + ":" + local_; }

    friend bool operator==(const QualifiedName&, const QualifiedName&) = default;
    friend auto operator<=>(const QualifiedName& a, const QualifiedName& b)
    {
        return a.str() <=> b.str();
    }

private:
    std::string prefix_;
    std::string local_;
};

/// Shorthand for ids in the reserved `yprov4ml` namespace.
QualifiedName yprov_name(std::string local);

/// `xsd:long`, `xsd:int`, `xsd:unsignedLong`, ...
bool is_integer_datatype(std::string_view datatype) noexcept;

/// Scalar attribute value with an optional datatype tag (itself a qualified name).
class AttributeValue
{
public:
    using Scalar = std::variant<std::string, std::int64_t, double, bool>;

    AttributeValue() = default;
    AttributeValue(Scalar value, std::optional<std::string> datatype = std::nullopt);

    /// Integers outside +-2^53 get an `xsd:long` tag so they survive JSON consumers.
    static AttributeValue string(std::string value) { return AttributeValue(std::move(value)); }
    static AttributeValue integer(std::int64_t value) { return AttributeValue(value); }
    static AttributeValue real(double value) { return AttributeValue(value); }
    static AttributeValue boolean(bool value) { return AttributeValue(value); }
    static AttributeValue qualified(const QualifiedName& name)
    {
        return AttributeValue(name.str(), "prov:QUALIFIED_NAME");
    }

    [[nodiscard]] const Scalar& value() const noexcept { return value_; }
    [[nodiscard]] const std::optional<std::string>& datatype() const noexcept { return datatype_; }

    [[nodiscard]] bool is_string() const noexcept { return std::holds_alternative<std::string>(value_); }
    [[nodiscard]] const std::string& as_string() const { return std::get<std::string>(value_); }

    /// Human-oriented rendering used in DOT labels and diff tables.
    [[nodiscard]] std::string display() const;

    /// Doubles compare bitwise so NaN payloads and signed zeros round-trip as equal.
    friend bool operator==(const AttributeValue& a, const AttributeValue& b);

private:
    static void validate_datatype(const std::string& datatype);
    void normalize();

    Scalar value_{std::string{}};
    std::optional<std::string> datatype_;
};

using Attributes = std::map<std::string, AttributeValue>;

enum class RecordKind { Entity, Activity, Agent };

std::string_view to_string(RecordKind kind) noexcept;

struct ProvRecord
{
    QualifiedName id;
    RecordKind kind = RecordKind::Entity;
    Attributes attributes;
    std::optional<TimestampMs> start_time;
    std::optional<TimestampMs> end_time;

    static ProvRecord entity(QualifiedName id, Attributes attrs = {});
    static ProvRecord activity(QualifiedName id, Attributes attrs = {},
                               std::optional<TimestampMs> start = std::nullopt,
                               std::optional<TimestampMs> end = std::nullopt);
    static ProvRecord agent(QualifiedName id, Attributes attrs = {});

    friend bool operator==(const ProvRecord&, const ProvRecord&) = default;
};

enum class RelationKind { Used, WasGeneratedBy, WasAssociatedWith, WasInformedBy, HadMember };

inline constexpr RelationKind kAllRelationKinds[] = {
    RelationKind::Used, RelationKind::WasGeneratedBy, RelationKind::WasAssociatedWith,
    RelationKind::WasInformedBy, RelationKind::HadMember};

/// PROV-JSON section name (`used`, `wasGeneratedBy`, ...).
std::string_view to_string(RelationKind kind) noexcept;
std::optional<RelationKind> relation_kind_from_string(std::string_view name) noexcept;

struct EndpointRule
{
    RecordKind subject;
    RecordKind object;
    std::string_view subject_role;  // PROV-JSON role key, e.g. "prov:activity"
    std::string_view object_role;
};

/// The single (subject, object) typing rule for a relation kind.
const EndpointRule& endpoint_rule(RelationKind kind) noexcept;

struct Relation
{
    QualifiedName id;
    RelationKind kind = RelationKind::Used;
    QualifiedName subject;
    QualifiedName object;
    Attributes attributes;

    friend bool operator==(const Relation&, const Relation&) = default;
};

/// Natural ordering: a trailing decimal run compares numerically (`rel/9` < `rel/10`).
bool natural_less(std::string_view a, std::string_view b);

enum class ViolationKind { DanglingReference, EndpointKindMismatch, UndeclaredPrefix, TimestampInversion };

std::string_view to_string(ViolationKind kind) noexcept;

struct Violation
{
    ViolationKind kind;
    std::string subject;  // offending record or relation id
    std::string detail;

    friend bool operator==(const Violation&, const Violation&) = default;
};

enum class EdgeDirection { Inbound, Outbound, Both };

struct Neighbor
{
    Relation relation;
    QualifiedName other;
};

class ProvDocument
{
public:
    /// Declares the reserved `prov`, `xsd` and `yprov4ml` prefixes.
    explicit ProvDocument(std::string yprov_namespace = std::string(kDefaultYprovNamespace));

    void declare_prefix(const std::string& prefix, const std::string& uri);
    [[nodiscard]] const std::map<std::string, std::string>& prefixes() const noexcept { return prefixes_; }
    [[nodiscard]] bool is_declared(std::string_view prefix) const;

    /// Throws DuplicateId, UndeclaredPrefix, or TimestampInversion / InvalidArgument
    /// for records that break their own invariants.
    void add_record(ProvRecord record);

    /// Allocates `yprov4ml:rel/<n>`. Throws DanglingReference or EndpointKindMismatch.
    QualifiedName add_relation(RelationKind kind, const QualifiedName& subject,
                               const QualifiedName& object, Attributes attrs = {});

    /// Checked insert of a relation with a caller-chosen id.
    void add_relation(Relation relation);

    [[nodiscard]] const ProvRecord* find(const QualifiedName& id) const;
    [[nodiscard]] const ProvRecord* find(std::string_view id) const;
    [[nodiscard]] const Relation* find_relation(std::string_view id) const;

    /// Insertion order.
    [[nodiscard]] const std::vector<ProvRecord>& records() const noexcept { return records_; }
    [[nodiscard]] const std::vector<Relation>& relations() const noexcept { return relations_; }

    [[nodiscard]] std::vector<Neighbor> neighbors(const QualifiedName& id, EdgeDirection direction) const;

    [[nodiscard]] std::vector<Violation> validate() const;

    // Unchecked mutation. Used when loading documents that must be reported on rather
    // than rejected, and by fixtures that inject violations.
    void insert_record_unchecked(ProvRecord record);
    void insert_relation_unchecked(Relation relation);
    bool erase_record(std::string_view id);
    bool erase_prefix(const std::string& prefix);
    ProvRecord* find_mutable(std::string_view id);

    /// Order-insensitive comparison of prefixes, records and relations.
    friend bool operator==(const ProvDocument& a, const ProvDocument& b);

private:
    void check_record(const ProvRecord& record) const;
    void check_relation(const Relation& relation) const;
    void note_relation_id(const QualifiedName& id);
    void reindex();

    std::map<std::string, std::string> prefixes_;
    std::vector<ProvRecord> records_;
    std::unordered_map<std::string, std::size_t> record_index_;
    std::vector<Relation> relations_;
    std::unordered_map<std::string, std::size_t> relation_index_;
    std::uint64_t next_relation_ = 1;
};

}  // namespace yprov
