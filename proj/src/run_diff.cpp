#include "yprov/graph_tools.hpp"

#include "yprov/error.hpp"
#include "yprov/metric_store.hpp"
#include "yprov/prov_json.hpp"
#include "yprov/tracker.hpp"

#include <bit>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace yprov {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Key = std::pair<std::string, std::string>;  // (name, context)

struct RunView
{
    std::map<Key, AttributeValue> params;
    std::map<Key, std::optional<double>> metrics;
    std::map<std::string, std::string> artifacts;  // name -> digest
};

std::string text_attribute(const ProvRecord& record, const std::string& key)
{
    const auto it = record.attributes.find(key);
    return it != record.attributes.end() && it->second.is_string() ? it->second.as_string() : std::string();
}

RunView load_run(const fs::path& run_dir)
{
    const auto prov_path = run_dir / kProvenanceFile;
    const auto store_path = run_dir / kStoreFile;
    std::error_code ec;
    if (!fs::is_directory(run_dir, ec)) {
        fail(ErrorCode::LayoutError, "not a run directory: " + run_dir.string());
    }
    for (const auto& required : {prov_path, store_path}) {
        if (!fs::is_regular_file(required, ec)) {
            fail(ErrorCode::LayoutError, "missing " + required.string());
        }
    }

    ProvDocument doc;
    try {
        doc = load_document(prov_path).document;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::IoError) {
            throw;
        }
        fail(ErrorCode::LayoutError, prov_path.string() + ": " + e.what());
    }
    const auto store = StoreReader::open(store_path);

    RunView view;
    for (const auto& record : doc.records()) {
        if (record.kind != RecordKind::Entity) {
            continue;
        }
        const auto type = prov_type(record);
        if (!type) {
            continue;
        }
        const auto name = text_attribute(record, "yprov4ml:name");
        const auto context = text_attribute(record, "yprov4ml:context");
        if (*type == types::kParameter) {
            const auto value = record.attributes.find("yprov4ml:value");
            view.params.emplace(Key(name, context),
                                value == record.attributes.end() ? AttributeValue() : value->second);
        } else if (*type == types::kMetricSeries) {
            const auto last = store.last_sample(name, context);
            view.metrics.emplace(Key(name, context), last ? std::optional(last->value) : std::nullopt);
        } else if (*type == types::kArtifact) {
            view.artifacts.emplace(name, text_attribute(record, "yprov4ml:sha256"));
        }
    }
    return view;
}

bool same_value(const std::optional<double>& a, const std::optional<double>& b)
{
    if (a.has_value() != b.has_value()) {
        return false;
    }
    if (!a) {
        return true;
    }
    if (std::isnan(*a) && std::isnan(*b)) {
        return true;
    }
    return std::bit_cast<std::uint64_t>(*a) == std::bit_cast<std::uint64_t>(*b);
}

json optional_value(const std::optional<AttributeValue>& value)
{
    return value ? attribute_to_json(*value) : json(nullptr);
}

json optional_real(const std::optional<double>& value)
{
    return value ? attribute_to_json(AttributeValue::real(*value)) : json(nullptr);
}

}  // namespace

std::string_view to_string(DiffStatus status) noexcept
{
    switch (status) {
    case DiffStatus::Added:
        return "added";
    case DiffStatus::Removed:
        return "removed";
    case DiffStatus::Changed:
        return "changed";
    case DiffStatus::DigestMismatch:
        return "digest_mismatch";
    }
    return "changed";
}

bool operator==(const MetricDiff& a, const MetricDiff& b)
{
    return a.name == b.name && a.context == b.context && same_value(a.left, b.left) && same_value(a.right, b.right)
           && same_value(a.delta, b.delta);
}

RunDiff diff(const fs::path& left_run_dir, const fs::path& right_run_dir)
{
    const auto left = load_run(left_run_dir);
    const auto right = load_run(right_run_dir);
    RunDiff result;

    std::set<Key> param_keys;
    for (const auto& [key, value] : left.params) {
        param_keys.insert(key);
    }
    for (const auto& [key, value] : right.params) {
        param_keys.insert(key);
    }
    for (const auto& key : param_keys) {
        const auto l = left.params.find(key);
        const auto r = right.params.find(key);
        ParamDiff entry{key.first, key.second, DiffStatus::Changed, std::nullopt, std::nullopt};
        if (l == left.params.end()) {
            entry.status = DiffStatus::Added;
        } else if (r == right.params.end()) {
            entry.status = DiffStatus::Removed;
        } else if (l->second == r->second) {
            continue;
        }
        if (l != left.params.end()) {
            entry.left = l->second;
        }
        if (r != right.params.end()) {
            entry.right = r->second;
        }
        result.params.push_back(std::move(entry));
    }

    std::set<Key> metric_keys;
    for (const auto& [key, value] : left.metrics) {
        metric_keys.insert(key);
    }
    for (const auto& [key, value] : right.metrics) {
        metric_keys.insert(key);
    }
    for (const auto& key : metric_keys) {
        const auto l = left.metrics.find(key);
        const auto r = right.metrics.find(key);
        const bool both = l != left.metrics.end() && r != right.metrics.end();
        const auto lv = l != left.metrics.end() ? l->second : std::nullopt;
        const auto rv = r != right.metrics.end() ? r->second : std::nullopt;
        if (both && same_value(lv, rv)) {
            continue;
        }
        MetricDiff entry{key.first, key.second, lv, rv, std::nullopt};
        if (lv && rv) {
            entry.delta = *rv - *lv;
        }
        result.metrics.push_back(std::move(entry));
    }

    std::set<std::string> artifact_names;
    for (const auto& [name, digest] : left.artifacts) {
        artifact_names.insert(name);
    }
    for (const auto& [name, digest] : right.artifacts) {
        artifact_names.insert(name);
    }
    for (const auto& name : artifact_names) {
        const auto l = left.artifacts.find(name);
        const auto r = right.artifacts.find(name);
        ArtifactDiff entry{name, DiffStatus::Added, std::nullopt, std::nullopt};
        if (l == left.artifacts.end()) {
            entry.status = DiffStatus::Added;
        } else if (r == right.artifacts.end()) {
            entry.status = DiffStatus::Removed;
        } else if (l->second == r->second) {
            continue;
        } else {
            entry.status = DiffStatus::DigestMismatch;
        }
        if (l != left.artifacts.end()) {
            entry.left_digest = l->second;
        }
        if (r != right.artifacts.end()) {
            entry.right_digest = r->second;
        }
        result.artifacts.push_back(std::move(entry));
    }
    return result;
}

json to_json(const RunDiff& diff)
{
    json params = json::array();
    for (const auto& p : diff.params) {
        params.push_back({{"context", p.context},
                          {"left", optional_value(p.left)},
                          {"name", p.name},
                          {"right", optional_value(p.right)},
                          {"status", std::string(to_string(p.status))}});
    }
    json metrics = json::array();
    for (const auto& m : diff.metrics) {
        metrics.push_back({{"context", m.context},
                           {"delta", optional_real(m.delta)},
                           {"left", optional_real(m.left)},
                           {"name", m.name},
                           {"right", optional_real(m.right)}});
    }
    json artifacts = json::array();
    for (const auto& a : diff.artifacts) {
        artifacts.push_back({{"left_digest", a.left_digest ? json(*a.left_digest) : json(nullptr)},
                             {"name", a.name},
                             {"right_digest", a.right_digest ? json(*a.right_digest) : json(nullptr)},
                             {"status", std::string(to_string(a.status))}});
    }
    return json{{"artifacts", std::move(artifacts)}, {"metrics", std::move(metrics)}, {"params", std::move(params)}};
}

std::string render_table(const RunDiff& diff)
{
    if (diff.empty()) {
        return "no differences\n";
    }
    auto show = [](const auto& value) -> std::string {
        if constexpr (std::is_same_v<std::decay_t<decltype(value)>, std::optional<double>>) {
            return value ? format_double(*value) : "-";
        } else if constexpr (std::is_same_v<std::decay_t<decltype(value)>, std::optional<std::string>>) {
            return value ? *value : "-";
        } else {
            return value ? value->display() : "-";
        }
    };
    auto where = [](const std::string& name, const std::string& context) {
        return context.empty() ? name : name + "@" + context;
    };

    std::ostringstream out;
    if (!diff.params.empty()) {
        out << "params:\n";
        for (const auto& p : diff.params) {
            out << "  " << to_string(p.status) << "  " << where(p.name, p.context) << "  " << show(p.left) << " -> "
                << show(p.right) << "\n";
        }
    }
    if (!diff.metrics.empty()) {
        out << "metrics:\n";
        for (const auto& m : diff.metrics) {
            out << "  " << where(m.name, m.context) << "  " << show(m.left) << " -> " << show(m.right)
                << "  delta " << show(m.delta) << "\n";
        }
    }
    if (!diff.artifacts.empty()) {
        out << "artifacts:\n";
        for (const auto& a : diff.artifacts) {
            out << "  " << to_string(a.status) << "  " << a.name << "  " << show(a.left_digest) << " -> "
                << show(a.right_digest) << "\n";
        }
    }
    return out.str();
}

}  // namespace yprov
