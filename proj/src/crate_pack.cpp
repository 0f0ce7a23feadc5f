#include "yprov/crate_pack.hpp"

#include "yprov/error.hpp"
#include "yprov/prov_json.hpp"
#include "yprov/tracker.hpp"

#include <algorithm>
#include <map>

namespace yprov {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kProvJsonProfile = "https://www.w3.org/Submission/prov-json/";

struct FileFacts
{
    std::uint64_t size = 0;
    std::string sha256;
};

bool is_manifest_path(const std::string& relative)
{
    return relative == kCrateManifestFile || relative == std::string(kCrateManifestFile) + ".tmp";
}

/// Regular files under `run_dir`, keyed by '/'-separated relative path.
std::map<std::string, fs::path> list_files(const fs::path& run_dir)
{
    std::map<std::string, fs::path> files;
    try {
        for (const auto& entry : fs::recursive_directory_iterator(run_dir)) {
            if (!entry.is_regular_file()) {
                continue;
            }
            const auto relative = entry.path().lexically_relative(run_dir).generic_string();
            if (!is_manifest_path(relative)) {
                files.emplace(relative, entry.path());
            }
        }
    } catch (const fs::filesystem_error& e) {
        fail(ErrorCode::IoError, e.what());
    }
    return files;
}

FileFacts facts(const fs::path& path)
{
    std::error_code ec;
    const auto size = fs::file_size(path, ec);
    if (ec) {
        fail(ErrorCode::IoError, "cannot stat " + path.string() + ": " + ec.message());
    }
    return {size, sha256_file(path)};
}

std::string_view encoding_format(const std::string& relative)
{
    if (relative.ends_with(".json")) {
        return "application/json";
    }
    return "application/octet-stream";
}

bool has_type(const json& entity, std::string_view type)
{
    const auto it = entity.find("@type");
    if (it == entity.end()) {
        return false;
    }
    if (it->is_string()) {
        return it->get<std::string>() == type;
    }
    if (it->is_array()) {
        return std::any_of(it->begin(), it->end(), [&](const json& t) { return t.is_string() && t.get<std::string>() == type; });
    }
    return false;
}

[[noreturn]] void malformed(const std::string& message)
{
    fail(ErrorCode::MalformedManifest, message);
}

}  // namespace

std::string_view to_string(CrateIssue issue) noexcept
{
    switch (issue) {
    case CrateIssue::MissingFile:
        return "missing_file";
    case CrateIssue::UnlistedFile:
        return "unlisted_file";
    case CrateIssue::DigestMismatch:
        return "digest_mismatch";
    }
    return "missing_file";
}

fs::path pack(const fs::path& run_dir)
{
    std::error_code ec;
    if (!fs::is_directory(run_dir, ec)) {
        fail(ErrorCode::LayoutError, "not a run directory: " + run_dir.string());
    }
    for (const auto required : {kProvenanceFile, kStoreFile}) {
        if (!fs::is_regular_file(run_dir / required, ec)) {
            fail(ErrorCode::LayoutError, "missing " + (run_dir / required).string());
        }
    }

    const auto files = list_files(run_dir);
    json parts = json::array();
    json file_entities = json::array();
    for (const auto& [relative, path] : files) {
        const auto f = facts(path);
        parts.push_back({{"@id", relative}});
        json entity{{"@id", relative},
                    {"@type", "File"},
                    {"contentSize", std::to_string(f.size)},
                    {"encodingFormat", std::string(encoding_format(relative))},
                    {"name", path.filename().string()},
                    {"sha256", f.sha256}};
        if (relative == kProvenanceFile) {
            entity["about"] = {{"@id", "./"}};
            entity["conformsTo"] = {{"@id", std::string(kProvJsonProfile)}};
        }
        file_entities.push_back(std::move(entity));
    }

    auto normal = fs::absolute(run_dir).lexically_normal();
    if (normal.filename().empty()) {
        normal = normal.parent_path();
    }
    json graph = json::array();
    graph.push_back({{"@id", std::string(kCrateManifestFile)},
                     {"@type", "CreativeWork"},
                     {"about", {{"@id", "./"}}},
                     {"conformsTo", {{"@id", std::string(kCrateProfile)}}}});
    graph.push_back({{"@id", "./"},
                     {"@type", "Dataset"},
                     {"hasPart", std::move(parts)},
                     {"name", normal.filename().string()},
                     {"subjectOf", {{"@id", std::string(kProvenanceFile)}}}});
    for (auto& entity : file_entities) {
        graph.push_back(std::move(entity));
    }

    const json manifest{{"@context", std::string(kCrateContext)}, {"@graph", std::move(graph)}};
    const auto manifest_path = run_dir / kCrateManifestFile;
    write_file_atomic(manifest_path, canonical_dump(manifest) + "\n");
    return manifest_path;
}

std::vector<CrateViolation> verify(const fs::path& run_dir)
{
    const auto manifest_path = run_dir / kCrateManifestFile;
    std::error_code ec;
    if (!fs::is_regular_file(manifest_path, ec)) {
        fail(ErrorCode::LayoutError, "missing " + manifest_path.string());
    }

    json manifest;
    try {
        manifest = json::parse(read_file(manifest_path));
    } catch (const json::parse_error& e) {
        malformed(e.what());
    }
    if (!manifest.is_object() || !manifest.contains("@graph") || !manifest["@graph"].is_array()) {
        malformed("manifest needs an @graph array");
    }
    if (manifest.value("@context", json()) != json(std::string(kCrateContext))) {
        malformed("unexpected @context");
    }

    std::map<std::string, FileFacts> listed;
    for (const auto& entity : manifest["@graph"]) {
        if (!entity.is_object() || !has_type(entity, "File")) {
            continue;
        }
        const auto id = entity.find("@id");
        const auto sha = entity.find("sha256");
        const auto size = entity.find("contentSize");
        if (id == entity.end() || !id->is_string() || sha == entity.end() || !sha->is_string()
            || size == entity.end()) {
            malformed("File entity needs string @id, sha256 and contentSize");
        }
        FileFacts f;
        f.sha256 = sha->get<std::string>();
        if (size->is_string()) {
            const auto& text = size->get_ref<const std::string&>();
            if (text.empty() || text.size() > 19
                || !std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
                malformed("contentSize must be a decimal byte count");
            }
            f.size = std::stoull(text);
        } else if (size->is_number_unsigned()) {
            f.size = size->get<std::uint64_t>();
        } else {
            malformed("contentSize must be a decimal byte count");
        }
        const auto relative = id->get<std::string>();
        const fs::path rel_path(relative);
        if (relative.empty() || rel_path.is_absolute()
            || std::any_of(rel_path.begin(), rel_path.end(), [](const fs::path& part) { return part == ".."; })) {
            malformed("File @id must be a relative path inside the crate: " + relative);
        }
        if (!listed.emplace(relative, std::move(f)).second) {
            malformed("file listed twice: " + relative);
        }
    }

    std::vector<CrateViolation> violations;
    const auto present = list_files(run_dir);
    for (const auto& [relative, expected] : listed) {
        const auto it = present.find(relative);
        if (it == present.end()) {
            violations.push_back({CrateIssue::MissingFile, relative, "listed but not present"});
            continue;
        }
        const auto actual = facts(it->second);
        if (actual.size != expected.size || actual.sha256 != expected.sha256) {
            violations.push_back({CrateIssue::DigestMismatch, relative,
                                  "expected " + expected.sha256 + " (" + std::to_string(expected.size) + " bytes), found "
                                      + actual.sha256 + " (" + std::to_string(actual.size) + " bytes)"});
        }
    }
    for (const auto& [relative, path] : present) {
        if (!listed.contains(relative)) {
            violations.push_back({CrateIssue::UnlistedFile, relative, "present but not listed"});
        }
    }
    std::sort(violations.begin(), violations.end(), [](const CrateViolation& a, const CrateViolation& b) {
        return a.path < b.path;
    });
    return violations;
}

}  // namespace yprov
