#include "yprov/zarr_export.hpp"

#include "yprov/error.hpp"
#include "yprov/prov_json.hpp"

#include <bit>
#include <cctype>
#include <set>

namespace yprov {

using nlohmann::json;

namespace {

std::string sanitize(std::string_view text)
{
    std::string out;
    for (const char c : text) {
        const auto u = static_cast<unsigned char>(c);
        out.push_back(std::isalnum(u) || c == '_' || c == '.' || c == '-' ? c : '_');
    }
    if (out.empty() || out == "." || out == "..") {
        out = "_" + out;
    }
    return out;
}

void write_json(const std::filesystem::path& path, const json& value)
{
    write_file_atomic(path, canonical_dump(value) + "\n");
}

void append_le(std::string& out, std::uint64_t bits, std::size_t width)
{
    for (std::size_t i = 0; i < width; ++i) {
        out.push_back(static_cast<char>(bits & 0xffu));
        bits >>= 8;
    }
}

/// `get` returns the element's bit pattern; the low `Width` bytes are stored.
template <std::size_t Width, typename Get>
void write_array(const std::filesystem::path& dir, std::string_view dtype, const std::vector<MetricSample>& samples,
                 std::uint32_t chunk_length, Get get)
{
    std::filesystem::create_directories(dir);
    write_json(dir / ".zarray", json{{"chunks", json::array({chunk_length})},
                                    {"compressor", nullptr},
                                    {"dtype", std::string(dtype)},
                                    {"fill_value", 0},
                                    {"filters", nullptr},
                                    {"order", "C"},
                                    {"shape", json::array({samples.size()})},
                                    {"zarr_format", 2}});
    for (std::size_t begin = 0, index = 0; begin < samples.size(); begin += chunk_length, ++index) {
        std::string bytes;
        bytes.reserve(std::size_t{chunk_length} * Width);
        for (std::size_t i = begin; i < begin + chunk_length; ++i) {
            append_le(bytes, i < samples.size() ? get(samples[i]) : 0, Width);
        }
        write_file_atomic(dir / std::to_string(index), bytes);
    }
}

}  // namespace

void export_zarr(const StoreReader& store, const std::filesystem::path& out_dir, std::uint32_t chunk_length)
{
    if (chunk_length == 0) {
        fail(ErrorCode::InvalidArgument, "chunk length must be positive");
    }
    std::error_code ec;
    if (std::filesystem::exists(out_dir, ec) && !std::filesystem::is_empty(out_dir, ec)) {
        fail(ErrorCode::AlreadyExists, out_dir.string());
    }
    try {
        std::filesystem::create_directories(out_dir);
        write_json(out_dir / ".zgroup", json{{"zarr_format", 2}});

        std::set<std::string> used;
        for (const auto& meta : store.series()) {
            const auto context_dir = out_dir / sanitize(meta.context);
            if (!std::filesystem::exists(context_dir / ".zgroup")) {
                std::filesystem::create_directories(context_dir);
                write_json(context_dir / ".zgroup", json{{"zarr_format", 2}});
            }
            auto leaf = sanitize(meta.name);
            while (!used.insert(sanitize(meta.context) + "/" + leaf).second) {
                leaf += "_" + std::to_string(meta.series_id);
            }
            const auto series_dir = context_dir / leaf;
            std::filesystem::create_directories(series_dir);
            write_json(series_dir / ".zgroup", json{{"zarr_format", 2}});
            write_json(series_dir / ".zattrs", json{{"context", meta.context},
                                                    {"direction", std::string(to_string(meta.direction))},
                                                    {"name", meta.name},
                                                    {"series_id", meta.series_id}});

            const auto samples = store.read(meta.series_id);
            write_array<8>(series_dir / "steps", "<u8", samples, chunk_length,
                           [](const MetricSample& s) -> std::uint64_t { return s.step; });
            write_array<4>(series_dir / "epochs", "<u4", samples, chunk_length,
                           [](const MetricSample& s) -> std::uint64_t { return s.epoch; });
            write_array<8>(series_dir / "timestamps", "<i8", samples, chunk_length,
                           [](const MetricSample& s) { return static_cast<std::uint64_t>(s.timestamp); });
            write_array<8>(series_dir / "values", "<f8", samples, chunk_length,
                           [](const MetricSample& s) { return std::bit_cast<std::uint64_t>(s.value); });
        }
    } catch (const std::filesystem::filesystem_error& e) {
        fail(ErrorCode::IoError, e.what());
    }
}

}  // namespace yprov
