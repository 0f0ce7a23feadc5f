#pragma once

/**
 * YPMS: single-file chunked container for the metric time series of one run.
 * All integers little-endian.
 *
 * @verbatim
 * header   "YPMS"  version u16 = 1  flags u16 = 0                          (8 bytes)
 * chunk*   series_id u32  sample_count u32  codec u8  reserved u8[3]
 *          compressed_len u32  payload[compressed_len]  crc32(payload) u32
 * footer   length u64  canonical JSON {"series":[SeriesMeta + "chunks":[...]]}
 * trailer  footer offset u64  "YPME"                                       (12 bytes)
 * @endverbatim
 *
 * The uncompressed payload is columnar: steps u64[n], epochs u32[n], timestamps i64[n],
 * values f64[n]. Codec 1 deflates it as is. Codec 2 first delta-encodes steps and
 * timestamps and byte-shuffles every column, then deflates. Chunks are self-delimiting so
 * a store without footer (crashed writer) can still be scanned with `recover_chunks`.
 */

#include "yprov/util.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace yprov {

enum class Direction { Input, Output };

std::string_view to_string(Direction direction) noexcept;
std::optional<Direction> direction_from_string(std::string_view text) noexcept;

struct MetricSample
{
    std::uint64_t step = 0;
    std::uint32_t epoch = 0;
    TimestampMs timestamp = 0;
    double value = 0.0;

    /// Values compare bitwise, with every NaN equal to every other NaN.
    friend bool operator==(const MetricSample& a, const MetricSample& b);
};

enum class Codec : std::uint8_t { None = 0, Deflate = 1, ShuffleDeflate = 2 };

struct ChunkDescriptor
{
    std::uint32_t series_id = 0;
    std::uint64_t file_offset = 0;  // start of the chunk header
    std::uint32_t compressed_len = 0;
    std::uint32_t sample_count = 0;
    Codec codec = Codec::ShuffleDeflate;

    friend bool operator==(const ChunkDescriptor&, const ChunkDescriptor&) = default;
};

struct SeriesMeta
{
    std::uint32_t series_id = 0;
    std::string name;
    std::string context;
    Direction direction = Direction::Output;
    std::uint64_t sample_count = 0;

    friend bool operator==(const SeriesMeta&, const SeriesMeta&) = default;
};

struct SeriesSummary
{
    SeriesMeta meta;
    std::size_t chunk_count = 0;
    std::uint64_t stored_bytes = 0;  // chunk headers + payloads + checksums
};

struct StoreSummary
{
    std::vector<SeriesSummary> series;
    std::uint64_t total_bytes = 0;
};

struct StoreOptions
{
    std::uint32_t chunk_size = 4096;
    Codec codec = Codec::ShuffleDeflate;
    int compression_level = 6;
};

inline constexpr std::size_t kStoreHeaderSize = 8;
inline constexpr std::size_t kChunkHeaderSize = 16;
inline constexpr std::size_t kChunkTrailerSize = 4;
inline constexpr std::size_t kStoreTrailerSize = 12;
inline constexpr std::size_t kSampleBytes = 8 + 4 + 8 + 8;

/// Appends are safe from several threads; distinct series only contend briefly on the
/// series table and on the file write.
class StoreWriter
{
public:
    /// Throws AlreadyExists if the file is present, IoError if it cannot be created.
    static StoreWriter create(const std::filesystem::path& path, StoreOptions options = {});

    StoreWriter(StoreWriter&&) noexcept;
    StoreWriter& operator=(StoreWriter&&) noexcept;
    ~StoreWriter();

    /// Throws NonMonotoneStep, Finalized, InvalidArgument (direction differs from the
    /// series' first sample).
    void append(std::string_view name, std::string_view context, Direction direction, const MetricSample& sample);

    /// Throws Finalized on the second call.
    StoreSummary finalize();

    [[nodiscard]] bool finalized() const noexcept;
    [[nodiscard]] const std::filesystem::path& path() const noexcept;
    [[nodiscard]] const StoreOptions& options() const noexcept;

    /// Snapshot of the series table (ids, names, counts so far).
    [[nodiscard]] std::vector<SeriesMeta> series() const;

private:
    struct Impl;
    explicit StoreWriter(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

class StoreReader
{
public:
    /// Validates header, trailer and footer. Throws IoError or CorruptFile.
    static StoreReader open(const std::filesystem::path& path);

    [[nodiscard]] const std::vector<SeriesMeta>& series() const noexcept { return series_; }
    [[nodiscard]] const SeriesMeta* find(std::string_view name, std::string_view context) const;
    [[nodiscard]] std::span<const ChunkDescriptor> chunks(std::uint32_t series_id) const;
    [[nodiscard]] std::uint64_t file_size() const noexcept { return file_size_; }
    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

    /// Throws UnknownSeries or CorruptFile.
    [[nodiscard]] std::vector<MetricSample> read(std::string_view name, std::string_view context) const;
    [[nodiscard]] std::vector<MetricSample> read(std::uint32_t series_id) const;

    /// Last sample by step, or nullopt for an empty series.
    [[nodiscard]] std::optional<MetricSample> last_sample(std::string_view name, std::string_view context) const;

private:
    std::filesystem::path path_;
    std::uint64_t file_size_ = 0;
    std::vector<SeriesMeta> series_;
    std::map<std::uint32_t, std::vector<ChunkDescriptor>> chunks_;
};

StoreWriter create_store(const std::filesystem::path& path, StoreOptions options = {});

std::vector<MetricSample> read_series(const std::filesystem::path& path, std::string_view name,
                                      std::string_view context);

/// Scans chunks forward from the header and stops at the first incomplete or damaged one.
/// Works on stores whose writer never finalized. Keyed by series_id, samples in file order.
std::map<std::uint32_t, std::vector<MetricSample>> recover_chunks(const std::filesystem::path& path);

struct SeriesSamples
{
    std::string name;
    std::string context;
    Direction direction = Direction::Output;
    std::vector<MetricSample> samples;
};

struct SizeReport
{
    std::uint64_t json_equiv_bytes = 0;
    std::uint64_t store_bytes = 0;
    double ratio = 1.0;
    bool degenerate = false;  // no samples at all; ratio pinned to 1.0
};

/// The samples as they would appear inline in PROV-JSON: one entity per series whose
/// attributes are parallel arrays of steps, epochs, xsd:dateTime timestamps and values.
std::string inline_prov_json(std::span<const SeriesSamples> series);

SizeReport size_report(std::span<const SeriesSamples> series, const std::filesystem::path& store_path);

/// Reads every series back from the store and reports against that.
SizeReport size_report(const std::filesystem::path& store_path);

}  // namespace yprov
