#include "yprov/metric_store.hpp"

#include "yprov/error.hpp"
#include "yprov/prov_json.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <mutex>

namespace yprov {

using nlohmann::json;

namespace {

constexpr char kHeaderMagic[4] = {'Y', 'P', 'M', 'S'};
constexpr char kTrailerMagic[4] = {'Y', 'P', 'M', 'E'};
constexpr std::uint16_t kFormatVersion = 1;

// --- little-endian helpers -------------------------------------------------

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value)
{
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<std::uint8_t>(u & 0xffu));
        u = static_cast<U>(u >> 8);
    }
}

template <typename T>
T get_le(const std::uint8_t* data)
{
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = sizeof(T); i > 0; --i) {
        u = static_cast<U>((u << 8) | data[i - 1]);
    }
    return static_cast<T>(u);
}

[[noreturn]] void corrupt(const std::filesystem::path& path, const std::string& what)
{
    fail(ErrorCode::CorruptFile, path.string() + ": " + what);
}

// --- payload codecs --------------------------------------------------------

std::vector<std::uint8_t> shuffle(std::span<const std::uint8_t> bytes, std::size_t width)
{
    const std::size_t count = bytes.size() / width;
    std::vector<std::uint8_t> out(bytes.size());
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t b = 0; b < width; ++b) {
            out[b * count + i] = bytes[i * width + b];
        }
    }
    return out;
}

std::vector<std::uint8_t> unshuffle(std::span<const std::uint8_t> bytes, std::size_t width)
{
    const std::size_t count = bytes.size() / width;
    std::vector<std::uint8_t> out(bytes.size());
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t b = 0; b < width; ++b) {
            out[i * width + b] = bytes[b * count + i];
        }
    }
    return out;
}

std::vector<std::uint8_t> columnar(std::span<const MetricSample> samples, bool filtered)
{
    const std::size_t n = samples.size();
    std::vector<std::uint8_t> steps, epochs, times, values;
    steps.reserve(n * 8);
    epochs.reserve(n * 4);
    times.reserve(n * 8);
    values.reserve(n * 8);
    std::uint64_t prev_step = 0;
    std::uint64_t prev_time = 0;
    for (const auto& s : samples) {
        const auto t = static_cast<std::uint64_t>(s.timestamp);
        put_le<std::uint64_t>(steps, filtered ? s.step - prev_step : s.step);
        put_le<std::uint32_t>(epochs, s.epoch);
        put_le<std::uint64_t>(times, filtered ? t - prev_time : t);
        put_le<std::uint64_t>(values, std::bit_cast<std::uint64_t>(s.value));
        prev_step = s.step;
        prev_time = t;
    }
    if (filtered) {
        steps = shuffle(steps, 8);
        epochs = shuffle(epochs, 4);
        times = shuffle(times, 8);
        values = shuffle(values, 8);
    }
    std::vector<std::uint8_t> out;
    out.reserve(n * kSampleBytes);
    for (const auto* column : {&steps, &epochs, &times, &values}) {
        out.insert(out.end(), column->begin(), column->end());
    }
    return out;
}

std::vector<MetricSample> from_columnar(std::span<const std::uint8_t> raw, std::size_t n, bool filtered)
{
    auto column = [&](std::size_t offset, std::size_t width) {
        auto bytes = raw.subspan(offset, n * width);
        return filtered ? unshuffle(bytes, width) : std::vector<std::uint8_t>(bytes.begin(), bytes.end());
    };
    const auto steps = column(0, 8);
    const auto epochs = column(n * 8, 4);
    const auto times = column(n * 12, 8);
    const auto values = column(n * 20, 8);

    std::vector<MetricSample> out(n);
    std::uint64_t step = 0;
    std::uint64_t time = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto s = get_le<std::uint64_t>(&steps[i * 8]);
        const auto t = get_le<std::uint64_t>(&times[i * 8]);
        step = filtered ? step + s : s;
        time = filtered ? time + t : t;
        out[i].step = step;
        out[i].epoch = get_le<std::uint32_t>(&epochs[i * 4]);
        out[i].timestamp = static_cast<TimestampMs>(time);
        out[i].value = std::bit_cast<double>(get_le<std::uint64_t>(&values[i * 8]));
    }
    return out;
}

std::vector<std::uint8_t> deflate_raw(std::span<const std::uint8_t> input, int level)
{
    z_stream strm{};
    if (deflateInit2(&strm, level, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
        fail(ErrorCode::IoError, "deflateInit2 failed");
    }
    std::vector<std::uint8_t> out(deflateBound(&strm, static_cast<uLong>(input.size())));
    strm.next_in = const_cast<Bytef*>(input.data());
    strm.avail_in = static_cast<uInt>(input.size());
    strm.next_out = out.data();
    strm.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&strm, Z_FINISH);
    const auto produced = strm.total_out;
    deflateEnd(&strm);
    if (rc != Z_STREAM_END) {
        fail(ErrorCode::IoError, "deflate failed");
    }
    out.resize(produced);
    return out;
}

std::optional<std::vector<std::uint8_t>> inflate_raw(std::span<const std::uint8_t> input, std::size_t expected)
{
    z_stream strm{};
    if (inflateInit2(&strm, -15) != Z_OK) {
        return std::nullopt;
    }
    std::vector<std::uint8_t> out(expected);
    strm.next_in = const_cast<Bytef*>(input.data());
    strm.avail_in = static_cast<uInt>(input.size());
    strm.next_out = out.data();
    strm.avail_out = static_cast<uInt>(out.size());
    int rc = inflate(&strm, Z_FINISH);
    if (rc == Z_BUF_ERROR && strm.avail_out == 0) {
        // Output full but stream not finished: more data than declared.
        rc = Z_DATA_ERROR;
    }
    const bool ok = rc == Z_STREAM_END && strm.total_out == expected && strm.avail_in == 0;
    inflateEnd(&strm);
    if (!ok) {
        return std::nullopt;
    }
    return out;
}

std::vector<std::uint8_t> encode_payload(std::span<const MetricSample> samples, Codec codec, int level)
{
    switch (codec) {
    case Codec::None: return columnar(samples, false);
    case Codec::Deflate: return deflate_raw(columnar(samples, false), level);
    case Codec::ShuffleDeflate: return deflate_raw(columnar(samples, true), level);
    }
    fail(ErrorCode::InvalidArgument, "unknown codec");
}

std::optional<std::vector<MetricSample>> decode_payload(std::span<const std::uint8_t> payload, Codec codec,
                                                        std::size_t count)
{
    const std::size_t raw_size = count * kSampleBytes;
    switch (codec) {
    case Codec::None:
        if (payload.size() != raw_size) {
            return std::nullopt;
        }
        return from_columnar(payload, count, false);
    case Codec::Deflate:
    case Codec::ShuffleDeflate: {
        // deflate cannot expand data by more than ~1032x; larger claims are corruption
        if (raw_size / 1032 > payload.size() + 1) {
            return std::nullopt;
        }
        const auto raw = inflate_raw(payload, raw_size);
        if (!raw) {
            return std::nullopt;
        }
        return from_columnar(*raw, count, codec == Codec::ShuffleDeflate);
    }
    }
    return std::nullopt;
}

bool valid_codec(std::uint8_t byte)
{
    return byte <= static_cast<std::uint8_t>(Codec::ShuffleDeflate);
}

struct FileCloser
{
    void operator()(std::FILE* f) const
    {
        if (f) {
            std::fclose(f);
        }
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

json footer_json(const std::vector<std::pair<SeriesMeta, std::vector<ChunkDescriptor>>>& series)
{
    json list = json::array();
    for (const auto& [meta, chunks] : series) {
        json chunk_list = json::array();
        for (const auto& c : chunks) {
            chunk_list.push_back({{"codec", static_cast<int>(c.codec)},
                                  {"compressed_len", c.compressed_len},
                                  {"file_offset", c.file_offset},
                                  {"sample_count", c.sample_count}});
        }
        list.push_back({{"chunks", std::move(chunk_list)},
                        {"context", meta.context},
                        {"direction", std::string(to_string(meta.direction))},
                        {"name", meta.name},
                        {"sample_count", meta.sample_count},
                        {"series_id", meta.series_id}});
    }
    return json{{"series", std::move(list)}};
}

}  // namespace

std::string_view to_string(Direction direction) noexcept
{
    return direction == Direction::Input ? "input" : "output";
}

std::optional<Direction> direction_from_string(std::string_view text) noexcept
{
    if (text == "input") {
        return Direction::Input;
    }
    if (text == "output") {
        return Direction::Output;
    }
    return std::nullopt;
}

bool operator==(const MetricSample& a, const MetricSample& b)
{
    if (a.step != b.step || a.epoch != b.epoch || a.timestamp != b.timestamp) {
        return false;
    }
    if (std::isnan(a.value) && std::isnan(b.value)) {
        return true;
    }
    return std::bit_cast<std::uint64_t>(a.value) == std::bit_cast<std::uint64_t>(b.value);
}

// ---------------------------------------------------------------------------
// StoreWriter

struct StoreWriter::Impl
{
    struct Series
    {
        SeriesMeta meta;
        std::mutex mutex;
        std::vector<MetricSample> buffer;
        std::optional<std::uint64_t> last_step;
        std::vector<ChunkDescriptor> chunks;
        std::uint64_t stored_bytes = 0;
    };

    std::filesystem::path path;
    StoreOptions options;
    FilePtr file;
    std::mutex file_mutex;
    std::uint64_t offset = 0;

    mutable std::mutex table_mutex;
    std::map<std::pair<std::string, std::string>, std::unique_ptr<Series>> by_key;
    std::vector<Series*> by_id;
    bool finalized = false;

    void write_bytes(std::span<const std::uint8_t> bytes)
    {
        if (std::fwrite(bytes.data(), 1, bytes.size(), file.get()) != bytes.size()) {
            fail(ErrorCode::IoError, "write failed on " + path.string() + ": " + std::strerror(errno));
        }
        offset += bytes.size();
    }

    // Caller holds series.mutex, so chunks of one series land in step order.
    void flush_series(Series& series)
    {
        if (series.buffer.empty()) {
            return;
        }
        const auto payload = encode_payload(series.buffer, options.codec, options.compression_level);
        if (payload.size() > std::numeric_limits<std::uint32_t>::max()) {
            fail(ErrorCode::InvalidArgument, "chunk payload exceeds 4 GiB; lower chunk_size");
        }
        std::vector<std::uint8_t> bytes;
        bytes.reserve(kChunkHeaderSize + payload.size() + kChunkTrailerSize);
        const auto count = static_cast<std::uint32_t>(series.buffer.size());
        put_le<std::uint32_t>(bytes, series.meta.series_id);
        put_le<std::uint32_t>(bytes, count);
        bytes.push_back(static_cast<std::uint8_t>(options.codec));
        bytes.insert(bytes.end(), {0, 0, 0});
        put_le<std::uint32_t>(bytes, static_cast<std::uint32_t>(payload.size()));
        bytes.insert(bytes.end(), payload.begin(), payload.end());
        put_le<std::uint32_t>(bytes, crc32(payload));

        std::lock_guard file_lock(file_mutex);
        const auto chunk_offset = offset;
        write_bytes(bytes);
        if (std::fflush(file.get()) != 0) {
            fail(ErrorCode::IoError, "flush failed on " + path.string());
        }
        series.chunks.push_back(ChunkDescriptor{series.meta.series_id, chunk_offset,
                                                static_cast<std::uint32_t>(payload.size()), count, options.codec});
        series.stored_bytes += bytes.size();
        series.buffer.clear();
    }
};

StoreWriter::StoreWriter(std::unique_ptr<Impl> impl) :
    impl_(std::move(impl))
{}

StoreWriter::StoreWriter(StoreWriter&&) noexcept = default;
StoreWriter& StoreWriter::operator=(StoreWriter&&) noexcept = default;
StoreWriter::~StoreWriter() = default;

StoreWriter StoreWriter::create(const std::filesystem::path& path, StoreOptions options)
{
    if (options.chunk_size == 0) {
        fail(ErrorCode::InvalidArgument, "chunk_size must be positive");
    }
    if (!valid_codec(static_cast<std::uint8_t>(options.codec))) {
        fail(ErrorCode::InvalidArgument, "unknown codec");
    }
    std::error_code ec;
    if (std::filesystem::exists(path, ec)) {
        fail(ErrorCode::AlreadyExists, path.string());
    }
    FilePtr file{std::fopen(path.c_str(), "wbx")};
    if (!file) {
        if (errno == EEXIST) {
            fail(ErrorCode::AlreadyExists, path.string());
        }
        fail(ErrorCode::IoError, "cannot create " + path.string() + ": " + std::strerror(errno));
    }
    auto impl = std::make_unique<Impl>();
    impl->path = path;
    impl->options = options;
    impl->file = std::move(file);

    std::vector<std::uint8_t> header(kHeaderMagic, kHeaderMagic + 4);
    put_le<std::uint16_t>(header, kFormatVersion);
    put_le<std::uint16_t>(header, 0);
    impl->write_bytes(header);
    if (std::fflush(impl->file.get()) != 0) {
        fail(ErrorCode::IoError, "flush failed on " + path.string());
    }
    return StoreWriter(std::move(impl));
}

void StoreWriter::append(std::string_view name, std::string_view context, Direction direction,
                         const MetricSample& sample)
{
    Impl::Series* series = nullptr;
    {
        std::lock_guard lock(impl_->table_mutex);
        if (impl_->finalized) {
            fail(ErrorCode::Finalized, impl_->path.string());
        }
        auto it = impl_->by_key.find(std::pair(std::string(name), std::string(context)));
        if (it == impl_->by_key.end()) {
            if (name.empty()) {
                fail(ErrorCode::InvalidArgument, "series name must not be empty");
            }
            auto created = std::make_unique<Impl::Series>();
            created->meta.series_id = static_cast<std::uint32_t>(impl_->by_id.size());
            created->meta.name = std::string(name);
            created->meta.context = std::string(context);
            created->meta.direction = direction;
            impl_->by_id.push_back(created.get());
            it = impl_->by_key.emplace(std::pair(std::string(name), std::string(context)), std::move(created)).first;
        }
        series = it->second.get();
    }

    std::lock_guard lock(series->mutex);
    if (series->meta.direction != direction) {
        fail(ErrorCode::InvalidArgument, "series " + std::string(name) + "@" + std::string(context)
                                             + " was declared as " + std::string(to_string(series->meta.direction)));
    }
    if (series->last_step && sample.step <= *series->last_step) {
        fail(ErrorCode::NonMonotoneStep, std::string(name) + "@" + std::string(context) + ": step "
                                             + std::to_string(sample.step) + " after "
                                             + std::to_string(*series->last_step));
    }
    series->buffer.push_back(sample);
    series->last_step = sample.step;
    ++series->meta.sample_count;
    if (series->buffer.size() >= impl_->options.chunk_size) {
        impl_->flush_series(*series);
    }
}

StoreSummary StoreWriter::finalize()
{
    std::lock_guard lock(impl_->table_mutex);
    if (impl_->finalized) {
        fail(ErrorCode::Finalized, impl_->path.string());
    }
    impl_->finalized = true;

    std::vector<std::pair<SeriesMeta, std::vector<ChunkDescriptor>>> table;
    StoreSummary summary;
    for (auto* series : impl_->by_id) {
        std::lock_guard series_lock(series->mutex);
        impl_->flush_series(*series);
        table.emplace_back(series->meta, series->chunks);
        summary.series.push_back(SeriesSummary{series->meta, series->chunks.size(), series->stored_bytes});
    }

    std::lock_guard file_lock(impl_->file_mutex);
    const auto footer_offset = impl_->offset;
    const auto footer = canonical_dump(footer_json(table));
    std::vector<std::uint8_t> tail;
    put_le<std::uint64_t>(tail, footer.size());
    tail.insert(tail.end(), footer.begin(), footer.end());
    put_le<std::uint64_t>(tail, footer_offset);
    tail.insert(tail.end(), kTrailerMagic, kTrailerMagic + 4);
    impl_->write_bytes(tail);

    if (std::fclose(impl_->file.release()) != 0) {
        fail(ErrorCode::IoError, "close failed on " + impl_->path.string());
    }
    summary.total_bytes = impl_->offset;
    return summary;
}

bool StoreWriter::finalized() const noexcept
{
    std::lock_guard lock(impl_->table_mutex);
    return impl_->finalized;
}

const std::filesystem::path& StoreWriter::path() const noexcept
{
    return impl_->path;
}

const StoreOptions& StoreWriter::options() const noexcept
{
    return impl_->options;
}

std::vector<SeriesMeta> StoreWriter::series() const
{
    std::lock_guard lock(impl_->table_mutex);
    std::vector<SeriesMeta> out;
    for (auto* series : impl_->by_id) {
        std::lock_guard series_lock(series->mutex);
        out.push_back(series->meta);
    }
    return out;
}

StoreWriter create_store(const std::filesystem::path& path, StoreOptions options)
{
    return StoreWriter::create(path, options);
}

// ---------------------------------------------------------------------------
// StoreReader

namespace {

std::string read_all(const std::filesystem::path& path)
{
    return read_file(path);
}

const std::uint8_t* bytes_of(const std::string& s)
{
    return reinterpret_cast<const std::uint8_t*>(s.data());
}

void check_header(const std::string& data, const std::filesystem::path& path)
{
    if (data.size() < kStoreHeaderSize || std::memcmp(data.data(), kHeaderMagic, 4) != 0) {
        corrupt(path, "missing YPMS header");
    }
    const auto version = get_le<std::uint16_t>(bytes_of(data) + 4);
    if (version != kFormatVersion) {
        corrupt(path, "unsupported version " + std::to_string(version));
    }
}

}  // namespace

StoreReader StoreReader::open(const std::filesystem::path& path)
{
    const auto data = read_all(path);
    check_header(data, path);
    const std::uint64_t size = data.size();
    if (size < kStoreHeaderSize + 8 + kStoreTrailerSize
        || std::memcmp(data.data() + size - 4, kTrailerMagic, 4) != 0) {
        corrupt(path, "missing YPME trailer");
    }
    const auto footer_offset = get_le<std::uint64_t>(bytes_of(data) + size - kStoreTrailerSize);
    if (footer_offset < kStoreHeaderSize || footer_offset > size - kStoreTrailerSize - 8) {
        corrupt(path, "footer offset out of range");
    }
    const auto footer_len = get_le<std::uint64_t>(bytes_of(data) + footer_offset);
    if (footer_len != size - kStoreTrailerSize - footer_offset - 8) {
        corrupt(path, "footer length mismatch");
    }

    StoreReader reader;
    reader.path_ = path;
    reader.file_size_ = size;
    try {
        const auto footer = json::parse(data.begin() + static_cast<std::ptrdiff_t>(footer_offset + 8),
                                        data.end() - static_cast<std::ptrdiff_t>(kStoreTrailerSize));
        for (const auto& entry : footer.at("series")) {
            SeriesMeta meta;
            meta.series_id = entry.at("series_id").get<std::uint32_t>();
            meta.name = entry.at("name").get<std::string>();
            meta.context = entry.at("context").get<std::string>();
            const auto direction = direction_from_string(entry.at("direction").get<std::string>());
            if (!direction) {
                corrupt(path, "bad direction in footer");
            }
            meta.direction = *direction;
            meta.sample_count = entry.at("sample_count").get<std::uint64_t>();

            std::uint64_t counted = 0;
            auto& chunks = reader.chunks_[meta.series_id];
            for (const auto& c : entry.at("chunks")) {
                ChunkDescriptor d;
                d.series_id = meta.series_id;
                d.file_offset = c.at("file_offset").get<std::uint64_t>();
                d.compressed_len = c.at("compressed_len").get<std::uint32_t>();
                d.sample_count = c.at("sample_count").get<std::uint32_t>();
                const auto codec = c.at("codec").get<int>();
                if (codec < 0 || !valid_codec(static_cast<std::uint8_t>(codec))) {
                    corrupt(path, "unknown codec in footer");
                }
                d.codec = static_cast<Codec>(codec);
                if (d.file_offset < kStoreHeaderSize
                    || d.file_offset + kChunkHeaderSize + d.compressed_len + kChunkTrailerSize > footer_offset) {
                    corrupt(path, "chunk outside the chunk stream");
                }
                counted += d.sample_count;
                chunks.push_back(d);
            }
            if (counted != meta.sample_count) {
                corrupt(path, "sample count mismatch for series " + meta.name);
            }
            reader.series_.push_back(std::move(meta));
        }
    } catch (const json::exception& e) {
        corrupt(path, std::string("unreadable footer: ") + e.what());
    }
    return reader;
}

const SeriesMeta* StoreReader::find(std::string_view name, std::string_view context) const
{
    for (const auto& meta : series_) {
        if (meta.name == name && meta.context == context) {
            return &meta;
        }
    }
    return nullptr;
}

std::span<const ChunkDescriptor> StoreReader::chunks(std::uint32_t series_id) const
{
    const auto it = chunks_.find(series_id);
    if (it == chunks_.end()) {
        return {};
    }
    return it->second;
}

std::vector<MetricSample> StoreReader::read(std::string_view name, std::string_view context) const
{
    const auto* meta = find(name, context);
    if (!meta) {
        fail(ErrorCode::UnknownSeries, std::string(name) + "@" + std::string(context));
    }
    return read(meta->series_id);
}

std::vector<MetricSample> StoreReader::read(std::uint32_t series_id) const
{
    const auto it = chunks_.find(series_id);
    if (it == chunks_.end()) {
        fail(ErrorCode::UnknownSeries, "series_id " + std::to_string(series_id));
    }
    const auto data = read_all(path_);
    if (data.size() != file_size_) {
        corrupt(path_, "file changed size since open");
    }
    std::vector<MetricSample> out;
    for (const auto& d : it->second) {
        const auto* chunk = bytes_of(data) + d.file_offset;
        if (get_le<std::uint32_t>(chunk) != d.series_id || get_le<std::uint32_t>(chunk + 4) != d.sample_count
            || chunk[8] != static_cast<std::uint8_t>(d.codec) || get_le<std::uint32_t>(chunk + 12) != d.compressed_len) {
            corrupt(path_, "chunk header at offset " + std::to_string(d.file_offset) + " disagrees with index");
        }
        const std::span<const std::uint8_t> payload(chunk + kChunkHeaderSize, d.compressed_len);
        if (crc32(payload) != get_le<std::uint32_t>(chunk + kChunkHeaderSize + d.compressed_len)) {
            corrupt(path_, "checksum mismatch in chunk at offset " + std::to_string(d.file_offset));
        }
        auto samples = decode_payload(payload, d.codec, d.sample_count);
        if (!samples) {
            corrupt(path_, "undecodable chunk at offset " + std::to_string(d.file_offset));
        }
        for (const auto& s : *samples) {
            if (!out.empty() && s.step <= out.back().step) {
                corrupt(path_, "steps out of order in series " + std::to_string(series_id));
            }
            out.push_back(s);
        }
    }
    return out;
}

std::optional<MetricSample> StoreReader::last_sample(std::string_view name, std::string_view context) const
{
    auto samples = read(name, context);
    if (samples.empty()) {
        return std::nullopt;
    }
    return samples.back();
}

std::vector<MetricSample> read_series(const std::filesystem::path& path, std::string_view name,
                                      std::string_view context)
{
    return StoreReader::open(path).read(name, context);
}

std::map<std::uint32_t, std::vector<MetricSample>> recover_chunks(const std::filesystem::path& path)
{
    const auto data = read_all(path);
    check_header(data, path);
    std::map<std::uint32_t, std::vector<MetricSample>> out;
    std::size_t pos = kStoreHeaderSize;
    while (pos + kChunkHeaderSize + kChunkTrailerSize <= data.size()) {
        const auto* chunk = bytes_of(data) + pos;
        const auto series_id = get_le<std::uint32_t>(chunk);
        const auto count = get_le<std::uint32_t>(chunk + 4);
        const auto codec = chunk[8];
        const auto len = get_le<std::uint32_t>(chunk + 12);
        if (!valid_codec(codec) || chunk[9] != 0 || chunk[10] != 0 || chunk[11] != 0
            || pos + kChunkHeaderSize + len + kChunkTrailerSize > data.size()) {
            break;
        }
        const std::span<const std::uint8_t> payload(chunk + kChunkHeaderSize, len);
        if (crc32(payload) != get_le<std::uint32_t>(chunk + kChunkHeaderSize + len)) {
            break;
        }
        auto samples = decode_payload(payload, static_cast<Codec>(codec), count);
        if (!samples) {
            break;
        }
        auto& series = out[series_id];
        series.insert(series.end(), samples->begin(), samples->end());
        pos += kChunkHeaderSize + len + kChunkTrailerSize;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Size accounting

std::string inline_prov_json(std::span<const SeriesSamples> series)
{
    json entities = json::object();
    for (const auto& s : series) {
        json steps = json::array();
        json epochs = json::array();
        json times = json::array();
        json values = json::array();
        for (const auto& sample : s.samples) {
            steps.push_back(sample.step);
            epochs.push_back(sample.epoch);
            times.push_back({{"$", format_rfc3339(sample.timestamp)}, {"type", "xsd:dateTime"}});
            values.push_back(attribute_to_json(AttributeValue::real(sample.value)));
        }
        entities["yprov4ml:metric/" + s.context + "/" + s.name] = {
            {"yprov4ml:name", s.name},
            {"yprov4ml:context", s.context},
            {"yprov4ml:direction", std::string(to_string(s.direction))},
            {"yprov4ml:steps", std::move(steps)},
            {"yprov4ml:epochs", std::move(epochs)},
            {"yprov4ml:timestamps", std::move(times)},
            {"yprov4ml:values", std::move(values)},
        };
    }
    return canonical_dump(json{{"entity", std::move(entities)}});
}

SizeReport size_report(std::span<const SeriesSamples> series, const std::filesystem::path& store_path)
{
    SizeReport report;
    std::error_code ec;
    const auto size = std::filesystem::file_size(store_path, ec);
    if (ec) {
        fail(ErrorCode::IoError, "cannot stat " + store_path.string());
    }
    report.store_bytes = size;
    std::size_t total_samples = 0;
    for (const auto& s : series) {
        total_samples += s.samples.size();
    }
    if (total_samples == 0) {
        report.degenerate = true;
        report.ratio = 1.0;
        report.json_equiv_bytes = inline_prov_json(series).size();
        return report;
    }
    report.json_equiv_bytes = inline_prov_json(series).size();
    report.ratio = static_cast<double>(report.store_bytes) / static_cast<double>(report.json_equiv_bytes);
    return report;
}

SizeReport size_report(const std::filesystem::path& store_path)
{
    const auto reader = StoreReader::open(store_path);
    std::vector<SeriesSamples> series;
    for (const auto& meta : reader.series()) {
        series.push_back({meta.name, meta.context, meta.direction, reader.read(meta.series_id)});
    }
    return size_report(series, store_path);
}

}  // namespace yprov
