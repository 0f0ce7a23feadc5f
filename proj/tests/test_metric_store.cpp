#include "test_support.hpp"

#include "yprov/error.hpp"
#include "yprov/metric_store.hpp"

#include <gtest/gtest.h>

#include <sys/stat.h>
#include <unistd.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

using namespace yprov;
using yprov::testing::Rng;
using yprov::testing::TempDir;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::InvalidArgument;
}

std::vector<MetricSample> write_series(const fs::path& path, const std::vector<MetricSample>& samples,
                                       StoreOptions options = {})
{
    auto writer = create_store(path, options);
    for (const auto& s : samples) {
        writer.append("loss", "TRAINING", Direction::Output, s);
    }
    writer.finalize();
    return samples;
}

std::string read_bytes(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::string& bytes)
{
    std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
}

std::uint32_t le32(const std::string& bytes, std::size_t at)
{
    std::uint32_t v = 0;
    std::memcpy(&v, bytes.data() + at, 4);
    return v;
}

std::uint64_t le64(const std::string& bytes, std::size_t at)
{
    std::uint64_t v = 0;
    std::memcpy(&v, bytes.data() + at, 8);
    return v;
}

}  // namespace

TEST(StoreFormat, EmptyStoreByteLayout)
{
    TempDir dir;
    auto writer = create_store(dir / "m.ypms");
    const auto summary = writer.finalize();
    const auto bytes = read_bytes(dir / "m.ypms");

    // header 8 + footer length 8 + {"series":[]} 13 + trailer 12
    const std::string footer = R"({"series":[]})";
    ASSERT_EQ(bytes.size(), 8 + 8 + footer.size() + 12);
    EXPECT_EQ(bytes.size(), 41u);
    EXPECT_EQ(bytes.substr(0, 4), "YPMS");
    EXPECT_EQ(bytes[4], 1);
    EXPECT_EQ(bytes[5], 0);
    EXPECT_EQ(bytes[6], 0);
    EXPECT_EQ(bytes[7], 0);
    EXPECT_EQ(le64(bytes, 8), footer.size());
    EXPECT_EQ(bytes.substr(16, footer.size()), footer);
    EXPECT_EQ(le64(bytes, 16 + footer.size()), 8u);
    EXPECT_EQ(bytes.substr(bytes.size() - 4), "YPME");
    EXPECT_EQ(summary.total_bytes, bytes.size());
    EXPECT_TRUE(summary.series.empty());
}

TEST(StoreFormat, ChunkHeaderFields)
{
    TempDir dir;
    Rng rng(3);
    write_series(dir / "m.ypms", yprov::testing::random_walk(rng, 10));
    const auto bytes = read_bytes(dir / "m.ypms");
    EXPECT_EQ(le32(bytes, 8), 0u);   // series id
    EXPECT_EQ(le32(bytes, 12), 10u); // sample count
    EXPECT_EQ(static_cast<std::uint8_t>(bytes[16]), 2u);
    EXPECT_EQ(bytes.substr(17, 3), std::string(3, '\0'));
    const auto len = le32(bytes, 20);
    const auto payload = bytes.substr(24, len);
    const auto crc = le32(bytes, 24 + len);
    EXPECT_EQ(crc, yprov::crc32({reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()}));
}

TEST(StoreWriter, CreateErrors)
{
    TempDir dir;
    write_bytes(dir / "exists.ypms", "x");
    EXPECT_EQ(code_of([&] { (void)create_store(dir / "exists.ypms"); }), ErrorCode::AlreadyExists);
    EXPECT_EQ(code_of([&] { (void)create_store(dir / "no" / "such" / "dir.ypms"); }), ErrorCode::IoError);
    if (geteuid() != 0) {
        fs::create_directory(dir / "ro");
        fs::permissions(dir / "ro", fs::perms::owner_read | fs::perms::owner_exec);
        EXPECT_EQ(code_of([&] { (void)create_store(dir / "ro" / "m.ypms"); }), ErrorCode::IoError);
        fs::permissions(dir / "ro", fs::perms::owner_all);
    }
}

TEST(StoreWriter, BuffersUntilChunkFull)
{
    TempDir dir;
    auto writer = create_store(dir / "m.ypms");
    for (std::uint64_t step = 0; step < 3; ++step) {
        writer.append("loss", "TRAINING", Direction::Output, {step, 0, 0, 1.0});
    }
    EXPECT_EQ(fs::file_size(dir / "m.ypms"), kStoreHeaderSize);
    for (std::uint64_t step = 3; step < 4096; ++step) {
        writer.append("loss", "TRAINING", Direction::Output, {step, 0, 0, 1.0});
    }
    EXPECT_GT(fs::file_size(dir / "m.ypms"), kStoreHeaderSize);
    writer.finalize();
    const auto reader = StoreReader::open(dir / "m.ypms");
    ASSERT_EQ(reader.series().size(), 1u);
    EXPECT_EQ(reader.chunks(reader.series()[0].series_id).size(), 1u);
}

TEST(StoreWriter, StepMustIncrease)
{
    TempDir dir;
    auto writer = create_store(dir / "m.ypms");
    writer.append("loss", "TRAINING", Direction::Output, {5, 0, 0, 1.0});
    EXPECT_EQ(code_of([&] { writer.append("loss", "TRAINING", Direction::Output, {5, 0, 0, 1.0}); }),
              ErrorCode::NonMonotoneStep);
    EXPECT_EQ(code_of([&] { writer.append("loss", "TRAINING", Direction::Output, {4, 0, 0, 1.0}); }),
              ErrorCode::NonMonotoneStep);
    writer.append("loss", "VALIDATION", Direction::Output, {0, 0, 0, 1.0});
    EXPECT_EQ(code_of([&] { writer.append("loss", "TRAINING", Direction::Input, {6, 0, 0, 1.0}); }),
              ErrorCode::InvalidArgument);
}

TEST(StoreWriter, FinalizeOnce)
{
    TempDir dir;
    auto writer = create_store(dir / "m.ypms");
    writer.finalize();
    EXPECT_TRUE(writer.finalized());
    EXPECT_EQ(code_of([&] { writer.finalize(); }), ErrorCode::Finalized);
    EXPECT_EQ(code_of([&] { writer.append("x", "T", Direction::Output, {}); }), ErrorCode::Finalized);
}

TEST(StoreWriter, SummaryMatchesAppends)
{
    TempDir dir;
    auto writer = create_store(dir / "m.ypms", {.chunk_size = 100});
    for (std::uint64_t i = 0; i < 250; ++i) {
        writer.append("loss", "TRAINING", Direction::Output, {i, 0, 0, 0.5});
    }
    for (std::uint64_t i = 0; i < 7; ++i) {
        writer.append("acc", "VALIDATION", Direction::Output, {i, 0, 0, 0.5});
    }
    const auto summary = writer.finalize();
    ASSERT_EQ(summary.series.size(), 2u);
    EXPECT_EQ(summary.series[0].meta.name, "loss");
    EXPECT_EQ(summary.series[0].meta.sample_count, 250u);
    EXPECT_EQ(summary.series[0].chunk_count, 3u);
    EXPECT_EQ(summary.series[1].meta.name, "acc");
    EXPECT_EQ(summary.series[1].meta.sample_count, 7u);
    EXPECT_EQ(summary.total_bytes, fs::file_size(dir / "m.ypms"));
}

TEST(StoreReader, RoundTripBoundaryLengths)
{
    for (const std::size_t n : {0u, 1u, 4095u, 4096u, 4097u, 100'000u}) {
        TempDir dir;
        Rng rng(n);
        auto samples = yprov::testing::random_walk(rng, n);
        if (n > 2) {
            samples[1].value = std::nan("");
            samples[2].value = -HUGE_VAL;
        }
        auto writer = create_store(dir / "m.ypms");
        writer.append("other", "TRAINING", Direction::Input, {0, 0, 0, 1.0});
        for (const auto& s : samples) {
            writer.append("loss", "TRAINING", Direction::Output, s);
        }
        writer.finalize();
        if (n == 0) {
            EXPECT_EQ(code_of([&] { (void)read_series(dir / "m.ypms", "loss", "TRAINING"); }),
                      ErrorCode::UnknownSeries);
            continue;
        }
        EXPECT_EQ(read_series(dir / "m.ypms", "loss", "TRAINING"), samples) << n;
    }
}

TEST(StoreReader, ChunkSizeIsTransparent)
{
    Rng rng(8);
    const auto samples = yprov::testing::random_walk(rng, 5000);
    for (const std::uint32_t chunk : {1u, 7u, 512u, 4096u, 10000u}) {
        for (const auto codec : {Codec::None, Codec::Deflate, Codec::ShuffleDeflate}) {
            TempDir dir;
            write_series(dir / "m.ypms", samples, {.chunk_size = chunk, .codec = codec});
            ASSERT_EQ(read_series(dir / "m.ypms", "loss", "TRAINING"), samples) << chunk;
        }
    }
}

TEST(StoreReader, UnknownSeries)
{
    TempDir dir;
    write_series(dir / "m.ypms", {{0, 0, 0, 1.0}});
    EXPECT_EQ(code_of([&] { (void)read_series(dir / "m.ypms", "loss", "VALIDATION"); }), ErrorCode::UnknownSeries);
    EXPECT_EQ(code_of([&] { (void)read_series(dir / "m.ypms", "nope", "TRAINING"); }), ErrorCode::UnknownSeries);
}

TEST(StoreReader, LastSample)
{
    TempDir dir;
    Rng rng(12);
    const auto samples = write_series(dir / "m.ypms", yprov::testing::random_walk(rng, 9000));
    const auto reader = StoreReader::open(dir / "m.ypms");
    EXPECT_EQ(reader.last_sample("loss", "TRAINING"), samples.back());
}

TEST(StoreReader, TruncationDetected)
{
    TempDir dir;
    Rng rng(13);
    write_series(dir / "m.ypms", yprov::testing::random_walk(rng, 5000));
    const auto bytes = read_bytes(dir / "m.ypms");
    for (const std::size_t keep : {std::size_t{0}, std::size_t{4}, std::size_t{8}, bytes.size() / 2, bytes.size() - 1}) {
        write_bytes(dir / "t.ypms", bytes.substr(0, keep));
        EXPECT_EQ(code_of([&] { (void)read_series(dir / "t.ypms", "loss", "TRAINING"); }), ErrorCode::CorruptFile)
            << keep;
    }
}

TEST(StoreReader, EveryPayloadByteFlipDetected)
{
    TempDir dir;
    Rng rng(14);
    write_series(dir / "m.ypms", yprov::testing::random_walk(rng, 300));
    const auto bytes = read_bytes(dir / "m.ypms");
    const auto len = le32(bytes, 20);
    for (std::size_t offset = 24; offset < 24 + len; ++offset) {
        auto damaged = bytes;
        damaged[offset] = static_cast<char>(damaged[offset] ^ 0x5a);
        write_bytes(dir / "d.ypms", damaged);
        ASSERT_EQ(code_of([&] { (void)read_series(dir / "d.ypms", "loss", "TRAINING"); }), ErrorCode::CorruptFile)
            << offset;
    }
}

TEST(StoreReader, HeaderAndTrailerDamageDetected)
{
    TempDir dir;
    write_series(dir / "m.ypms", {{0, 0, 0, 1.0}});
    const auto bytes = read_bytes(dir / "m.ypms");
    for (const std::size_t offset : {std::size_t{0}, std::size_t{4}, bytes.size() - 1, bytes.size() - 12}) {
        auto damaged = bytes;
        damaged[offset] = static_cast<char>(damaged[offset] ^ 0x01);
        write_bytes(dir / "d.ypms", damaged);
        EXPECT_EQ(code_of([&] { (void)StoreReader::open(dir / "d.ypms"); }), ErrorCode::CorruptFile) << offset;
    }
}

TEST(StoreWriter, ConcurrentAppendsToDistinctSeries)
{
    TempDir dir;
    auto writer = create_store(dir / "m.ypms", {.chunk_size = 256});
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&writer, t] {
            for (std::uint64_t i = 0; i < 3000; ++i) {
                writer.append("m" + std::to_string(t), "SYSTEM", Direction::Output,
                              {i, 0, static_cast<TimestampMs>(i), static_cast<double>(t * 10000 + i)});
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    writer.finalize();
    for (int t = 0; t < 4; ++t) {
        const auto samples = read_series(dir / "m.ypms", "m" + std::to_string(t), "SYSTEM");
        ASSERT_EQ(samples.size(), 3000u);
        for (std::uint64_t i = 0; i < samples.size(); ++i) {
            ASSERT_EQ(samples[i].step, i);
            ASSERT_EQ(samples[i].value, static_cast<double>(t * 10000 + i));
        }
    }
}

TEST(Recovery, UnfinalizedStoreKeepsFlushedChunks)
{
    TempDir dir;
    Rng rng(15);
    const auto samples = yprov::testing::random_walk(rng, 4096 * 2 + 100);
    {
        auto writer = create_store(dir / "m.ypms");
        for (const auto& s : samples) {
            writer.append("loss", "TRAINING", Direction::Output, s);
        }
        // Simulated crash: copy the file before the writer finalizes.
        fs::copy_file(dir / "m.ypms", dir / "crashed.ypms");
        writer.finalize();
    }
    EXPECT_EQ(code_of([&] { (void)StoreReader::open(dir / "crashed.ypms"); }), ErrorCode::CorruptFile);
    const auto recovered = recover_chunks(dir / "crashed.ypms");
    ASSERT_EQ(recovered.size(), 1u);
    const std::vector<MetricSample> expected(samples.begin(), samples.begin() + 4096 * 2);
    EXPECT_EQ(recovered.begin()->second, expected);

    auto bytes = read_bytes(dir / "crashed.ypms");
    write_bytes(dir / "torn.ypms", bytes.substr(0, bytes.size() - 10));
    const auto torn = recover_chunks(dir / "torn.ypms");
    ASSERT_EQ(torn.size(), 1u);
    EXPECT_EQ(torn.begin()->second.size(), 4096u);
}

TEST(SizeReport, EmptyStoreIsDegenerate)
{
    TempDir dir;
    create_store(dir / "m.ypms").finalize();
    const auto report = size_report(dir / "m.ypms");
    EXPECT_TRUE(report.degenerate);
    EXPECT_EQ(report.ratio, 1.0);
    EXPECT_EQ(report.store_bytes, 41u);
}

TEST(SizeReport, InlineRenderingMatchesIndependentOracle)
{
    Rng rng(16);
    std::vector<SeriesSamples> series;
    series.push_back({"loss", "TRAINING", Direction::Output, yprov::testing::random_walk(rng, 3000)});
    series.push_back({"acc", "VALIDATION", Direction::Output, yprov::testing::random_walk(rng, 10)});
    series.push_back({"lr", "TRAINING", Direction::Input, {}});
    series[0].samples[5].value = std::nan("");
    series[0].samples[6].value = HUGE_VAL;
    series[0].samples[7].value = 3.0;
    EXPECT_EQ(inline_prov_json(series), yprov::testing::inline_json_oracle(series));
}

TEST(SizeReport, LargeRandomWalkCompressesBelowBound)
{
    TempDir dir;
    Rng rng(17);
    std::vector<SeriesSamples> series{{"loss", "TRAINING", Direction::Output, yprov::testing::random_walk(rng, 500'000)}};
    write_series(dir / "m.ypms", series[0].samples);
    const auto oracle_bytes = yprov::testing::inline_json_oracle(series).size();
    const auto store_bytes = fs::file_size(dir / "m.ypms");
    const double ratio = static_cast<double>(store_bytes) / static_cast<double>(oracle_bytes);
    EXPECT_LE(ratio, 0.12);
    const auto report = size_report(series, dir / "m.ypms");
    EXPECT_EQ(report.json_equiv_bytes, oracle_bytes);
    EXPECT_EQ(report.store_bytes, store_bytes);
    EXPECT_DOUBLE_EQ(report.ratio, ratio);
    EXPECT_FALSE(report.degenerate);
}
