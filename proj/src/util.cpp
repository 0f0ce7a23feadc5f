#include "yprov/util.hpp"

#include "yprov/error.hpp"

#include <openssl/evp.h>
#include <zlib.h>

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace yprov {

namespace {

using namespace std::chrono;

std::int64_t floor_div(std::int64_t a, std::int64_t b)
{
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
        --q;
    }
    return q;
}

int parse_fixed(std::string_view text, std::size_t pos, std::size_t width)
{
    if (pos + width > text.size()) {
        fail(ErrorCode::InvalidArgument, "truncated timestamp: " + std::string(text));
    }
    int value = 0;
    for (std::size_t i = pos; i < pos + width; ++i) {
        const char c = text[i];
        if (c < '0' || c > '9') {
            fail(ErrorCode::InvalidArgument, "malformed timestamp: " + std::string(text));
        }
        value = value * 10 + (c - '0');
    }
    return value;
}

void expect_char(std::string_view text, std::size_t pos, char expected)
{
    if (pos >= text.size() || (text[pos] != expected
                               && !(expected == 'T' && (text[pos] == 't' || text[pos] == ' ')))) {
        fail(ErrorCode::InvalidArgument, "malformed timestamp: " + std::string(text));
    }
}

struct EvpCtxDeleter
{
    void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};

std::string to_hex(const unsigned char* data, unsigned int len)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0x0f]);
    }
    return out;
}

}  // namespace

std::string format_rfc3339(TimestampMs ms)
{
    const std::int64_t days = floor_div(ms, 86'400'000);
    const std::int64_t in_day = ms - days * 86'400'000;
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    const auto hours = in_day / 3'600'000;
    const auto minutes = (in_day / 60'000) % 60;
    const auto seconds = (in_day / 1000) % 60;
    const auto millis = in_day % 1000;

    char buf[96];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<long long>(hours),
                  static_cast<long long>(minutes), static_cast<long long>(seconds),
                  static_cast<long long>(millis));
    return buf;
}

TimestampMs parse_rfc3339(std::string_view text)
{
    const int year = parse_fixed(text, 0, 4);
    expect_char(text, 4, '-');
    const int month = parse_fixed(text, 5, 2);
    expect_char(text, 7, '-');
    const int day = parse_fixed(text, 8, 2);
    expect_char(text, 10, 'T');
    const int hour = parse_fixed(text, 11, 2);
    expect_char(text, 13, ':');
    const int minute = parse_fixed(text, 14, 2);
    expect_char(text, 16, ':');
    const int second = parse_fixed(text, 17, 2);

    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                             std::chrono::day{static_cast<unsigned>(day)}};
    if (!ymd.ok() || hour > 23 || minute > 59 || second > 60) {
        fail(ErrorCode::InvalidArgument, "timestamp out of range: " + std::string(text));
    }

    std::size_t pos = 19;
    std::int64_t millis = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        int digits = 0;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
            if (digits < 3) {
                millis = millis * 10 + (text[pos] - '0');
            }
            ++digits;
            ++pos;
        }
        if (digits == 0) {
            fail(ErrorCode::InvalidArgument, "empty fraction in timestamp: " + std::string(text));
        }
        for (int i = digits; i < 3; ++i) {
            millis *= 10;
        }
    }

    std::int64_t offset_minutes = 0;
    if (pos < text.size() && (text[pos] == 'Z' || text[pos] == 'z')) {
        ++pos;
    } else if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
        const int sign = text[pos] == '+' ? 1 : -1;
        const int oh = parse_fixed(text, pos + 1, 2);
        expect_char(text, pos + 3, ':');
        const int om = parse_fixed(text, pos + 4, 2);
        offset_minutes = sign * (oh * 60 + om);
        pos += 6;
    } else {
        fail(ErrorCode::InvalidArgument, "timestamp lacks a UTC offset: " + std::string(text));
    }
    if (pos != text.size()) {
        fail(ErrorCode::InvalidArgument, "trailing characters in timestamp: " + std::string(text));
    }

    const std::int64_t days = sys_days{ymd}.time_since_epoch().count();
    return days * 86'400'000 + hour * 3'600'000LL + minute * 60'000LL + second * 1000LL + millis
           - offset_minutes * 60'000;
}

std::string sha256_hex(std::span<const std::uint8_t> bytes)
{
    std::unique_ptr<EVP_MD_CTX, EvpCtxDeleter> ctx{EVP_MD_CTX_new()};
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1
        || EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1
        || EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
        fail(ErrorCode::IoError, "SHA-256 computation failed");
    }
    return to_hex(digest, len);
}

std::string sha256_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    std::unique_ptr<EVP_MD_CTX, EvpCtxDeleter> ctx{EVP_MD_CTX_new()};
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        fail(ErrorCode::IoError, "SHA-256 init failed");
    }
    std::array<char, 1 << 16> buffer{};
    while (in) {
        in.read(buffer.data(), buffer.size());
        const auto got = in.gcount();
        if (got > 0 && EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(got)) != 1) {
            fail(ErrorCode::IoError, "SHA-256 update failed");
        }
    }
    if (in.bad()) {
        fail(ErrorCode::IoError, "read error on " + path.string());
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
        fail(ErrorCode::IoError, "SHA-256 final failed");
    }
    return to_hex(digest, len);
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes)
{
    uLong crc = ::crc32(0L, Z_NULL, 0);
    const std::uint8_t* data = bytes.data();
    std::size_t remaining = bytes.size();
    while (remaining > 0) {
        const auto n = static_cast<uInt>(std::min<std::size_t>(remaining, 1u << 30));
        crc = ::crc32(crc, data, n);
        data += n;
        remaining -= n;
    }
    return static_cast<std::uint32_t>(crc);
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) {
        fail(ErrorCode::IoError, "read error on " + path.string());
    }
    return std::move(buffer).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            fail(ErrorCode::IoError, "cannot write " + tmp.string());
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            fail(ErrorCode::IoError, "write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(ErrorCode::IoError, "cannot rename into " + path.string());
    }
}

std::string format_double(double value)
{
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, end);
}

}  // namespace yprov
