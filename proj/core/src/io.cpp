#include "wearbench/io.hpp"

#include "wearbench/errors.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace wearbench::io {

namespace {

std::uint64_t to_le(std::uint64_t v) noexcept
{
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        std::uint64_t r = 0;
        for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
        return r;
    }
}

} // namespace

void append_f64_le(std::string& out, std::span<const double> values)
{
    const std::size_t start = out.size();
    out.resize(start + values.size() * 8);
    char* dst = out.data() + start;
    for (double v : values) {
        const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(v));
        std::memcpy(dst, &bits, 8);
        dst += 8;
    }
}

void decode_f64_le(std::string_view bytes, std::span<double> out)
{
    if (bytes.size() != out.size() * 8)
        throw LoadError("binary block holds " + std::to_string(bytes.size()) + " bytes, expected " +
                        std::to_string(out.size() * 8));
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, bytes.data() + 8 * i, 8);
        out[i] = std::bit_cast<double>(to_le(bits));
    }
}

void write_f64_le(const std::filesystem::path& path, std::span<const double> values)
{
    std::string buffer;
    append_f64_le(buffer, values);
    write_text(path, buffer);
}

std::vector<double> read_f64_le(const std::filesystem::path& path)
{
    const std::string bytes = read_text(path);
    if (bytes.size() % 8 != 0)
        throw LoadError(path.string() + ": size " + std::to_string(bytes.size()) + " is not a multiple of 8");
    std::vector<double> values(bytes.size() / 8);
    decode_f64_le(bytes, values);
    return values;
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

std::string format_double(double value)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text)
{
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw LoadError("not a number: '" + std::string(text) + "'");
    return value;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept
{
    return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632be59bd9b4e019ull));
}

std::string hex64(std::uint64_t value)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[value & 0xfu];
        value >>= 4;
    }
    return s;
}

} // namespace wearbench::io
