#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Small file and encoding helpers shared by the dataset, window and
// checkpoint formats. All binary payloads are little-endian IEEE-754 doubles.
namespace wearbench::io {

void append_f64_le(std::string& out, std::span<const double> values);
void decode_f64_le(std::string_view bytes, std::span<double> out);

void write_f64_le(const std::filesystem::path& path, std::span<const double> values);
[[nodiscard]] std::vector<double> read_f64_le(const std::filesystem::path& path);

[[nodiscard]] std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

// Shortest decimal representation that round-trips exactly.
[[nodiscard]] std::string format_double(double value);
[[nodiscard]] double parse_double(std::string_view text);

[[nodiscard]] std::uint64_t fnv1a64(std::string_view bytes) noexcept;
[[nodiscard]] std::uint64_t splitmix64(std::uint64_t x) noexcept;
// Independent stream seed for (master, stream id), e.g. one per tool.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept;
[[nodiscard]] std::string hex64(std::uint64_t value);

} // namespace wearbench::io
