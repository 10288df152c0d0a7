#ifndef GAZEFORGE_IO_DIGEST_HPP
#define GAZEFORGE_IO_DIGEST_HPP

#include <filesystem>
#include <string>
#include <string_view>

namespace gazeforge::io {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Whole file as bytes; throws an io error naming the path.
std::string read_file(const std::filesystem::path& path);
/// Creates parent directories as needed.
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace gazeforge::io

#endif  // GAZEFORGE_IO_DIGEST_HPP
