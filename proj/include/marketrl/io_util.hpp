#ifndef MARKETRL_IO_UTIL_HPP
#define MARKETRL_IO_UTIL_HPP

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace marketrl {

/// Shortest decimal string that round-trips back to the same double
/// (std::to_chars); "nan"/"inf"/"-inf" for non-finite values.
std::string format_double(double x);

std::string sha256_hex_of_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Minimal comma-separated writer; fields are written verbatim, so callers
/// must not pass text containing commas or newlines.
class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    void write_row(const std::vector<std::string>& fields);

  private:
    std::ofstream out_;
    std::size_t columns_;
};

} // namespace marketrl

#endif
