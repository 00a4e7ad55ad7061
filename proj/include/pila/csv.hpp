#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pila::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name; throws naming the file's header if absent.
  [[nodiscard]] std::size_t column(std::string_view name) const;
};

// Plain comma-separated values, no quoting. Blank lines skipped.
Table read(const std::filesystem::path& path);

// Requires the first line to equal `expected` exactly (after trimming).
void require_header(const Table& t, std::span<const std::string> expected,
                    const std::filesystem::path& path);

double to_double(const std::string& s, std::string_view what);
long to_long(const std::string& s, std::string_view what);

// Shortest representation that round-trips exactly.
std::string format_double(double v);

// Streams rows to a file; throws on I/O failure.
class Writer {
 public:
  Writer(const std::filesystem::path& path, std::span<const std::string> header);
  ~Writer();
  Writer(const Writer&) = delete;
  Writer& operator=(const Writer&) = delete;

  void row(std::span<const std::string> cells);
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pila::csv
