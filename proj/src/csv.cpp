#include "pila/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace pila::csv {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::runtime_error(fmt::format("missing column '{}' (header: {})", name, fmt::join(header, ",")));
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path.string()));
  Table t;
  std::string line;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size())
      throw std::runtime_error(fmt::format("{}:{}: expected {} fields, found {}", path.string(), lineno,
                                           t.header.size(), cells.size()));
    t.rows.push_back(std::move(cells));
  }
  if (!have_header) throw std::runtime_error(fmt::format("'{}' is empty", path.string()));
  return t;
}

void require_header(const Table& t, std::span<const std::string> expected,
                    const std::filesystem::path& path) {
  if (!std::equal(t.header.begin(), t.header.end(), expected.begin(), expected.end()))
    throw std::runtime_error(fmt::format("'{}': header must be '{}', found '{}'", path.string(),
                                         fmt::join(expected, ","), fmt::join(t.header, ",")));
}

double to_double(const std::string& s, std::string_view what) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw std::runtime_error(fmt::format("{}: '{}' is not a number", what, s));
  return v;
}

long to_long(const std::string& s, std::string_view what) {
  long v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw std::runtime_error(fmt::format("{}: '{}' is not an integer", what, s));
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

struct Writer::Impl {
  std::ofstream out;
  std::filesystem::path path;
  std::size_t columns = 0;
};

Writer::Writer(const std::filesystem::path& path, std::span<const std::string> header)
    : impl_(std::make_unique<Impl>()) {
  impl_->path = path;
  impl_->out.open(path, std::ios::binary | std::ios::trunc);
  if (!impl_->out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  impl_->columns = header.size();
  impl_->out << fmt::format("{}\n", fmt::join(header, ","));
}

Writer::~Writer() = default;

void Writer::row(std::span<const std::string> cells) {
  if (cells.size() != impl_->columns)
    throw std::logic_error(fmt::format("'{}': row has {} cells, header has {}", impl_->path.string(),
                                       cells.size(), impl_->columns));
  impl_->out << fmt::format("{}\n", fmt::join(cells, ","));
}

void Writer::close() {
  impl_->out.close();
  if (!impl_->out) throw std::runtime_error(fmt::format("error writing '{}'", impl_->path.string()));
}

}  // namespace pila::csv
