#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace hybridsynth::csv {

// Untyped CSV contents. Empty cells are kept as empty strings; the typed
// layer decides whether that means "missing".
struct Document {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column_index(const std::string& name) const;  // throws DataError
  bool has_column(const std::string& name) const;
};

Document parse(std::istream& in);
Document read_file(const std::filesystem::path& path);

void write(std::ostream& out, const Document& doc);
void write_file(const std::filesystem::path& path, const Document& doc);

// Quotes a field only when it contains a delimiter, quote or newline.
std::string escape(const std::string& field);

// Round-trippable text for a double (17 significant digits).
std::string format_double(double v);

}  // namespace hybridsynth::csv
