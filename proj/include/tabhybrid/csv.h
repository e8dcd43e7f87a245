#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tabhybrid::csv {

// Comma-separated, double-quote escaped, first row is the header. Both
// "\n" and "\r\n" line endings are accepted.
struct Document {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Document Parse(std::string_view text);
Document ReadFile(const std::filesystem::path& path);

std::string EscapeField(std::string_view field);
std::string JoinRow(const std::vector<std::string>& fields);

}  // namespace tabhybrid::csv
