#include "tabhybrid/csv.h"

#include <fstream>
#include <sstream>

#include "tabhybrid/common.h"

namespace tabhybrid::csv {

namespace {

// Splits into records; returns false at end of input.
class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {
    // Skip a UTF-8 byte order mark.
    if (text_.starts_with("\xEF\xBB\xBF")) pos_ = 3;
  }

  bool Next(std::vector<std::string>* record) {
    record->clear();
    if (pos_ >= text_.size()) return false;
    std::string field;
    bool quoted = false;
    bool field_started_quoted = false;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (quoted) {
        if (c == '"') {
          if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '"') {
            field.push_back('"');
            pos_ += 2;
            continue;
          }
          quoted = false;
          ++pos_;
          continue;
        }
        field.push_back(c);
        ++pos_;
        continue;
      }
      if (c == '"' && field.empty() && !field_started_quoted) {
        quoted = true;
        field_started_quoted = true;
        ++pos_;
        continue;
      }
      if (c == ',') {
        record->push_back(std::move(field));
        field.clear();
        field_started_quoted = false;
        ++pos_;
        continue;
      }
      if (c == '\r' || c == '\n') {
        ++pos_;
        if (c == '\r' && pos_ < text_.size() && text_[pos_] == '\n') ++pos_;
        record->push_back(std::move(field));
        return true;
      }
      field.push_back(c);
      ++pos_;
    }
    if (quoted) throw Error(ErrorCode::kUnparseableCell, "unterminated quoted field");
    record->push_back(std::move(field));
    return true;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Document Parse(std::string_view text) {
  Document doc;
  Reader reader(text);
  std::vector<std::string> record;
  if (!reader.Next(&record)) return doc;
  doc.header = record;
  while (reader.Next(&record)) {
    // Blank lines carry no data.
    if (record.size() == 1 && record[0].empty()) continue;
    doc.rows.push_back(record);
  }
  return doc;
}

Document ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return Parse(buffer.str());
}

std::string EscapeField(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string JoinRow(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += EscapeField(fields[i]);
  }
  return out;
}

}  // namespace tabhybrid::csv
