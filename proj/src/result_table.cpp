#include "tcm/result_table.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "tcm/errors.hpp"

namespace tcm {

namespace {

const char* type_name(ColumnType t) {
  switch (t) {
    case ColumnType::Integer: return "int";
    case ColumnType::Real: return "real";
    case ColumnType::Text: return "text";
  }
  return "real";
}

ColumnType parse_type(const std::string& s, const std::string& where) {
  if (s == "int") return ColumnType::Integer;
  if (s == "real") return ColumnType::Real;
  if (s == "text") return ColumnType::Text;
  throw IoError(where + ": unknown column type '" + s + "'");
}

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string cell_text(const Cell& cell) {
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&cell)) return format_real(*d);
  return quote_csv(std::get<std::string>(cell));
}

bool keep_meta(const std::string& key, bool include_timestamp) {
  return include_timestamp || key != "timestamp";
}

std::string column_types(const ResultTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns().size(); ++i) {
    out += (i ? "," : "") + std::string(type_name(table.columns()[i].type));
  }
  return out;
}

}  // namespace

ResultTable::ResultTable(std::vector<Column> schema) : columns_(std::move(schema)) {
  if (columns_.empty()) throw InvalidArgument("result table needs at least one column");
}

void ResultTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns_.size()) throw InvalidArgument("row width does not match the table schema");
  for (std::size_t i = 0; i < row.size(); ++i) {
    const bool ok = (columns_[i].type == ColumnType::Integer && std::holds_alternative<std::int64_t>(row[i])) ||
                    (columns_[i].type == ColumnType::Real && std::holds_alternative<double>(row[i])) ||
                    (columns_[i].type == ColumnType::Text && std::holds_alternative<std::string>(row[i]));
    if (!ok) throw InvalidArgument("cell type mismatch in column '" + columns_[i].name + "'");
  }
  rows_.push_back(std::move(row));
}

void ResultTable::set_meta(const std::string& key, std::string value) {
  if (key.find_first_of("=\n") != std::string::npos || value.find('\n') != std::string::npos) {
    throw InvalidArgument("metadata keys may not contain '=' and values must be single-line");
  }
  for (auto& [k, v] : metadata_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  metadata_.emplace_back(key, std::move(value));
}

std::optional<std::string> ResultTable::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::size_t ResultTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  throw InvalidArgument("no column named '" + name + "'");
}

double ResultTable::real(std::size_t row, const std::string& column) const {
  const auto& cell = rows_.at(row).at(column_index(column));
  if (const auto* d = std::get_if<double>(&cell)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return static_cast<double>(*i);
  throw InvalidArgument("column '" + column + "' is not numeric");
}

std::int64_t ResultTable::integer(std::size_t row, const std::string& column) const {
  const auto& cell = rows_.at(row).at(column_index(column));
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return *i;
  throw InvalidArgument("column '" + column + "' is not an integer column");
}

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string to_csv(const ResultTable& table, bool include_timestamp) {
  std::ostringstream out;
  for (const auto& [k, v] : table.metadata()) {
    if (keep_meta(k, include_timestamp)) out << "# " << k << "=" << v << "\n";
  }
  out << "# column_types=" << column_types(table) << "\n";
  for (std::size_t i = 0; i < table.columns().size(); ++i) out << (i ? "," : "") << quote_csv(table.columns()[i].name);
  out << "\n";
  for (const auto& row : table.rows()) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell_text(row[i]);
    out << "\n";
  }
  return out.str();
}

std::string to_json(const ResultTable& table, bool include_timestamp) {
  nlohmann::ordered_json j;
  j["metadata"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : table.metadata()) {
    if (keep_meta(k, include_timestamp)) j["metadata"][k] = v;
  }
  j["columns"] = nlohmann::ordered_json::array();
  for (const auto& c : table.columns()) j["columns"].push_back({{"name", c.name}, {"type", type_name(c.type)}});
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : table.rows()) {
    auto r = nlohmann::ordered_json::array();
    for (const auto& cell : row) std::visit([&](const auto& v) { r.push_back(v); }, cell);
    j["rows"].push_back(std::move(r));
  }
  return j.dump(1) + "\n";
}

std::string csv_data_section(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  bool in_header = true;
  while (std::getline(in, line)) {
    if (in_header && !line.empty() && line[0] == '#') continue;
    in_header = false;
    out += line + "\n";
  }
  return out;
}

void save_table(const ResultTable& table, const std::filesystem::path& path, TableFormat format) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.parent_path().string() + ": cannot create directory: " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << (format == TableFormat::Csv ? to_csv(table) : to_json(table));
  if (!out) throw IoError(path.string() + ": write failed");
}

ResultTable parse_csv_table(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '#') {
      std::string body = line.substr(1);
      if (!body.empty() && body[0] == ' ') body.erase(0, 1);
      const auto eq = body.find('=');
      if (eq == std::string::npos) {
        throw IoError(source + ":" + std::to_string(lineno) + ": metadata line without '='");
      }
      meta.emplace_back(body.substr(0, eq), body.substr(eq + 1));
      continue;
    }
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw IoError(source + ": missing header row");

  std::vector<Column> columns;
  std::vector<ColumnType> types(header.size(), ColumnType::Real);
  for (const auto& [k, v] : meta) {
    if (k != "column_types") continue;
    const auto names = split_csv_line(v);
    if (names.size() != header.size()) {
      throw IoError(source + ": column_types lists " + std::to_string(names.size()) + " types for " +
                    std::to_string(header.size()) + " columns");
    }
    for (std::size_t i = 0; i < names.size(); ++i) types[i] = parse_type(names[i], source);
  }
  for (std::size_t i = 0; i < header.size(); ++i) columns.push_back({header[i], types[i]});

  ResultTable table(columns);
  for (const auto& [k, v] : meta) {
    if (k != "column_types") table.set_meta(k, v);
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    const std::string where = source + ":" + std::to_string(lineno);
    if (fields.size() != columns.size()) {
      throw IoError(where + ": expected " + std::to_string(columns.size()) + " fields, found " +
                    std::to_string(fields.size()));
    }
    std::vector<Cell> row;
    row.reserve(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      try {
        std::size_t used = 0;
        switch (columns[i].type) {
          case ColumnType::Integer: row.emplace_back(static_cast<std::int64_t>(std::stoll(fields[i], &used))); break;
          case ColumnType::Real: row.emplace_back(std::stod(fields[i], &used)); break;
          case ColumnType::Text: row.emplace_back(fields[i]); used = fields[i].size(); break;
        }
        if (used != fields[i].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw IoError(where + ": cannot parse '" + fields[i] + "' as " + type_name(columns[i].type) +
                      " for column '" + columns[i].name + "'");
      }
    }
    table.add_row(std::move(row));
  }
  return table;
}

ResultTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  if (path.extension() != ".json") return parse_csv_table(text, path.string());

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  try {
    std::vector<Column> columns;
    for (const auto& c : j.at("columns")) {
      columns.push_back({c.at("name").get<std::string>(), parse_type(c.at("type").get<std::string>(), path.string())});
    }
    ResultTable table(columns);
    for (const auto& [k, v] : j.at("metadata").items()) table.set_meta(k, v.get<std::string>());
    for (const auto& r : j.at("rows")) {
      std::vector<Cell> row;
      for (std::size_t i = 0; i < columns.size(); ++i) {
        switch (columns[i].type) {
          case ColumnType::Integer: row.emplace_back(r.at(i).get<std::int64_t>()); break;
          case ColumnType::Real: row.emplace_back(r.at(i).get<double>()); break;
          case ColumnType::Text: row.emplace_back(r.at(i).get<std::string>()); break;
        }
      }
      table.add_row(std::move(row));
    }
    return table;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": malformed table: " + e.what());
  }
}

}  // namespace tcm
