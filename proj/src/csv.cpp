#include "lfm/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace lfm::csv {

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    lines.push_back(line);
  }
  if (lines.empty()) throw CsvError("file has no data rows: " + path);
  return lines;
}

bool is_missing_cell(const std::string& cell) { return cell.empty() || cell == "NA"; }

double parse_number(const std::string& cell, const std::string& path) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw CsvError("cannot parse numeric cell '" + cell + "' in " + path);
  }
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

MaskedPanel read_panel_wide(const std::string& path) {
  const auto lines = read_lines(path);
  const auto header = split_line(lines[0]);
  if (header.size() < 3) throw CsvError("wide panel needs a unit column and >= 2 periods");

  std::vector<std::string> time_ids(header.begin() + 1, header.end());
  const Index T = static_cast<Index>(time_ids.size());
  const Index n = static_cast<Index>(lines.size()) - 1;

  Matrix values = Matrix::Zero(n, T);
  MaskMatrix mask = MaskMatrix::Zero(n, T);
  std::vector<std::string> unit_ids;
  for (Index i = 0; i < n; ++i) {
    const auto cells = split_line(lines[static_cast<std::size_t>(i) + 1]);
    if (static_cast<Index>(cells.size()) != T + 1)
      throw CsvError("row " + std::to_string(i + 2) + " has " + std::to_string(cells.size()) +
                     " cells, expected " + std::to_string(T + 1) + " in " + path);
    unit_ids.push_back(cells[0]);
    for (Index t = 0; t < T; ++t) {
      const std::string& cell = cells[static_cast<std::size_t>(t) + 1];
      if (is_missing_cell(cell)) continue;
      values(i, t) = parse_number(cell, path);
      mask(i, t) = 1;
    }
  }
  return MaskedPanel::make(std::move(values), std::move(mask), std::move(unit_ids),
                           std::move(time_ids));
}

MaskedPanel read_panel_long(const std::string& path) {
  const auto lines = read_lines(path);
  const auto header = split_line(lines[0]);
  if (header.size() != 3) throw CsvError("long panel needs exactly unit,time,value columns");

  std::vector<std::string> unit_ids, time_ids;
  std::map<std::string, Index> unit_pos, time_pos;
  struct Row { Index i, t; double v; };
  std::vector<Row> rows;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto cells = split_line(lines[k]);
    if (cells.size() != 3) throw CsvError("malformed long row in " + path);
    auto [ui, unit_new] = unit_pos.try_emplace(cells[0], static_cast<Index>(unit_ids.size()));
    if (unit_new) unit_ids.push_back(cells[0]);
    auto [ti, time_new] = time_pos.try_emplace(cells[1], static_cast<Index>(time_ids.size()));
    if (time_new) time_ids.push_back(cells[1]);
    rows.push_back({ui->second, ti->second, parse_number(cells[2], path)});
  }

  const Index n = static_cast<Index>(unit_ids.size());
  const Index T = static_cast<Index>(time_ids.size());
  Matrix values = Matrix::Zero(n, T);
  MaskMatrix mask = MaskMatrix::Zero(n, T);
  for (const auto& row : rows) {
    if (mask(row.i, row.t))
      throw CsvError("duplicate (unit,time) row in " + path);
    values(row.i, row.t) = row.v;
    mask(row.i, row.t) = 1;
  }
  return MaskedPanel::make(std::move(values), std::move(mask), std::move(unit_ids),
                           std::move(time_ids));
}

void write_panel_wide(const std::string& path, const Matrix& values, const MaskMatrix& mask,
                      const std::vector<std::string>& unit_ids,
                      const std::vector<std::string>& time_ids,
                      const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot write file: " + path);
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  out << "unit";
  for (const auto& t : time_ids) out << ',' << t;
  out << '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    out << unit_ids[static_cast<std::size_t>(i)];
    for (Index t = 0; t < values.cols(); ++t) {
      out << ',';
      if (!mask(i, t)) continue;
      if (std::isnan(values(i, t)))
        out << "NA";
      else
        out << format_value(values(i, t));
    }
    out << '\n';
  }
}

CovariateVector read_covariates(const std::string& path,
                                const std::vector<std::string>& unit_ids,
                                const std::vector<bool>& discrete) {
  const auto lines = read_lines(path);
  const auto header = split_line(lines[0]);
  if (header.size() < 2) throw CsvError("covariate file needs unit plus >= 1 column");
  const Index K = static_cast<Index>(header.size()) - 1;
  if (!discrete.empty() && static_cast<Index>(discrete.size()) != K)
    throw CsvError("covariate kind flags do not match column count");

  std::map<std::string, std::vector<double>> by_unit;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto cells = split_line(lines[k]);
    if (static_cast<Index>(cells.size()) != K + 1)
      throw CsvError("malformed covariate row in " + path);
    std::vector<double> vals;
    for (Index c = 0; c < K; ++c)
      vals.push_back(parse_number(cells[static_cast<std::size_t>(c) + 1], path));
    by_unit[cells[0]] = std::move(vals);
  }

  Matrix S(static_cast<Index>(unit_ids.size()), K);
  for (Index i = 0; i < S.rows(); ++i) {
    const auto it = by_unit.find(unit_ids[static_cast<std::size_t>(i)]);
    if (it == by_unit.end())
      throw CsvError("no covariate row for unit '" + unit_ids[static_cast<std::size_t>(i)] +
                     "'");
    for (Index c = 0; c < K; ++c) S(i, c) = it->second[static_cast<std::size_t>(c)];
  }

  std::vector<ColumnKind> kinds;
  for (Index c = 0; c < K; ++c)
    kinds.push_back(!discrete.empty() && discrete[static_cast<std::size_t>(c)]
                        ? ColumnKind::Discrete
                        : ColumnKind::Continuous);
  std::vector<std::string> names(header.begin() + 1, header.end());
  return CovariateVector::make(std::move(S), std::move(kinds), std::move(names));
}

std::vector<Index> read_schedule(const std::string& path,
                                 const std::vector<std::string>& unit_ids,
                                 const std::vector<std::string>& time_ids) {
  const auto lines = read_lines(path);
  const auto header = split_line(lines[0]);
  if (header.size() != 2) throw CsvError("schedule needs exactly unit,adopt_time columns");

  std::map<std::string, Index> time_pos;
  for (std::size_t t = 0; t < time_ids.size(); ++t)
    time_pos[time_ids[t]] = static_cast<Index>(t);

  std::map<std::string, std::string> by_unit;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto cells = split_line(lines[k]);
    if (cells.size() != 2) throw CsvError("malformed schedule row in " + path);
    by_unit[cells[0]] = cells[1];
  }

  std::vector<Index> adopt;
  const Index T = static_cast<Index>(time_ids.size());
  for (const auto& unit : unit_ids) {
    const auto it = by_unit.find(unit);
    if (it == by_unit.end()) {
      adopt.push_back(T); // units absent from the schedule are never treated
      continue;
    }
    if (it->second == "NEVER") {
      adopt.push_back(T);
    } else {
      const auto tp = time_pos.find(it->second);
      if (tp == time_pos.end())
        throw CsvError("adopt_time '" + it->second + "' is not a panel time id");
      adopt.push_back(tp->second);
    }
  }
  return adopt;
}

Matrix read_matrix(const std::string& path) {
  const auto lines = read_lines(path);
  std::vector<std::vector<double>> rows;
  for (const auto& line : lines) {
    const auto cells = split_line(line);
    std::vector<double> row;
    for (const auto& cell : cells) row.push_back(parse_number(cell, path));
    if (!rows.empty() && rows.front().size() != row.size())
      throw CsvError("ragged matrix rows in " + path);
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

}  // namespace lfm::csv
