#include "selfdual/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace selfdual {

nlohmann::json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json mat_json(const Mat& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < M.rows(); ++r) {
    std::vector<double> row(M.cols());
    for (int c = 0; c < M.cols(); ++c) row[c] = M(r, c);
    rows.push_back(row);
  }
  return rows;
}

Vec json_vec(const nlohmann::json& j) {
  if (j.is_number()) return Vec::Constant(1, j.get<double>());
  if (!j.is_array()) fail(ErrorKind::InvalidArgument, "expected a number or an array of numbers");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(ErrorKind::InvalidArgument, "non-numeric vector entry");
    v[i] = j[i].get<double>();
  }
  return v;
}

Mat json_mat(const nlohmann::json& j) {
  if (j.is_number()) return Mat::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) fail(ErrorKind::InvalidArgument, "expected an array of matrix rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 1;
  Mat M(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vec row = json_vec(j[r]);
    if (static_cast<std::size_t>(row.size()) != cols) fail(ErrorKind::InvalidArgument, "ragged matrix rows");
    M.row(r) = row.transpose();
  }
  return M;
}

nlohmann::json certificate_json(const Certificate& c) {
  nlohmann::json j = {{"value", std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json("inf")},
                      {"tolerance", c.tolerance},
                      {"converged", c.converged},
                      {"iterations", c.iterations},
                      {"diagnostics", c.diagnostics}};
  if (c.point.size() && c.point.size() <= 64) j["point"] = vec_json(c.point);
  return j;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidArgument, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::InvalidArgument, path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::InvalidArgument, "cannot write " + path);
  out << j.dump(2) << '\n';
}

void CsvTable::write(std::ostream& os) const {
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n' << std::setprecision(17);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
}

void CsvTable::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::InvalidArgument, "cannot write " + path);
  write(out);
}

CsvTable CsvTable::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidArgument, "cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::InvalidArgument, path + " is empty");
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) t.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::vector<double> row;
    for (std::string cell; std::getline(ls, cell, ',');) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail(ErrorKind::InvalidArgument, path + ": bad number '" + cell + "'");
      }
    }
    if (row.size() != t.header.size()) fail(ErrorKind::InvalidArgument, path + ": row width differs from header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace selfdual
