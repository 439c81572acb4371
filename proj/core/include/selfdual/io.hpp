#pragma once

#include "selfdual/common.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace selfdual {

nlohmann::json vec_json(const Vec& v);
nlohmann::json mat_json(const Mat& M);
/// Accepts a number (dimension one) or an array.
Vec json_vec(const nlohmann::json& j);
/// Accepts an array of rows, or a number for a 1×1 matrix.
Mat json_mat(const nlohmann::json& j);
nlohmann::json certificate_json(const Certificate& c);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

/// Plain comma-separated table with one header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  void write(std::ostream& os) const;
  void write(const std::string& path) const;
  static CsvTable read(const std::string& path);
};

}  // namespace selfdual
