#include "omm/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace omm {

namespace {

std::vector<double> parse_numbers(const std::string& line, char sep) {
  std::vector<double> out;
  std::string tok;
  std::istringstream is(line);
  while (std::getline(is, tok, sep)) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  return out;
}

bool numeric_start(const std::string& line) {
  for (char c : line) {
    if (c == ' ' || c == '\t' || c == ',') continue;
    return (c >= '0' && c <= '9') || c == '-' || c == '+' || c == '.';
  }
  return false;
}

}  // namespace

InstanceData read_euclidean_csv(std::istream& in) {
  InstanceData data;
  data.euclidean = true;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first && !numeric_start(line)) {
      first = false;
      continue;  // header
    }
    first = false;
    auto nums = parse_numbers(line, ',');
    if (nums.size() < 2)
      throw std::invalid_argument("csv row needs an id and coordinates");
    nums.erase(nums.begin());  // drop the id column
    if (!data.payloads.empty() && nums.size() != data.payloads.front().size())
      throw std::invalid_argument("csv rows disagree on dimension");
    data.payloads.push_back(std::move(nums));
  }
  return data;
}

InstanceData read_matrix(std::istream& in) {
  InstanceData data;
  data.euclidean = false;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    auto nums = parse_numbers(line, ' ');
    if (nums.size() != row) {
      if (nums.empty()) break;  // trailing blank lines
      throw std::invalid_argument("matrix row " + std::to_string(row + 1) +
                                  " must carry " + std::to_string(row) +
                                  " distances");
    }
    data.payloads.push_back(std::move(nums));
    ++row;
  }
  if (data.payloads.empty())
    throw std::invalid_argument("matrix input is empty");
  return data;
}

InstanceData read_instance(const std::string& path, const std::string& format) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open input: " + path);
  if (format == "csv") return read_euclidean_csv(in);
  if (format == "matrix") return read_matrix(in);
  throw std::invalid_argument("unknown format: " + format);
}

std::string format_bench_row(const BenchRow& row) {
  std::ostringstream os;
  os.precision(17);
  os << row.step << ',' << row.algo << ',' << row.cost << ',';
  if (row.opt) os << *row.opt;
  os << ',';
  if (row.ratio) os << *row.ratio;
  os << ',' << row.mst << ',' << row.lightness << ',' << row.deletions << ','
     << row.additions << ',' << row.seed;
  return os.str();
}

void write_vectors_csv(std::ostream& out,
                       const std::vector<std::vector<double>>& vecs) {
  out << "point_id";
  std::size_t dim = 0;
  for (const auto& v : vecs) dim = std::max(dim, v.size());
  for (std::size_t k = 0; k < dim; ++k) out << ",y" << k + 1;
  out << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    out << i + 1;
    for (std::size_t k = 0; k < dim; ++k)
      out << ',' << (k < vecs[i].size() ? vecs[i][k] : 0.0);
    out << '\n';
  }
}

}  // namespace omm
