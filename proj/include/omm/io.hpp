#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "omm/pipeline.hpp"

namespace omm {

// Point ingestion. CSV rows are `id,x1,...,xd` with an optional header;
// the explicit format is a lower-triangular matrix, one row per point,
// row i carrying i-1 distances (the first row is empty).
struct InstanceData {
  bool euclidean = true;
  std::vector<std::vector<double>> payloads;  // coords or distance rows
};

InstanceData read_euclidean_csv(std::istream& in);
InstanceData read_matrix(std::istream& in);
InstanceData read_instance(const std::string& path, const std::string& format);

std::string format_bench_row(const BenchRow& row);

void write_vectors_csv(std::ostream& out,
                       const std::vector<std::vector<double>>& vecs);

}  // namespace omm
