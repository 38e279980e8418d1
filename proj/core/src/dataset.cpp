#include "fzoo/dataset.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fzoo/rng.hpp"

namespace fzoo {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  cells.push_back(cell);
  return cells;
}

double parse_cell(const std::string& cell, std::size_t data_row,
                  const std::string& column) {
  errno = 0;
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE) {
    throw std::runtime_error("csv: non-numeric cell '" + cell + "' in row " +
                             std::to_string(data_row) + ", column '" + column + "'");
  }
  return v;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("csv: cannot open '" + path + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("csv: '" + path + "' is empty (no header row)");
  }
  const std::vector<std::string> header = split_csv_line(line);
  std::size_t label_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == label_column) {
      label_col = c;
      break;
    }
  }
  if (label_col == header.size()) {
    throw std::runtime_error("csv: label column '" + label_column +
                             "' not found in header of '" + path + "'");
  }

  Dataset ds;
  ds.label_name = label_column;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_col) ds.feature_names.push_back(header[c]);
  }
  ds.dim = header.size() - 1;
  if (ds.dim == 0) {
    throw std::runtime_error("csv: '" + path + "' has no feature columns");
  }

  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    if (line.empty() && in.eof()) break;
    ++data_row;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error("csv: row " + std::to_string(data_row) + " has " +
                               std::to_string(cells.size()) + " cells, header has " +
                               std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = parse_cell(cells[c], data_row, header[c]);
      if (c == label_col) {
        ds.labels.push_back(v);
      } else {
        ds.features.push_back(v);
      }
    }
  }
  ds.n = ds.labels.size();
  if (ds.n == 0) {
    throw std::runtime_error("csv: '" + path + "' has no data rows");
  }
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("csv: cannot write '" + path + "'");
  }
  for (std::size_t c = 0; c < ds.dim; ++c) {
    const std::string name =
        c < ds.feature_names.size() ? ds.feature_names[c] : "x" + std::to_string(c);
    out << name << ',';
  }
  out << ds.label_name << '\n';
  char buf[40];
  for (std::size_t r = 0; r < ds.n; ++r) {
    for (std::size_t c = 0; c < ds.dim; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.feature(r, c));
      out << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", ds.labels[r]);
    out << buf << '\n';
  }
}

Dataset two_gaussians(std::size_t n, std::size_t dim, double separation,
                      std::uint64_t seed) {
  if (n == 0 || dim == 0) {
    throw std::invalid_argument("two_gaussians: n and dim must be positive");
  }
  Dataset ds;
  ds.n = n;
  ds.dim = dim;
  ds.features.reserve(n * dim);
  ds.labels.reserve(n);
  for (std::size_t c = 0; c < dim; ++c) ds.feature_names.push_back("x" + std::to_string(c));
  const double offset = 0.5 * separation / std::sqrt(static_cast<double>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    const double label = static_cast<double>(i % 2);
    const double sign = label == 1.0 ? 1.0 : -1.0;
    rng::SplitMix64 stream(rng::derive(seed, i, rng::kTagEpoch));
    for (std::size_t c = 0; c < dim; ++c) {
      const double z = rng::inverse_normal_cdf(rng::u01(stream.next()));
      ds.features.push_back(sign * offset + z);
    }
    ds.labels.push_back(label);
  }
  return ds;
}

BatchSpec full_batch(std::size_t n) {
  BatchSpec b;
  b.indices.resize(n);
  for (std::size_t i = 0; i < n; ++i) b.indices[i] = i;
  return b;
}

BatchSpec sample_batch(std::size_t n, std::size_t batch_size,
                       std::uint64_t run_seed, std::uint64_t step) {
  if (batch_size == 0) {
    throw std::invalid_argument("sample_batch: batch_size must be positive");
  }
  if (batch_size > n) {
    throw std::invalid_argument("sample_batch: batch_size " +
                                std::to_string(batch_size) + " exceeds dataset size " +
                                std::to_string(n));
  }
  const std::uint64_t batches_per_epoch = n / batch_size;
  const std::uint64_t epoch = step / batches_per_epoch;
  const std::uint64_t slot = step % batches_per_epoch;

  BatchSpec b;
  b.epoch = epoch;
  b.shuffle_seed = rng::epoch_stream_seed(run_seed, epoch);

  // Fisher-Yates under the epoch stream; every batch of this epoch replays
  // the same shuffle and takes its own slice.
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  rng::SplitMix64 stream(b.shuffle_seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(stream.next() % (i + 1));
    std::swap(perm[i], perm[j]);
  }
  b.indices.assign(perm.begin() + slot * batch_size,
                   perm.begin() + (slot + 1) * batch_size);
  return b;
}

}  // namespace fzoo
