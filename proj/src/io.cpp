#include "maniopt/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace maniopt {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw NumericalError("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw NumericalError("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_matrix_market(const std::string& path, const Matrix& a) {
  std::string out = "%%MatrixMarket matrix array real general\n";
  out += std::to_string(a.rows()) + " " + std::to_string(a.cols()) + "\n";
  for (long j = 0; j < a.cols(); ++j)
    for (long i = 0; i < a.rows(); ++i) out += format_double(a(i, j)) + "\n";
  write_text_atomic(path, out);
}

void write_matrix_market_symmetric(const std::string& path, const Matrix& a) {
  if (a.rows() != a.cols())
    throw InvalidArgument("symmetric writer needs a square matrix");
  long nnz = 0;
  for (long j = 0; j < a.cols(); ++j)
    for (long i = j; i < a.rows(); ++i)
      if (a(i, j) != 0.0) ++nnz;
  std::string out = "%%MatrixMarket matrix coordinate real symmetric\n";
  out += std::to_string(a.rows()) + " " + std::to_string(a.cols()) + " " +
         std::to_string(nnz) + "\n";
  for (long j = 0; j < a.cols(); ++j)
    for (long i = j; i < a.rows(); ++i)
      if (a(i, j) != 0.0)
        out += std::to_string(i + 1) + " " + std::to_string(j + 1) + " " +
               format_double(a(i, j)) + "\n";
  write_text_atomic(path, out);
}

Matrix read_matrix_market(const std::string& path) {
  std::istringstream in(read_text(path));
  std::string header;
  std::getline(in, header);
  if (header.rfind("%%MatrixMarket", 0) != 0)
    throw InvalidArgument(path + ": missing MatrixMarket header");
  bool coordinate = header.find("coordinate") != std::string::npos;
  bool symmetric = header.find("symmetric") != std::string::npos;
  bool pattern = header.find("pattern") != std::string::npos;

  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream sizes(line);
  long rows = 0, cols = 0, nnz = 0;
  sizes >> rows >> cols;
  if (rows <= 0 || cols <= 0)
    throw InvalidArgument(path + ": bad size line");

  if (!coordinate) {
    Matrix a(rows, cols);
    for (long j = 0; j < cols; ++j)
      for (long i = 0; i < rows; ++i) {
        double v;
        if (!(in >> v)) throw InvalidArgument(path + ": truncated array data");
        a(i, j) = v;
      }
    return a;
  }

  sizes >> nnz;
  Matrix a = Matrix::Zero(rows, cols);
  for (long k = 0; k < nnz; ++k) {
    long i, j;
    double v = 1.0;
    if (!(in >> i >> j)) throw InvalidArgument(path + ": truncated entries");
    if (!pattern && !(in >> v))
      throw InvalidArgument(path + ": truncated entries");
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw InvalidArgument(path + ": index out of range");
    a(i - 1, j - 1) = v;
    if (symmetric) a(j - 1, i - 1) = v;
  }
  return a;
}

void write_mask(const std::string& path, const Matrix& mask) {
  long nnz = 0;
  for (long j = 0; j < mask.cols(); ++j)
    for (long i = 0; i < mask.rows(); ++i)
      if (mask(i, j) != 0.0) ++nnz;
  std::string out = "%%MatrixMarket matrix coordinate pattern general\n";
  out += std::to_string(mask.rows()) + " " + std::to_string(mask.cols()) +
         " " + std::to_string(nnz) + "\n";
  for (long j = 0; j < mask.cols(); ++j)
    for (long i = 0; i < mask.rows(); ++i)
      if (mask(i, j) != 0.0)
        out += std::to_string(i + 1) + " " + std::to_string(j + 1) + "\n";
  write_text_atomic(path, out);
}

Matrix read_mask(const std::string& path) { return read_matrix_market(path); }

std::string trace_to_csv(const std::vector<TraceRecord>& trace) {
  std::string out = "iter,f,gradnorm,step,aux,time_s\n";
  for (const auto& r : trace) {
    out += std::to_string(r.iter) + "," + format_double(r.f) + "," +
           format_double(r.gradnorm) + "," + format_double(r.step) + "," +
           format_double(r.aux) + ",0\n";
  }
  return out;
}

void write_trace_csv(const std::string& path,
                     const std::vector<TraceRecord>& trace) {
  write_text_atomic(path, trace_to_csv(trace));
}

}  // namespace maniopt
