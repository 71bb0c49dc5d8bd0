#pragma once

#include <string>
#include <vector>

#include "maniopt/solver_core.hpp"

namespace maniopt {

// Deterministic shortest round-trip formatting used by every writer.
std::string format_double(double v);

// Writes to a temporary file in the target directory and renames it over the
// destination, so readers never observe partial content.
void write_text_atomic(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

// Dense matrices use the array format, column major. Symmetric matrices can
// be stored as coordinate/symmetric via write_matrix_market_symmetric.
void write_matrix_market(const std::string& path, const Matrix& a);
void write_matrix_market_symmetric(const std::string& path, const Matrix& a);
Matrix read_matrix_market(const std::string& path);

// 0/1 masks as coordinate pattern files.
void write_mask(const std::string& path, const Matrix& mask);
Matrix read_mask(const std::string& path);

// iter,f,gradnorm,step,aux,time_s rows. The time column is written as 0 so
// that repeated runs produce identical bytes; wall-clock time lives in the
// run summary instead.
std::string trace_to_csv(const std::vector<TraceRecord>& trace);
void write_trace_csv(const std::string& path,
                     const std::vector<TraceRecord>& trace);

}  // namespace maniopt
