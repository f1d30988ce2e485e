#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace adapool {

// One row of an evaluation report.
struct EvalRecord {
  std::string image_id;
  std::string method;
  std::size_t kernel = 0;
  double ssim = 0.0;
  double psnr_db = 0.0;
  std::int64_t forward_us = 0;
  std::int64_t backward_us = 0;
  std::optional<std::uint64_t> seed;

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

inline constexpr const char* kEvalCsvHeader =
    "image_id,method,kernel,ssim,psnr_db,forward_us,backward_us,seed";

// Doubles are printed with 17 significant digits so rows parse back exactly;
// an infinite PSNR is written as "inf".
std::string to_csv_row(const EvalRecord& record);
EvalRecord parse_csv_row(const std::string& line);  // throws FormatError

void write_eval_csv(std::ostream& out, const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_eval_csv(std::istream& in);

// Orders by (image_id, method, kernel).
void sort_records(std::vector<EvalRecord>& records);

struct MethodSummary {
  std::string method;
  std::size_t kernel = 0;
  std::size_t count = 0;
  double mean_ssim = 0.0;
  double mean_psnr_db = 0.0;
  double mean_forward_us = 0.0;
  double mean_backward_us = 0.0;
};

// Arithmetic means per (method, kernel), ordered by method then kernel.
std::vector<MethodSummary> summarize(const std::vector<EvalRecord>& records);
void write_summary_csv(std::ostream& out,
                       const std::vector<MethodSummary>& summary);

}  // namespace adapool
