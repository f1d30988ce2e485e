#include "adapool/eval_record.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "adapool/errors.h"

namespace adapool {

namespace {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v,
                                 std::chars_format::general, 17);
  return std::string(buf, end);
}

double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError("bad number '" + s + "' in CSV row");
  }
  return v;
}

template <typename T>
T parse_integer(const std::string& s) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError("bad integer '" + s + "' in CSV row");
  }
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

std::string to_csv_row(const EvalRecord& r) {
  std::string row = r.image_id + "," + r.method + "," +
                    std::to_string(r.kernel) + "," + format_double(r.ssim) +
                    "," + format_double(r.psnr_db) + "," +
                    std::to_string(r.forward_us) + "," +
                    std::to_string(r.backward_us) + ",";
  if (r.seed) row += std::to_string(*r.seed);
  return row;
}

EvalRecord parse_csv_row(const std::string& line) {
  auto fields = split(line);
  if (fields.size() != 8) {
    throw FormatError("expected 8 CSV fields, got " +
                      std::to_string(fields.size()));
  }
  EvalRecord r;
  r.image_id = fields[0];
  r.method = fields[1];
  r.kernel = parse_integer<std::size_t>(fields[2]);
  r.ssim = parse_double(fields[3]);
  r.psnr_db = parse_double(fields[4]);
  r.forward_us = parse_integer<std::int64_t>(fields[5]);
  r.backward_us = parse_integer<std::int64_t>(fields[6]);
  if (!fields[7].empty()) r.seed = parse_integer<std::uint64_t>(fields[7]);
  if (r.forward_us < 0 || r.backward_us < 0) {
    throw FormatError("negative latency in CSV row");
  }
  return r;
}

void write_eval_csv(std::ostream& out, const std::vector<EvalRecord>& records) {
  out << kEvalCsvHeader << '\n';
  for (const auto& r : records) out << to_csv_row(r) << '\n';
}

std::vector<EvalRecord> read_eval_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kEvalCsvHeader) {
    throw FormatError("missing evaluation CSV header");
  }
  std::vector<EvalRecord> records;
  while (std::getline(in, line)) {
    if (!line.empty()) records.push_back(parse_csv_row(line));
  }
  return records;
}

void sort_records(std::vector<EvalRecord>& records) {
  std::sort(records.begin(), records.end(),
            [](const EvalRecord& a, const EvalRecord& b) {
              return std::tie(a.image_id, a.method, a.kernel) <
                     std::tie(b.image_id, b.method, b.kernel);
            });
}

std::vector<MethodSummary> summarize(const std::vector<EvalRecord>& records) {
  std::map<std::pair<std::string, std::size_t>, MethodSummary> groups;
  for (const auto& r : records) {
    auto& s = groups[{r.method, r.kernel}];
    s.method = r.method;
    s.kernel = r.kernel;
    ++s.count;
    s.mean_ssim += r.ssim;
    s.mean_psnr_db += r.psnr_db;
    s.mean_forward_us += static_cast<double>(r.forward_us);
    s.mean_backward_us += static_cast<double>(r.backward_us);
  }
  std::vector<MethodSummary> out;
  for (auto& [key, s] : groups) {
    const double n = static_cast<double>(s.count);
    s.mean_ssim /= n;
    s.mean_psnr_db /= n;
    s.mean_forward_us /= n;
    s.mean_backward_us /= n;
    out.push_back(s);
  }
  return out;
}

void write_summary_csv(std::ostream& out,
                       const std::vector<MethodSummary>& summary) {
  out << "method,kernel,count,mean_ssim,mean_psnr_db,mean_forward_us,"
         "mean_backward_us\n";
  for (const auto& s : summary) {
    out << s.method << ',' << s.kernel << ',' << s.count << ','
        << format_double(s.mean_ssim) << ',' << format_double(s.mean_psnr_db)
        << ',' << format_double(s.mean_forward_us) << ','
        << format_double(s.mean_backward_us) << '\n';
  }
}

}  // namespace adapool
