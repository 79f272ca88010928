#include "adobi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace adobi {
namespace {

std::vector<double> magnitude(const ComplexImage& img) {
  std::vector<double> out(img.size());
  const Complex* p = img.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(p[i]);
  return out;
}

// Linear-interpolation quantile (the common "type 7" convention).
double quantile(std::vector<double> sorted, double q) {
  const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

void write_number(std::ofstream& out, double v) {
  if (std::isinf(v)) {
    out << (v > 0 ? "inf" : "-inf");
    return;
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  out << buf;
}

}  // namespace

PsnrResult psnr(const ComplexImage& ref, const ComplexImage& test) {
  if (!ref.same_shape(test)) throw DimensionError("psnr: shape mismatch");
  const std::vector<double> mref = magnitude(ref);
  const std::vector<double> mtest = magnitude(test);
  double peak = 0.0;
  for (double v : mref) peak = std::max(peak, v);
  if (peak == 0.0) throw ConfigError("psnr: reference is identically zero");
  double mse = 0.0;
  for (std::size_t i = 0; i < mref.size(); ++i) {
    const double d = mref[i] - mtest[i];
    mse += d * d;
  }
  mse /= static_cast<double>(mref.size());
  if (mse == 0.0) return {std::numeric_limits<double>::infinity(), true};
  return {10.0 * std::log10(peak * peak / mse), false};
}

double ssim(const ComplexImage& ref, const ComplexImage& test, int window,
            double k1, double k2) {
  if (!ref.same_shape(test)) throw DimensionError("ssim: shape mismatch");
  if (window < 1 || window % 2 == 0)
    throw ConfigError("ssim: window must be odd and >= 1");
  if (window > ref.height() || window > ref.width())
    throw ConfigError("ssim: window larger than image");
  const std::vector<double> a = magnitude(ref);
  const std::vector<double> b = magnitude(test);
  const int h = ref.height();
  const int w = ref.width();
  double range = 0.0;
  for (double v : a) range = std::max(range, v);
  for (double v : b) range = std::max(range, v);
  if (range == 0.0) return 1.0;  // both identically zero
  const double c1 = (k1 * range) * (k1 * range);
  const double c2 = (k2 * range) * (k2 * range);
  const double n = static_cast<double>(window) * window;

  double total = 0.0;
  long count = 0;
  for (int r = 0; r + window <= h; ++r)
    for (int c = 0; c + window <= w; ++c) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (int i = 0; i < window; ++i)
        for (int j = 0; j < window; ++j) {
          const double va = a[static_cast<std::size_t>(r + i) * w + (c + j)];
          const double vb = b[static_cast<std::size_t>(r + i) * w + (c + j)];
          sa += va;
          sb += vb;
          saa += va * va;
          sbb += vb * vb;
          sab += va * vb;
        }
      const double mu_a = sa / n;
      const double mu_b = sb / n;
      const double var_a = saa / n - mu_a * mu_a;
      const double var_b = sbb / n - mu_b * mu_b;
      const double cov = sab / n - mu_a * mu_b;
      const double score = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                           ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      total += score;
      ++count;
    }
  return total / static_cast<double>(count);
}

double nmse(const ComplexImage& ref, const ComplexImage& test) {
  if (!ref.same_shape(test)) throw DimensionError("nmse: shape mismatch");
  double num = 0.0, den = 0.0;
  const Complex* pr = ref.data();
  const Complex* pt = test.data();
  for (std::size_t i = 0; i < ref.size(); ++i) {
    num += std::norm(pt[i] - pr[i]);
    den += std::norm(pr[i]);
  }
  if (den == 0.0) throw ConfigError("nmse: reference is identically zero");
  return num / den;
}

ReconReport evaluate_reconstruction(const std::string& method, std::uint64_t seed,
                                    const ComplexImage& ref, const ComplexImage& test,
                                    double data_residual, double runtime_s) {
  ReconReport report;
  report.method = method;
  report.seed = seed;
  const PsnrResult p = psnr(ref, test);
  report.psnr_db = p.value_db;
  report.psnr_exact = p.exact_match;
  report.ssim_value = ssim(ref, test);
  report.nmse_value = nmse(ref, test);
  report.data_residual = data_residual;
  report.runtime_s = runtime_s;
  return report;
}

std::vector<AggregateRow> aggregate(const std::vector<ReconReport>& reports) {
  if (reports.empty()) throw ConfigError("aggregate: no reports");
  struct Extractor {
    const char* name;
    double (*get)(const ReconReport&);
  };
  static const Extractor kMetrics[] = {
      {"psnr", [](const ReconReport& r) { return r.psnr_db; }},
      {"ssim", [](const ReconReport& r) { return r.ssim_value; }},
      {"nmse", [](const ReconReport& r) { return r.nmse_value; }},
      {"residual", [](const ReconReport& r) { return r.data_residual; }},
      {"runtime_s", [](const ReconReport& r) { return r.runtime_s; }},
  };

  std::vector<std::string> methods;
  std::map<std::string, std::vector<const ReconReport*>> grouped;
  for (const auto& r : reports) {
    auto& bucket = grouped[r.method];
    if (bucket.empty()) methods.push_back(r.method);
    bucket.push_back(&r);
  }

  std::vector<AggregateRow> rows;
  for (const std::string& method : methods) {
    const auto& bucket = grouped[method];
    for (const Extractor& metric : kMetrics) {
      AggregateRow row;
      row.method = method;
      row.metric = metric.name;
      row.n = static_cast<int>(bucket.size());
      std::vector<double> values;
      values.reserve(bucket.size());
      for (const ReconReport* r : bucket) values.push_back(metric.get(*r));
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      double var = 0.0;
      for (double v : values) var += (v - mean) * (v - mean);
      var /= static_cast<double>(values.size());
      row.mean = mean;
      row.stddev = std::sqrt(var);
      // Outliers by the 1.5 IQR fence, on finite values only.
      std::vector<double> sorted;
      for (double v : values)
        if (std::isfinite(v)) sorted.push_back(v);
      if (sorted.size() >= 4) {
        std::sort(sorted.begin(), sorted.end());
        const double q1 = quantile(sorted, 0.25);
        const double q3 = quantile(sorted, 0.75);
        const double fence = 1.5 * (q3 - q1);
        for (std::size_t i = 0; i < values.size(); ++i)
          if (std::isfinite(values[i]) &&
              (values[i] < q1 - fence || values[i] > q3 + fence))
            row.outlier_seeds.push_back(bucket[i]->seed);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_report_csv(const std::filesystem::path& path,
                      const std::vector<ReconReport>& reports) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open for writing: " + path.string(), 0);
  out << "# ssim: uniform window=7 k1=0.01 k2=0.03; metrics on magnitude images\n";
  out << "method,seed,psnr,ssim,nmse,residual,runtime_s\n";
  for (const auto& r : reports) {
    out << r.method << "," << r.seed << ",";
    write_number(out, r.psnr_db);
    out << ",";
    write_number(out, r.ssim_value);
    out << ",";
    write_number(out, r.nmse_value);
    out << ",";
    write_number(out, r.data_residual);
    out << ",";
    write_number(out, r.runtime_s);
    out << "\n";
  }
}

void write_aggregate_csv(const std::filesystem::path& path,
                         const std::vector<AggregateRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open for writing: " + path.string(), 0);
  out << "# ssim: uniform window=7 k1=0.01 k2=0.03; metrics on magnitude images\n";
  out << "method,metric,mean,std,n,outliers\n";
  for (const auto& row : rows) {
    out << row.method << "," << row.metric << ",";
    write_number(out, row.mean);
    out << ",";
    write_number(out, row.stddev);
    out << "," << row.n << ",";
    out << row.outlier_seeds.size();
    if (!row.outlier_seeds.empty()) {
      out << ":";
      for (std::size_t i = 0; i < row.outlier_seeds.size(); ++i) {
        if (i) out << "|";
        out << row.outlier_seeds[i];
      }
    }
    out << "\n";
  }
}

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty())
    throw DimensionError("pearson_correlation: size mismatch");
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace adobi
