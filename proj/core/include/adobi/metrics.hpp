#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "adobi/core_types.hpp"

namespace adobi {

// All image metrics are computed on magnitude images, standard for MRI.

struct PsnrResult {
  double value_db = 0.0;
  bool exact_match = false;  // zero MSE; value_db is +inf
};

// 10 log10(peak^2 / MSE), peak from the reference magnitude.
PsnrResult psnr(const ComplexImage& ref, const ComplexImage& test);

// Mean local SSIM over uniform windows. The dynamic range is the larger of
// the two magnitude peaks, which keeps the score symmetric in its arguments.
double ssim(const ComplexImage& ref, const ComplexImage& test, int window = 7,
            double k1 = 0.01, double k2 = 0.03);

// ||test - ref||^2 / ||ref||^2 on the complex images.
double nmse(const ComplexImage& ref, const ComplexImage& test);

struct ReconReport {
  std::string method;
  std::uint64_t seed = 0;
  double psnr_db = 0.0;
  bool psnr_exact = false;
  double ssim_value = 0.0;
  double nmse_value = 0.0;
  double data_residual = 0.0;
  double runtime_s = 0.0;
};

ReconReport evaluate_reconstruction(const std::string& method, std::uint64_t seed,
                                    const ComplexImage& ref, const ComplexImage& test,
                                    double data_residual, double runtime_s);

struct AggregateRow {
  std::string method;
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;
  int n = 0;
  std::vector<std::uint64_t> outlier_seeds;  // via the 1.5 IQR rule
};

// One row per (method, metric); metrics are psnr, ssim, nmse, residual,
// runtime_s.
std::vector<AggregateRow> aggregate(const std::vector<ReconReport>& reports);

void write_report_csv(const std::filesystem::path& path,
                      const std::vector<ReconReport>& reports);
void write_aggregate_csv(const std::filesystem::path& path,
                         const std::vector<AggregateRow>& rows);

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace adobi
