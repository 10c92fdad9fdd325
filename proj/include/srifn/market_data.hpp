#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace srifn {

using Date = std::chrono::year_month_day;

// Formats as YYYY-MM-DD.
std::string format_date(Date date);

// Parses `text` against a strftime-like pattern. Supported tokens are %Y, %m,
// %d and %%; every other character must match literally.
std::optional<Date> parse_date(std::string_view text, std::string_view pattern = "%Y-%m-%d");

// How a price file is laid out. A `<file>.json` sidecar next to a CSV can
// override the delimiter and the date pattern, e.g.
//   {"delimiter": ";", "date_format": "%d/%m/%Y"}
struct PriceFileFormat {
  char delimiter = ',';
  std::string date_format = "%Y-%m-%d";
  std::optional<Date> start;
  std::optional<Date> end;

  static PriceFileFormat from_sidecar(const std::filesystem::path& sidecar);
  // Default format, overridden by `<csv>.json` when that file exists.
  static PriceFileFormat for_file(const std::filesystem::path& csv);
};

// Close prices indexed by date (rows) and asset (columns). Missing cells are
// NaN; every present price is strictly positive.
class PricePanel {
 public:
  PricePanel(std::vector<Date> dates, std::vector<std::string> assets, Eigen::MatrixXd prices);

  const std::vector<Date>& dates() const noexcept { return dates_; }
  const std::vector<std::string>& assets() const noexcept { return assets_; }
  const Eigen::MatrixXd& prices() const noexcept { return prices_; }
  Eigen::Index rows() const noexcept { return prices_.rows(); }
  Eigen::Index cols() const noexcept { return prices_.cols(); }

 private:
  std::vector<Date> dates_;
  std::vector<std::string> assets_;
  Eigen::MatrixXd prices_;
};

// Daily log returns (rows = observations, cols = assets). NaN marks a return
// that touches a missing price.
class ReturnPanel {
 public:
  ReturnPanel(std::vector<Date> dates, std::vector<std::string> assets, Eigen::MatrixXd returns);

  const std::vector<Date>& dates() const noexcept { return dates_; }
  const std::vector<std::string>& assets() const noexcept { return assets_; }
  const Eigen::MatrixXd& returns() const noexcept { return returns_; }
  Eigen::Index rows() const noexcept { return returns_.rows(); }
  Eigen::Index cols() const noexcept { return returns_.cols(); }

  // Rows [begin, end).
  ReturnPanel slice_rows(Eigen::Index begin, Eigen::Index end) const;
  ReturnPanel select_assets(std::span<const std::size_t> columns) const;
  // Columns without any missing value in rows [begin, end).
  std::vector<std::size_t> complete_assets(Eigen::Index begin, Eigen::Index end) const;
  // First row whose date is >= `date` (rows() when none).
  Eigen::Index lower_bound(Date date) const;

 private:
  std::vector<Date> dates_;
  std::vector<std::string> assets_;
  Eigen::MatrixXd returns_;
};

// Symmetric Pearson correlation matrix with unit diagonal.
class CorrelationMatrix {
 public:
  CorrelationMatrix(std::vector<std::string> assets, Eigen::MatrixXd values);

  const std::vector<std::string>& assets() const noexcept { return assets_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Eigen::Index size() const noexcept { return values_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }

 private:
  std::vector<std::string> assets_;
  Eigen::MatrixXd values_;
};

enum class ZeroVariancePolicy {
  Reject,   // throw ZeroVariance
  ZeroOut,  // correlations involving a constant asset are 0
};

PricePanel load_prices(const std::filesystem::path& source, const PriceFileFormat& format);
PricePanel load_prices(const std::filesystem::path& source);

ReturnPanel log_returns(const PricePanel& panel);

CorrelationMatrix correlation(const ReturnPanel& window,
                              ZeroVariancePolicy policy = ZeroVariancePolicy::Reject);

// Row indices of a with-replacement bootstrap draw of `rows` observations.
std::vector<Eigen::Index> bootstrap_indices(Eigen::Index rows, std::uint64_t seed);
ReturnPanel bootstrap_rows(const ReturnPanel& window, std::uint64_t seed);

}  // namespace srifn
