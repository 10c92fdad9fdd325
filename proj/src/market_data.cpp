#include "srifn/market_data.hpp"

#include "srifn/error.hpp"
#include "srifn/random.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace srifn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
  std::vector<std::string_view> cells;
  std::size_t begin = 0;
  while (true) {
    const auto pos = line.find(delimiter, begin);
    if (pos == std::string_view::npos) {
      cells.push_back(trim(line.substr(begin)));
      break;
    }
    cells.push_back(trim(line.substr(begin, pos - begin)));
    begin = pos + 1;
  }
  return cells;
}

bool read_int(std::string_view text, std::size_t& pos, std::size_t digits, int& out) {
  if (pos + digits > text.size()) return false;
  const char* first = text.data() + pos;
  const auto [ptr, ec] = std::from_chars(first, first + digits, out);
  if (ec != std::errc{} || ptr != first + digits) return false;
  pos += digits;
  return true;
}

Error parse_error(std::size_t line, std::size_t column, const std::string& what) {
  return Error(ErrorKind::ParseError, fmt::format("line {}, column {}: {}", line, column, what),
               fmt::format("{}:{}", line, column));
}

}  // namespace

std::string format_date(Date date) {
  return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(date.year()),
                     static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
}

std::optional<Date> parse_date(std::string_view text, std::string_view pattern) {
  int year = 0;
  int month = 0;
  int day = 0;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < pattern.size(); ++k) {
    if (pattern[k] == '%' && k + 1 < pattern.size()) {
      const char token = pattern[++k];
      bool ok = false;
      switch (token) {
        case 'Y': ok = read_int(text, pos, 4, year); break;
        case 'm': ok = read_int(text, pos, 2, month); break;
        case 'd': ok = read_int(text, pos, 2, day); break;
        case '%': ok = pos < text.size() && text[pos++] == '%'; break;
        default: return std::nullopt;
      }
      if (!ok) return std::nullopt;
    } else {
      if (pos >= text.size() || text[pos] != pattern[k]) return std::nullopt;
      ++pos;
    }
  }
  if (pos != text.size()) return std::nullopt;
  const Date date{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                  std::chrono::day{static_cast<unsigned>(day)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

PriceFileFormat PriceFileFormat::from_sidecar(const std::filesystem::path& sidecar) {
  std::ifstream in(sidecar);
  if (!in) throw Error(ErrorKind::FileNotFound, "cannot open " + sidecar.string(), sidecar.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, sidecar.string() + ": " + e.what(), sidecar.string());
  }
  PriceFileFormat format;
  if (doc.contains("delimiter")) {
    const auto d = doc.at("delimiter").get<std::string>();
    if (d.size() != 1) throw Error(ErrorKind::ParseError, "delimiter must be one character", "delimiter");
    format.delimiter = d.front();
  }
  if (doc.contains("date_format")) format.date_format = doc.at("date_format").get<std::string>();
  for (const char* key : {"start", "end"}) {
    if (!doc.contains(key)) continue;
    const auto date = parse_date(doc.at(key).get<std::string>());
    if (!date) throw Error(ErrorKind::ParseError, fmt::format("{} must be a YYYY-MM-DD date", key), key);
    (std::string_view(key) == "start" ? format.start : format.end) = date;
  }
  return format;
}

PriceFileFormat PriceFileFormat::for_file(const std::filesystem::path& csv) {
  auto sidecar = csv;
  sidecar += ".json";
  if (std::filesystem::exists(sidecar)) return from_sidecar(sidecar);
  return {};
}

PricePanel::PricePanel(std::vector<Date> dates, std::vector<std::string> assets, Eigen::MatrixXd prices)
    : dates_(std::move(dates)), assets_(std::move(assets)), prices_(std::move(prices)) {
  if (prices_.rows() != static_cast<Eigen::Index>(dates_.size()) ||
      prices_.cols() != static_cast<Eigen::Index>(assets_.size()))
    throw Error(ErrorKind::ParseError, "price matrix shape does not match dates x assets");
  for (std::size_t t = 1; t < dates_.size(); ++t)
    if (!(dates_[t - 1] < dates_[t]))
      throw Error(ErrorKind::ParseError, "dates must be strictly increasing", format_date(dates_[t]));
  if (std::set<std::string>(assets_.begin(), assets_.end()).size() != assets_.size())
    throw Error(ErrorKind::ParseError, "duplicate asset identifier");
  for (Eigen::Index t = 0; t < prices_.rows(); ++t)
    for (Eigen::Index i = 0; i < prices_.cols(); ++i) {
      const double p = prices_(t, i);
      if (!std::isnan(p) && !(p > 0.0))
        throw Error(ErrorKind::NonPositivePrice,
                    fmt::format("non-positive price {} for {} on {}", p, assets_[i], format_date(dates_[t])),
                    assets_[i]);
    }
}

ReturnPanel::ReturnPanel(std::vector<Date> dates, std::vector<std::string> assets, Eigen::MatrixXd returns)
    : dates_(std::move(dates)), assets_(std::move(assets)), returns_(std::move(returns)) {
  if (returns_.rows() != static_cast<Eigen::Index>(dates_.size()) ||
      returns_.cols() != static_cast<Eigen::Index>(assets_.size()))
    throw Error(ErrorKind::ParseError, "return matrix shape does not match dates x assets");
}

ReturnPanel ReturnPanel::slice_rows(Eigen::Index begin, Eigen::Index end) const {
  begin = std::clamp<Eigen::Index>(begin, 0, rows());
  end = std::clamp<Eigen::Index>(end, begin, rows());
  std::vector<Date> dates(dates_.begin() + begin, dates_.begin() + end);
  return ReturnPanel(std::move(dates), assets_, returns_.middleRows(begin, end - begin));
}

ReturnPanel ReturnPanel::select_assets(std::span<const std::size_t> columns) const {
  std::vector<std::string> assets;
  Eigen::MatrixXd values(rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) {
    assets.push_back(assets_.at(columns[k]));
    values.col(static_cast<Eigen::Index>(k)) = returns_.col(static_cast<Eigen::Index>(columns[k]));
  }
  return ReturnPanel(dates_, std::move(assets), std::move(values));
}

std::vector<std::size_t> ReturnPanel::complete_assets(Eigen::Index begin, Eigen::Index end) const {
  std::vector<std::size_t> out;
  for (Eigen::Index i = 0; i < cols(); ++i)
    if (!returns_.col(i).segment(begin, end - begin).hasNaN()) out.push_back(static_cast<std::size_t>(i));
  return out;
}

Eigen::Index ReturnPanel::lower_bound(Date date) const {
  return std::lower_bound(dates_.begin(), dates_.end(), date) - dates_.begin();
}

CorrelationMatrix::CorrelationMatrix(std::vector<std::string> assets, Eigen::MatrixXd values)
    : assets_(std::move(assets)), values_(std::move(values)) {
  if (values_.rows() != values_.cols() || values_.rows() != static_cast<Eigen::Index>(assets_.size()))
    throw Error(ErrorKind::NonSymmetricInput, "correlation matrix shape does not match asset count");
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    if (values_(i, i) != 1.0) throw Error(ErrorKind::NonSymmetricInput, "correlation diagonal must be 1");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(values_(i, j) - values_(j, i)) > 1e-12)
        throw Error(ErrorKind::NonSymmetricInput, "correlation matrix is not symmetric");
      if (!(std::abs(values_(i, j)) <= 1.0))
        throw Error(ErrorKind::NonSymmetricInput, "correlation outside [-1, 1]");
    }
  }
}

PricePanel load_prices(const std::filesystem::path& source, const PriceFileFormat& format) {
  std::ifstream in(source);
  if (!in) throw Error(ErrorKind::FileNotFound, "cannot open " + source.string(), source.string());

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> assets;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const auto header = split(line, format.delimiter);
    if (header.front() != "date") throw parse_error(line_no, 1, "first column must be 'date'");
    for (std::size_t k = 1; k < header.size(); ++k) {
      if (header[k].empty()) throw parse_error(line_no, k + 1, "empty asset identifier");
      assets.emplace_back(header[k]);
    }
    break;
  }
  if (assets.empty() && line_no == 0) throw parse_error(1, 1, "empty file");

  std::vector<Date> dates;
  std::vector<double> cells;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto row = split(line, format.delimiter);
    if (row.size() != assets.size() + 1)
      throw parse_error(line_no, std::min(row.size(), assets.size() + 1) + 1,
                        fmt::format("expected {} cells, found {}", assets.size() + 1, row.size()));
    const auto date = parse_date(row.front(), format.date_format);
    if (!date) throw parse_error(line_no, 1, "bad date '" + std::string(row.front()) + "'");
    if (format.start && *date < *format.start) continue;
    if (format.end && *format.end < *date) continue;
    if (!dates.empty() && !(dates.back() < *date))
      throw parse_error(line_no, 1, "dates must be strictly increasing");
    dates.push_back(*date);
    for (std::size_t k = 1; k < row.size(); ++k) {
      const auto cell = row[k];
      if (cell.empty()) {
        cells.push_back(kNaN);
        continue;
      }
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value))
        throw parse_error(line_no, k + 1, "bad price '" + std::string(cell) + "'");
      if (!(value > 0.0))
        throw Error(ErrorKind::NonPositivePrice,
                    fmt::format("non-positive price {} for {} on {}", value, assets[k - 1], format_date(*date)),
                    assets[k - 1]);
      cells.push_back(value);
    }
  }

  const auto n_rows = static_cast<Eigen::Index>(dates.size());
  const auto n_cols = static_cast<Eigen::Index>(assets.size());
  Eigen::MatrixXd prices(n_rows, n_cols);
  for (Eigen::Index t = 0; t < n_rows; ++t)
    for (Eigen::Index i = 0; i < n_cols; ++i) prices(t, i) = cells[static_cast<std::size_t>(t * n_cols + i)];

  for (Eigen::Index i = 0; i < n_cols; ++i) {
    Eigen::Index present = 0;
    for (Eigen::Index t = 0; t < n_rows; ++t) present += std::isnan(prices(t, i)) ? 0 : 1;
    if (present < 2)
      throw Error(ErrorKind::InsufficientHistory,
                  fmt::format("asset {} has {} prices in range; at least 2 are needed", assets[i], present),
                  assets[i]);
  }
  return PricePanel(std::move(dates), std::move(assets), std::move(prices));
}

PricePanel load_prices(const std::filesystem::path& source) {
  if (!std::filesystem::exists(source))
    throw Error(ErrorKind::FileNotFound, "cannot open " + source.string(), source.string());
  return load_prices(source, PriceFileFormat::for_file(source));
}

ReturnPanel log_returns(const PricePanel& panel) {
  if (panel.rows() < 2) throw Error(ErrorKind::TooFewObservations, "log returns need at least 2 dates");
  const Eigen::MatrixXd logs = panel.prices().array().log().matrix();
  Eigen::MatrixXd returns = logs.bottomRows(panel.rows() - 1) - logs.topRows(panel.rows() - 1);
  std::vector<Date> dates(panel.dates().begin() + 1, panel.dates().end());
  return ReturnPanel(std::move(dates), panel.assets(), std::move(returns));
}

CorrelationMatrix correlation(const ReturnPanel& window, ZeroVariancePolicy policy) {
  const Eigen::Index s = window.rows();
  const Eigen::Index n = window.cols();
  if (s < 2) throw Error(ErrorKind::TooFewObservations, "correlation needs at least 2 observations");
  if (window.returns().hasNaN()) throw Error(ErrorKind::MissingData, "correlation window contains missing returns");

  const Eigen::RowVectorXd mean = window.returns().colwise().mean();
  const Eigen::MatrixXd centered = window.returns().rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(s - 1);

  Eigen::VectorXd scale(n);
  std::vector<bool> constant(static_cast<std::size_t>(n), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto column = window.returns().col(i);
    const bool flat = (column.array() == column(0)).all();
    if (flat) {
      if (policy == ZeroVariancePolicy::Reject)
        throw Error(ErrorKind::ZeroVariance, "asset " + window.assets()[i] + " has zero variance",
                    window.assets()[i]);
      constant[static_cast<std::size_t>(i)] = true;
    }
    scale(i) = flat ? 0.0 : 1.0 / std::sqrt(cov(i, i));
  }

  Eigen::MatrixXd values = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double r = 0.0;
      if (!constant[static_cast<std::size_t>(i)] && !constant[static_cast<std::size_t>(j)])
        r = std::clamp(cov(i, j) * scale(i) * scale(j), -1.0, 1.0);
      values(i, j) = r;
      values(j, i) = r;
    }
  return CorrelationMatrix(window.assets(), std::move(values));
}

std::vector<Eigen::Index> bootstrap_indices(Eigen::Index rows, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Eigen::Index> picks(static_cast<std::size_t>(rows));
  for (auto& p : picks) p = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(rows)));
  return picks;
}

ReturnPanel bootstrap_rows(const ReturnPanel& window, std::uint64_t seed) {
  if (window.rows() == 0) throw Error(ErrorKind::TooFewObservations, "cannot bootstrap an empty window");
  const auto picks = bootstrap_indices(window.rows(), seed);
  Eigen::MatrixXd values(window.rows(), window.cols());
  for (std::size_t k = 0; k < picks.size(); ++k)
    values.row(static_cast<Eigen::Index>(k)) = window.returns().row(picks[k]);
  // Resampled rows no longer correspond to calendar dates; keep the original
  // labels so the panel stays well-formed.
  return ReturnPanel(window.dates(), window.assets(), std::move(values));
}

}  // namespace srifn
