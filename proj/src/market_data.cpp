#include "roughvol/market_data.hpp"

#include "roughvol/errors.hpp"
#include "roughvol/stat_tests.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace roughvol {

namespace {

constexpr const char* kHeader = "trade_date,expiry_date,strike,bid,ask,close,volume";

std::chrono::sys_days parse_date(const std::string& text) {
  int y = 0;
  unsigned m = 0, d = 0;
  char dash1 = 0, dash2 = 0;
  std::istringstream in(text);
  in >> y >> dash1 >> m >> dash2 >> d;
  if (!in || dash1 != '-' || dash2 != '-' || !in.eof()) {
    throw InvalidInput(fmt::format("'{}' is not an ISO date (YYYY-MM-DD)", text));
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw InvalidInput(fmt::format("'{}' is not a valid calendar date", text));
  return std::chrono::sys_days{ymd};
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  char* end = nullptr;
  out = std::strtod(text.c_str(), &end);
  return end == text.c_str() + text.size() && std::isfinite(out);
}

double apply_rule(double spread, WeightRule rule) {
  switch (rule) {
    case WeightRule::inv_spread_sq:
      return 1.0 / (spread * spread);
    case WeightRule::inv_spread_abs:
      return 1.0 / std::abs(spread);
    case WeightRule::inv_spread_sqrt:
      return 1.0 / std::sqrt(spread);
  }
  return 1.0;
}

}  // namespace

std::string to_string(WeightRule rule) {
  switch (rule) {
    case WeightRule::inv_spread_sq:
      return "inv_spread_sq";
    case WeightRule::inv_spread_abs:
      return "inv_spread_abs";
    case WeightRule::inv_spread_sqrt:
      return "inv_spread_sqrt";
  }
  return "inv_spread_sq";
}

WeightRule weight_rule_from_string(const std::string& name) {
  if (name == "inv_spread_sq") return WeightRule::inv_spread_sq;
  if (name == "inv_spread_abs") return WeightRule::inv_spread_abs;
  if (name == "inv_spread_sqrt") return WeightRule::inv_spread_sqrt;
  throw InvalidInput(fmt::format("unknown weight rule '{}'", name));
}

std::vector<OptionSpec> OptionStructure::option_specs() const {
  std::vector<OptionSpec> out;
  out.reserve(quotes.size());
  for (const auto& q : quotes) out.push_back({q.strike, q.maturity});
  return out;
}

std::vector<double> OptionStructure::maturities() const {
  std::vector<double> out;
  out.reserve(quotes.size());
  for (const auto& q : quotes) out.push_back(q.maturity);
  return out;
}

std::vector<double> OptionStructure::market_prices() const {
  std::vector<double> out;
  out.reserve(quotes.size());
  for (const auto& q : quotes) out.push_back(q.close);
  return out;
}

long days_between(const std::string& from, const std::string& to) {
  return static_cast<long>((parse_date(to) - parse_date(from)).count());
}

std::string add_days(const std::string& date, long days) {
  const std::chrono::year_month_day ymd{parse_date(date) + std::chrono::days{days}};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()));
}

double year_fraction(const std::string& from, const std::string& to, const std::string& day_count) {
  if (day_count != "ACT/365" && day_count != "ACT/365F") {
    throw InvalidInput(fmt::format("unsupported day count '{}'", day_count));
  }
  return static_cast<double>(days_between(from, to)) / 365.0;
}

MarketSidecar load_market_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(fmt::format("cannot open market sidecar '{}'", path.string()));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(fmt::format("market sidecar '{}': {}", path.string(), e.what()));
  }
  MarketSidecar sidecar;
  sidecar.env.spot = j.at("spot").get<double>();
  sidecar.env.rate = j.value("rate", 0.0);
  sidecar.day_count = j.value("day_count", std::string("ACT/365"));
  sidecar.env.validate();
  return sidecar;
}

void write_market_sidecar(const MarketSidecar& sidecar, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["spot"] = sidecar.env.spot;
  j["rate"] = sidecar.env.rate;
  j["day_count"] = sidecar.day_count;
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

OptionStructure load_chain(const std::filesystem::path& csv, const std::filesystem::path& sidecar, WeightRule rule) {
  return load_chain(csv, load_market_sidecar(sidecar), rule);
}

OptionStructure load_chain(const std::filesystem::path& csv, const MarketSidecar& sidecar, WeightRule rule) {
  std::ifstream in(csv);
  if (!in) throw InvalidInput(fmt::format("cannot open chain file '{}'", csv.string()));
  sidecar.env.validate();

  std::string line;
  if (!std::getline(in, line) || trim(line) != kHeader) {
    throw ChainFormatError(fmt::format("chain file '{}': expected header '{}'", csv.string(), kHeader), 0);
  }

  OptionStructure s;
  s.env = sidecar.env;
  s.day_count = sidecar.day_count;
  s.weight_rule = rule;

  std::vector<std::string> problems;
  std::size_t first_bad = 0;
  std::size_t row = 0;
  auto complain = [&](std::string msg) {
    if (problems.empty()) first_bad = row;
    problems.push_back(fmt::format("row {}: {}", row, msg));
  };

  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_csv_line(line);
    if (fields.size() != 7) {
      complain(fmt::format("expected 7 fields, found {}", fields.size()));
      continue;
    }
    OptionQuote q;
    const std::string trade = trim(fields[0]);
    q.expiry_date = trim(fields[1]);
    if (s.trade_date.empty()) s.trade_date = trade;
    if (trade != s.trade_date) {
      complain(fmt::format("trade_date {} differs from {}", trade, s.trade_date));
      continue;
    }
    try {
      q.maturity = year_fraction(trade, q.expiry_date, s.day_count);
    } catch (const InvalidInput& e) {
      complain(e.what());
      continue;
    }
    if (!parse_double(trim(fields[2]), q.strike) || !parse_double(trim(fields[3]), q.bid) ||
        !parse_double(trim(fields[4]), q.ask) || !parse_double(trim(fields[5]), q.close)) {
      complain("non-numeric strike/bid/ask/close");
      continue;
    }
    const std::string vol = trim(fields[6]);
    if (!vol.empty()) {
      char* end = nullptr;
      const long long v = std::strtoll(vol.c_str(), &end, 10);
      if (end != vol.c_str() + vol.size() || v < 0) {
        complain(fmt::format("invalid volume '{}'", vol));
        continue;
      }
      q.volume = v;
    }
    if (!(q.strike > 0.0)) complain(fmt::format("strike {} must be positive", q.strike));
    else if (!(q.maturity > 0.0)) complain(fmt::format("expiry {} is not after the trade date", q.expiry_date));
    else if (!(q.bid >= 0.0)) complain(fmt::format("bid {} is negative", q.bid));
    else if (q.bid > q.ask) complain(fmt::format("bid {} exceeds ask {}", q.bid, q.ask));
    else if (!(q.close > 0.0)) complain(fmt::format("close {} must be positive", q.close));
    else s.quotes.push_back(std::move(q));
  }

  if (!problems.empty()) {
    std::string msg = fmt::format("chain file '{}' rejected:", csv.string());
    for (const auto& p : problems) msg += "\n  " + p;
    throw ChainFormatError(msg, first_bad);
  }
  if (s.quotes.empty()) throw ChainFormatError(fmt::format("chain file '{}' has no rows", csv.string()), 0);
  s.weights = compute_weights(s, rule);
  return s;
}

std::string chain_to_csv(const OptionStructure& structure) {
  std::string out = std::string(kHeader) + "\n";
  for (const auto& q : structure.quotes) {
    out += fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", structure.trade_date, q.expiry_date, q.strike,
                       q.bid, q.ask, q.close, q.volume ? std::to_string(*q.volume) : std::string());
  }
  return out;
}

void write_chain(const OptionStructure& structure, const std::filesystem::path& csv) {
  std::ofstream out(csv);
  if (!out) throw InvalidInput(fmt::format("cannot write chain file '{}'", csv.string()));
  out << chain_to_csv(structure);
}

std::vector<double> compute_weights(const OptionStructure& structure, WeightRule rule) {
  std::vector<double> weights(structure.size(), 0.0);
  std::vector<double> finite;
  std::vector<std::size_t> capped;
  for (std::size_t i = 0; i < structure.size(); ++i) {
    const double spread = structure.quotes[i].spread();
    if (spread > 0.0) {
      weights[i] = apply_rule(spread, rule);
      if (std::isfinite(weights[i])) {
        finite.push_back(weights[i]);
        continue;
      }
    }
    capped.push_back(i);
  }
  if (!capped.empty()) {
    const double cap = finite.empty() ? 1.0 : quantile_linear(finite, 0.99);
    for (std::size_t i : capped) weights[i] = cap;
    spdlog::warn("{} quote(s) without a positive bid-ask spread; weight capped at {:.6g} (first row {})",
                 capped.size(), cap, capped.front() + 1);
  }
  return weights;
}

}  // namespace roughvol
