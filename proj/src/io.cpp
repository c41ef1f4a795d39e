#include "hawkes/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "hawkes/rng.hpp"

namespace hawkes {

namespace {

// JSON has no infinities; null stands for -inf.
Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

double get_num(const Json& j) {
  if (j.is_null()) return -std::numeric_limits<double>::infinity();
  if (!j.is_number()) throw ParseError("expected a number, got " + j.dump());
  return j.get<double>();
}

Json nums(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

std::vector<double> get_nums(const Json& j) {
  if (!j.is_array()) throw ParseError("expected an array, got " + j.dump());
  std::vector<double> v;
  for (const auto& x : j) v.push_back(get_num(x));
  return v;
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(fmt::format("missing field '{}'", key));
  return j.at(key);
}

void check_schema(const Json& j) {
  if (j.contains("schema_version") && j.at("schema_version") != kSchemaVersion) {
    throw ParseError("unsupported schema_version " + j.at("schema_version").dump());
  }
}

std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  const auto a = s.find_first_not_of(ws);
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(ws);
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v)) {
    throw ParseError(fmt::format("line {}: '{}' is not a finite number", line, s));
  }
  return v;
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

// ---------------------------------------------------------------- params

Json to_json(const SegmentShape& s) {
  Json params = Json::object();
  const auto names = s.param_names();
  const auto values = s.params();
  for (std::size_t k = 0; k < names.size(); ++k) params[names[k]] = values[k];
  return {{"kind", std::string(to_string(s.kind()))}, {"params", params}};
}

SegmentShape segment_from_json(const Json& j) {
  const auto kind_name = field(j, "kind").get<std::string>();
  SegmentKind kind{};
  bool found = false;
  for (auto k : {SegmentKind::Constant, SegmentKind::Ramp, SegmentKind::Exponential}) {
    if (to_string(k) == kind_name) {
      kind = k;
      found = true;
    }
  }
  if (!found) throw ParseError("unknown segment kind '" + kind_name + "'");
  const Json& pj = field(j, "params");
  // names come from a placeholder of the same kind
  const std::vector<double> ones(kind == SegmentKind::Constant ? 1 : kind == SegmentKind::Ramp ? 2 : 3, 1.0);
  const auto names = SegmentShape::from_params(kind, ones).param_names();
  std::vector<double> values;
  for (const auto& n : names) values.push_back(field(pj, n.c_str()).get<double>());
  return SegmentShape::from_params(kind, values);
}

Json to_json(const ProductivityProfile& p) {
  Json segs = Json::array();
  for (const auto& s : p.segments()) segs.push_back(to_json(s));
  Json flags = Json::array();
  for (bool f : p.continuity_flags()) flags.push_back(f);
  return {{"window_start", p.window_start()},
          {"window_end", p.window_end()},
          {"change_points", std::vector<double>(p.change_points().begin(), p.change_points().end())},
          {"segments", segs},
          {"continuity_flags", flags}};
}

ProductivityProfile profile_from_json(const Json& j) {
  std::vector<SegmentShape> segs;
  for (const auto& s : field(j, "segments")) segs.push_back(segment_from_json(s));
  std::vector<bool> flags;
  if (j.contains("continuity_flags")) {
    for (const auto& f : j.at("continuity_flags")) flags.push_back(f.get<bool>());
  }
  return ProductivityProfile(field(j, "window_start").get<double>(), field(j, "window_end").get<double>(),
                             j.contains("change_points") ? j.at("change_points").get<std::vector<double>>()
                                                         : std::vector<double>{},
                             std::move(segs), std::move(flags));
}

Json to_json(const HawkesParams& p) {
  return {{"schema_version", kSchemaVersion},
          {"lambda0", p.lambda0},
          {"beta", p.beta},
          {"variant", std::string(to_string(p.variant))},
          {"profile", to_json(p.profile)}};
}

HawkesParams params_from_json(const Json& j) {
  check_schema(j);
  HawkesParams p;
  p.lambda0 = field(j, "lambda0").get<double>();
  p.beta = field(j, "beta").get<double>();
  p.profile = profile_from_json(field(j, "profile"));
  if (j.contains("variant")) {
    try {
      p.variant = variant_from_string(j.at("variant").get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what());
    }
  }
  return p;
}

HawkesParams params_from_any_json(const Json& j) {
  if (j.is_object() && j.contains("theta_hat")) return params_from_json(j.at("theta_hat"));
  return params_from_json(j);
}

// ---------------------------------------------------------------- priors

Json to_json(const PriorSpec& p) {
  auto ln = [](const LogNormalPrior& q) { return Json{{"mu", q.mu}, {"sigma", q.sigma}}; };
  auto nm = [](const NormalPrior& q) { return Json{{"mu", q.mu}, {"sigma", q.sigma}}; };
  Json j{{"schema_version", kSchemaVersion},
         {"lambda0_prior", ln(p.lambda0_prior)},
         {"beta_prior", ln(p.beta_prior)},
         {"kappa_level_prior", {{"a", p.kappa_level_prior.a}, {"b", p.kappa_level_prior.b}}},
         {"slope_prior", nm(p.slope_prior)},
         {"rate_prior", nm(p.rate_prior)}};
  j["min_gap"] = p.min_gap ? Json(*p.min_gap) : Json(nullptr);
  return j;
}

PriorSpec priors_from_json(const Json& j) {
  check_schema(j);
  PriorSpec p;
  auto two = [&](const char* key, double& x, const char* a, double& y, const char* b) {
    if (!j.contains(key)) return;
    const Json& q = j.at(key);
    x = get_or(q, a, x);
    y = get_or(q, b, y);
  };
  two("lambda0_prior", p.lambda0_prior.mu, "mu", p.lambda0_prior.sigma, "sigma");
  two("beta_prior", p.beta_prior.mu, "mu", p.beta_prior.sigma, "sigma");
  two("kappa_level_prior", p.kappa_level_prior.a, "a", p.kappa_level_prior.b, "b");
  two("slope_prior", p.slope_prior.mu, "mu", p.slope_prior.sigma, "sigma");
  two("rate_prior", p.rate_prior.mu, "mu", p.rate_prior.sigma, "sigma");
  if (j.contains("min_gap") && !j.at("min_gap").is_null()) p.min_gap = j.at("min_gap").get<double>();
  const auto v = p.violations();
  if (!v.empty()) throw ParseError("priors: " + v.front());
  return p;
}

// ---------------------------------------------------------------- fit result

Json to_json(const FitResult& r) {
  Json grids = Json::array();
  for (const auto& g : r.posterior_grid) {
    grids.push_back({{"candidates", nums(g.candidates)},
                     {"log_posterior", nums(g.log_posterior)},
                     {"weights", nums(g.weights)}});
  }
  Json trace = Json::array();
  for (const auto& t : r.trace) {
    trace.push_back({{"loglik", num(t.loglik)}, {"objective", num(t.objective)}, {"params", to_json(t.params)}});
  }
  Json cont = Json::array();
  for (bool f : r.shape.continuity) cont.push_back(f);
  return {{"schema_version", kSchemaVersion},
          {"shape", {{"name", r.shape.name()}, {"continuity", cont}}},
          {"theta_hat", to_json(r.theta_hat)},
          {"cp_com", nums(r.cp_com)},
          {"cp_map", nums(r.cp_map)},
          {"posterior_grid", grids},
          {"trace", trace},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"loglik", num(r.loglik)},
          {"objective", num(r.objective)},
          {"param_names", r.param_names},
          {"laplace_sd", nums(r.laplace_sd)},
          {"warnings", r.warnings}};
}

FitResult fit_result_from_json(const Json& j) {
  check_schema(j);
  FitResult r;
  const Json& sh = field(j, "shape");
  try {
    r.shape = ModelShape::parse(field(sh, "name").get<std::string>());
  } catch (const DomainError& e) {
    throw ParseError(e.what());
  }
  if (sh.contains("continuity")) r.shape.continuity = sh.at("continuity").get<std::vector<bool>>();
  r.theta_hat = params_from_json(field(j, "theta_hat"));
  r.cp_com = get_nums(field(j, "cp_com"));
  r.cp_map = get_nums(field(j, "cp_map"));
  for (const auto& g : field(j, "posterior_grid")) {
    r.posterior_grid.push_back(
        {get_nums(field(g, "candidates")), get_nums(field(g, "log_posterior")), get_nums(field(g, "weights"))});
  }
  for (const auto& t : field(j, "trace")) {
    r.trace.push_back({get_num(field(t, "loglik")), get_num(field(t, "objective")), params_from_json(field(t, "params"))});
  }
  r.converged = field(j, "converged").get<bool>();
  r.iterations = field(j, "iterations").get<int>();
  r.loglik = get_num(field(j, "loglik"));
  r.objective = get_num(field(j, "objective"));
  r.param_names = field(j, "param_names").get<std::vector<std::string>>();
  r.laplace_sd = get_nums(field(j, "laplace_sd"));
  r.warnings = field(j, "warnings").get<std::vector<std::string>>();
  return r;
}

// ---------------------------------------------------------------- evidence

Json to_json(const EvidenceTable& t) {
  Json recs = Json::array();
  for (const auto& r : t.records) {
    Json x{{"name", r.name},
           {"K", r.K},
           {"p_M", r.p_M},
           {"log_evidence", num(r.log_evidence)},
           {"mc_samples", r.mc_samples},
           {"mc_std_err", num(r.mc_std_err)},
           {"warnings", r.warnings}};
    x["error"] = r.error ? Json(*r.error) : Json(nullptr);
    recs.push_back(x);
  }
  return {{"schema_version", kSchemaVersion}, {"records", recs}};
}

EvidenceTable evidence_table_from_json(const Json& j) {
  check_schema(j);
  EvidenceTable t;
  for (const auto& x : field(j, "records")) {
    EvidenceRecord r;
    r.name = field(x, "name").get<std::string>();
    r.K = field(x, "K").get<std::size_t>();
    r.p_M = field(x, "p_M").get<std::size_t>();
    r.log_evidence = get_num(field(x, "log_evidence"));
    r.mc_samples = field(x, "mc_samples").get<std::size_t>();
    r.mc_std_err = get_num(field(x, "mc_std_err"));
    r.warnings = field(x, "warnings").get<std::vector<std::string>>();
    if (x.contains("error") && !x.at("error").is_null()) r.error = x.at("error").get<std::string>();
    t.records.push_back(std::move(r));
  }
  return t;
}

// ---------------------------------------------------------------- files

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

EventSeq read_events_csv(std::istream& in, std::optional<double> window_start, std::optional<double> window_end) {
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::vector<double> times;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty()) continue;
    if (!header) {
      if (s != "time") throw ParseError(fmt::format("line {}: expected header 'time'", lineno));
      header = true;
      continue;
    }
    const double t = parse_double(s, lineno);
    if (!times.empty() && !(t > times.back())) {
      throw ParseError(fmt::format("line {}: times not strictly increasing ({} after {})", lineno, t, times.back()));
    }
    const double ws = window_start.value_or(0.0);
    if (!(t > ws)) throw ParseError(fmt::format("line {}: time {} not after window start {}", lineno, t, ws));
    if (window_end && t > *window_end) {
      throw ParseError(fmt::format("line {}: time {} beyond window end {}", lineno, t, *window_end));
    }
    times.push_back(t);
  }
  if (!header) throw ParseError("line 1: expected header 'time'");
  const double ws = window_start.value_or(0.0);
  const double we = window_end ? *window_end : (times.empty() ? ws + 1.0 : times.back());
  if (!(we > ws)) throw ParseError("window end must exceed window start");
  return EventSeq(std::move(times), ws, we);
}

EventSeq read_events_csv_file(const std::string& path, std::optional<double> window_start,
                              std::optional<double> window_end) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return read_events_csv(in, window_start, window_end);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_events_csv(std::ostream& out, const EventSeq& events) {
  out << "time\n";
  for (double t : events.times()) out << fmt::format("{}\n", t);
}

std::int64_t days_from_iso(const std::string& date) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  char extra = 0;
  if (date.size() != 10 || date[4] != '-' || date[7] != '-' ||
      std::sscanf(date.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &extra) != 3) {
    throw ParseError("'" + date + "' is not an ISO-8601 date (YYYY-MM-DD)");
  }
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  if (m < 1 || m > 12 || d < 1 || d > kDays[m - 1] + ((m == 2 && leap) ? 1u : 0u)) {
    throw ParseError("'" + date + "' is not a calendar date");
  }
  // civil-to-days over 400-year eras
  const std::int64_t yy = y - (m <= 2 ? 1 : 0);
  const std::int64_t era = (yy >= 0 ? yy : yy - 399) / 400;
  const auto yoe = static_cast<unsigned>(yy - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

DailyCounts read_daily_csv(std::istream& in) {
  DailyCounts c;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::int64_t prev = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty()) continue;
    if (!header) {
      if (s != "date,count") throw ParseError(fmt::format("line {}: expected header 'date,count'", lineno));
      header = true;
      continue;
    }
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw ParseError(fmt::format("line {}: expected 'date,count'", lineno));
    const std::string date = trim(s.substr(0, comma));
    const std::string cnt = trim(s.substr(comma + 1));
    std::int64_t day = 0;
    try {
      day = days_from_iso(date);
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("line {}: {}", lineno, e.what()));
    }
    if (!c.dates.empty() && day <= prev) throw ParseError(fmt::format("line {}: dates not strictly increasing", lineno));
    std::int64_t n = 0;
    const auto [p, ec] = std::from_chars(cnt.data(), cnt.data() + cnt.size(), n);
    if (ec != std::errc() || p != cnt.data() + cnt.size()) {
      throw ParseError(fmt::format("line {}: '{}' is not an integer count", lineno, cnt));
    }
    prev = day;
    c.dates.push_back(date);
    c.counts.push_back(n);
  }
  if (!header) throw ParseError("line 1: expected header 'date,count'");
  return c;
}

DailyCounts read_daily_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return read_daily_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

EventSeq ingest_daily(const DailyCounts& counts, std::uint64_t seed) {
  if (counts.dates.size() != counts.counts.size()) throw DomainError("daily counts: dates and counts differ in length");
  if (counts.dates.empty()) throw DomainError("daily counts: no days");
  for (auto n : counts.counts) {
    if (n < 0) throw DomainError("daily counts: negative count");
  }
  const std::int64_t first = days_from_iso(counts.dates.front());
  std::vector<double> times;
  std::int64_t prev = first - 1;
  Rng rng(seed);
  for (std::size_t i = 0; i < counts.dates.size(); ++i) {
    const std::int64_t day = days_from_iso(counts.dates[i]);
    if (day <= prev) throw DomainError("daily counts: dates not strictly increasing");
    prev = day;
    const auto d = static_cast<double>(day - first);
    for (std::int64_t k = 0; k < counts.counts[i]; ++k) times.push_back(d + rng.uniform_open());
  }
  std::sort(times.begin(), times.end());
  // ties have probability zero but doubles are finite
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i] <= times[i - 1]) times[i] = std::nextafter(times[i - 1], times[i - 1] + 1.0);
  }
  return EventSeq(std::move(times), 0.0, static_cast<double>(prev - first + 1));
}

}  // namespace hawkes
