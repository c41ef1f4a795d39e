#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hawkes/core.hpp"
#include "hawkes/estimate.hpp"
#include "hawkes/evidence.hpp"

namespace hawkes {

using Json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "1";

// Malformed input file or document; the message names the line or field.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json to_json(const SegmentShape& s);
SegmentShape segment_from_json(const Json& j);
Json to_json(const ProductivityProfile& p);
ProductivityProfile profile_from_json(const Json& j);
Json to_json(const HawkesParams& p);
HawkesParams params_from_json(const Json& j);

Json to_json(const PriorSpec& p);
// Missing fields keep their defaults.
PriorSpec priors_from_json(const Json& j);

Json to_json(const FitResult& r);
FitResult fit_result_from_json(const Json& j);

Json to_json(const EvidenceTable& t);
EvidenceTable evidence_table_from_json(const Json& j);

// Parameters from either a HawkesParams document or a FitResult (theta_hat).
HawkesParams params_from_any_json(const Json& j);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

// Header `time`, one value per row, strictly increasing. The window defaults
// to (0, last time].
EventSeq read_events_csv(std::istream& in, std::optional<double> window_start = std::nullopt,
                         std::optional<double> window_end = std::nullopt);
EventSeq read_events_csv_file(const std::string& path, std::optional<double> window_start = std::nullopt,
                              std::optional<double> window_end = std::nullopt);
void write_events_csv(std::ostream& out, const EventSeq& events);

struct DailyCounts {
  std::vector<std::string> dates;  // ISO-8601 calendar days, strictly increasing
  std::vector<std::int64_t> counts;
};

// Days since 1970-01-01 of an ISO-8601 "YYYY-MM-DD" date.
std::int64_t days_from_iso(const std::string& date);

// Header `date,count`.
DailyCounts read_daily_csv(std::istream& in);
DailyCounts read_daily_csv_file(const std::string& path);

// Day d (counted from the first date) with count c contributes c times drawn
// uniformly inside (d, d + 1); the window is (0, last day + 1]. Time is in days.
EventSeq ingest_daily(const DailyCounts& counts, std::uint64_t seed);

}  // namespace hawkes
