#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sika/config.hpp"
#include "sika/csv.hpp"
#include "sika/session.hpp"

namespace sika::app {

/// Exit codes of every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitSession = 1;  // protocol or session failure
inline constexpr int kExitUsage = 2;    // bad arguments, config or input

struct InputFile {
  csv::Row header;  // identifier column first
  std::vector<Record> records;
};

/// Header row, then one record per row; every row must have the header's
/// field count. Throws InputError / UsageError.
InputFile read_input(const std::string& path);

/// Writes the collector's result in the configured mode's layout.
void write_result(const AppConfig& cfg, const CollectorResult& res, std::ostream& out);

/// raw_id,bnym_hex,sk_hex for the real records of a provider's output, in input order.
void write_nyms(const std::vector<Record>& records, const ProviderOutput& out, std::ostream& os);

/// Maps an in-flight exception to an exit code and prints it to `err`.
int report_failure(std::exception_ptr e, std::ostream& err);

/// The sika-link command line. Streams are parameters so that tests can
/// drive it in-process.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sika::app
