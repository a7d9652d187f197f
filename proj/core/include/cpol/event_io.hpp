#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cpol/events.hpp"
#include "cpol/run_config.hpp"

namespace cpol::io {

/// Event file format version; analyzers refuse files with a different major.
inline constexpr std::string_view event_format_version = "1.0.0";

struct EventFileHeader {
  std::string format_version{event_format_version};
  RunConfig effective_config;
  std::uint64_t generator_digest = 0;
};

EventFileHeader make_header(const RunConfig& cfg);

/// Render a double with shortest round-trip formatting (locale independent).
std::string format_double(double value);

/// Render with 9 significant digits, the fixed convention of CSV outputs.
std::string format_g9(double value);

/// Serialize the header / one record as a JSON line (no trailing newline).
std::string header_to_jsonl(const EventFileHeader& header);
std::string record_to_jsonl(const events::EventRecord& rec);

/// CSV rendering: '#'-prefixed header lines plus a column-name row.
std::string header_to_csv(const EventFileHeader& header);
std::string record_to_csv(const events::EventRecord& rec);

/// Streaming writer; the format is taken from the header's effective config.
class EventFileWriter {
 public:
  EventFileWriter(const std::string& path, const EventFileHeader& header);
  ~EventFileWriter();
  EventFileWriter(const EventFileWriter&) = delete;
  EventFileWriter& operator=(const EventFileWriter&) = delete;

  void write(std::span<const events::EventRecord> records);
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Parsed event file.
struct EventFile {
  EventFileHeader header;
  std::vector<events::EventRecord> records;
};

/// Read a full event file, throwing VersionError if the format major differs
/// and IoError on anything unreadable. The format is sniffed from the first
/// line.
EventFile read_event_file(const std::string& path);

/// FNV-1a digest of a file's bytes, for determinism checks.
std::uint64_t file_digest(const std::string& path);

}  // namespace cpol::io
