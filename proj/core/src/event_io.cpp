#include "cpol/event_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cpol/errors.hpp"

namespace cpol::io {

namespace {

using nlohmann::json;

int version_major(std::string_view version) {
  int major = 0;
  const auto res = std::from_chars(version.data(), version.data() + version.size(), major);
  if (res.ec != std::errc{}) throw VersionError("unparsable format_version");
  return major;
}

std::string hex16(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

events::EventRecord record_from_json(const json& j) {
  events::EventRecord rec;
  rec.event_id = j.at("id").get<std::uint64_t>();
  rec.de_pre_a = j.at("de_pre_a").get<double>();
  rec.de_pre_b = j.at("de_pre_b").get<double>();
  rec.e_main_a = j.at("e_main_a").get<double>();
  rec.e_main_b = j.at("e_main_b").get<double>();
  rec.counter_a = j.at("counter_a").get<int>();
  rec.counter_b = j.at("counter_b").get<int>();
  rec.e_counter_a = j.at("e_counter_a").get<double>();
  rec.e_counter_b = j.at("e_counter_b").get<double>();
  rec.lost = j.value("lost", false);
  if (j.contains("truth")) {
    events::EventTruth truth;
    truth.prescatter_theta = j.at("truth").at("theta").get<double>();
    truth.prescatter_phi = j.at("truth").at("phi").get<double>();
    truth.which_arm = j.at("truth").at("arm").get<std::string>().at(0);
    rec.truth = truth;
  }
  return rec;
}

}  // namespace

EventFileHeader make_header(const RunConfig& cfg) {
  EventFileHeader header;
  header.effective_config = cfg;
  header.generator_digest = config_digest(cfg);
  return header;
}

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string format_g9(double value) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

std::string header_to_jsonl(const EventFileHeader& header) {
  json doc;
  doc["cpol_event_file"] = {
      {"format_version", header.format_version},
      {"generator_digest", hex16(header.generator_digest)},
      {"effective_config", json::parse(run_config_to_json(header.effective_config))}};
  return doc.dump();
}

std::string record_to_jsonl(const events::EventRecord& rec) {
  std::string out;
  out.reserve(220);
  out += "{\"id\":";
  out += std::to_string(rec.event_id);
  out += ",\"de_pre_a\":";
  append_double(out, rec.de_pre_a);
  out += ",\"de_pre_b\":";
  append_double(out, rec.de_pre_b);
  out += ",\"e_main_a\":";
  append_double(out, rec.e_main_a);
  out += ",\"e_main_b\":";
  append_double(out, rec.e_main_b);
  out += ",\"counter_a\":";
  out += std::to_string(rec.counter_a);
  out += ",\"counter_b\":";
  out += std::to_string(rec.counter_b);
  out += ",\"e_counter_a\":";
  append_double(out, rec.e_counter_a);
  out += ",\"e_counter_b\":";
  append_double(out, rec.e_counter_b);
  out += ",\"lost\":";
  out += rec.lost ? "true" : "false";
  if (rec.truth) {
    out += ",\"truth\":{\"theta\":";
    append_double(out, rec.truth->prescatter_theta);
    out += ",\"phi\":";
    append_double(out, rec.truth->prescatter_phi);
    out += ",\"arm\":\"";
    out += rec.truth->which_arm;
    out += "\"}";
  }
  out += "}";
  return out;
}

std::string header_to_csv(const EventFileHeader& header) {
  std::string out = "# cpol-events format_version=";
  out += header.format_version;
  out += " generator_digest=";
  out += hex16(header.generator_digest);
  out += "\n# config ";
  out += run_config_to_json(header.effective_config);
  out +=
      "\nid,de_pre_a,de_pre_b,e_main_a,e_main_b,counter_a,counter_b,e_counter_a,e_counter_b,"
      "lost,truth_theta,truth_phi,truth_arm";
  return out;
}

std::string record_to_csv(const events::EventRecord& rec) {
  std::string out;
  out.reserve(160);
  out += std::to_string(rec.event_id);
  for (double v : {rec.de_pre_a, rec.de_pre_b, rec.e_main_a, rec.e_main_b}) {
    out += ',';
    out += format_g9(v);
  }
  out += ',';
  out += std::to_string(rec.counter_a);
  out += ',';
  out += std::to_string(rec.counter_b);
  for (double v : {rec.e_counter_a, rec.e_counter_b}) {
    out += ',';
    out += format_g9(v);
  }
  out += rec.lost ? ",1" : ",0";
  if (rec.truth) {
    out += ',';
    out += format_g9(rec.truth->prescatter_theta);
    out += ',';
    out += format_g9(rec.truth->prescatter_phi);
    out += ',';
    out += rec.truth->which_arm;
  } else {
    out += ",,,";
  }
  return out;
}

struct EventFileWriter::Impl {
  std::ofstream stream;
  EventFileFormat format;
  std::string buffer;
};

EventFileWriter::EventFileWriter(const std::string& path, const EventFileHeader& header)
    : impl_(std::make_unique<Impl>()) {
  impl_->stream.open(path, std::ios::binary);
  if (!impl_->stream) throw IoError("cannot open output file: " + path);
  impl_->format = header.effective_config.output_format;
  impl_->buffer.reserve(1 << 20);
  impl_->buffer = impl_->format == EventFileFormat::jsonl ? header_to_jsonl(header)
                                                          : header_to_csv(header);
  impl_->buffer += '\n';
}

EventFileWriter::~EventFileWriter() {
  try {
    close();
  } catch (...) {
  }
}

void EventFileWriter::write(std::span<const events::EventRecord> records) {
  auto& buf = impl_->buffer;
  for (const auto& rec : records) {
    buf += impl_->format == EventFileFormat::jsonl ? record_to_jsonl(rec) : record_to_csv(rec);
    buf += '\n';
    if (buf.size() > (1 << 20)) {
      impl_->stream.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  if (!impl_->stream) throw IoError("write failure on event file");
}

void EventFileWriter::close() {
  if (!impl_ || !impl_->stream.is_open()) return;
  if (!impl_->buffer.empty()) {
    impl_->stream.write(impl_->buffer.data(), static_cast<std::streamsize>(impl_->buffer.size()));
    impl_->buffer.clear();
  }
  impl_->stream.close();
  if (impl_->stream.fail()) throw IoError("close failure on event file");
}

EventFile read_event_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open event file: " + path);

  EventFile file;
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty event file: " + path);

  if (line.starts_with("{")) {
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError(std::string("bad event file header: ") + e.what());
    }
    if (!doc.contains("cpol_event_file")) throw IoError("not a cpol event file: " + path);
    const auto& h = doc.at("cpol_event_file");
    try {
      file.header.format_version = h.at("format_version").get<std::string>();
      file.header.generator_digest =
          std::stoull(h.at("generator_digest").get<std::string>(), nullptr, 16);
    } catch (const std::exception& e) {
      throw IoError(std::string("bad event file header: ") + e.what());
    }
    file.header.effective_config =
        parse_run_config(h.at("effective_config").dump());
    if (version_major(file.header.format_version) != version_major(event_format_version)) {
      throw VersionError("event file format major " + file.header.format_version +
                         " incompatible with " + std::string(event_format_version));
    }
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        file.records.push_back(record_from_json(json::parse(line)));
      } catch (const json::exception& e) {
        throw IoError(std::string("bad event record: ") + e.what());
      }
    }
    return file;
  }

  if (line.starts_with("#")) {
    const auto ver_pos = line.find("format_version=");
    const auto dig_pos = line.find("generator_digest=");
    if (ver_pos == std::string::npos || dig_pos == std::string::npos) {
      throw IoError("malformed CSV event header: " + path);
    }
    file.header.format_version =
        line.substr(ver_pos + 15, line.find(' ', ver_pos + 15) - (ver_pos + 15));
    try {
      file.header.generator_digest = std::stoull(line.substr(dig_pos + 17), nullptr, 16);
    } catch (const std::exception& e) {
      throw IoError(std::string("bad event file header: ") + e.what());
    }
    if (version_major(file.header.format_version) != version_major(event_format_version)) {
      throw VersionError("event file format major " + file.header.format_version +
                         " incompatible with " + std::string(event_format_version));
    }
    std::string config_line;
    if (!std::getline(in, config_line) || !config_line.starts_with("# config ")) {
      throw IoError("missing CSV config line: " + path);
    }
    file.header.effective_config = parse_run_config(config_line.substr(9));
    std::string columns;
    std::getline(in, columns);  // column-name row

    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> fields;
      std::stringstream ss(line);
      std::string field;
      while (std::getline(ss, field, ',')) fields.push_back(field);
      while (fields.size() < 13) fields.emplace_back();
      try {
        events::EventRecord rec;
        rec.event_id = std::stoull(fields[0]);
        rec.de_pre_a = std::stod(fields[1]);
        rec.de_pre_b = std::stod(fields[2]);
        rec.e_main_a = std::stod(fields[3]);
        rec.e_main_b = std::stod(fields[4]);
        rec.counter_a = std::stoi(fields[5]);
        rec.counter_b = std::stoi(fields[6]);
        rec.e_counter_a = std::stod(fields[7]);
        rec.e_counter_b = std::stod(fields[8]);
        rec.lost = fields[9] == "1";
        if (!fields[10].empty()) {
          events::EventTruth truth;
          truth.prescatter_theta = std::stod(fields[10]);
          truth.prescatter_phi = std::stod(fields[11]);
          truth.which_arm = fields[12].empty() ? 'a' : fields[12][0];
          rec.truth = truth;
        }
        file.records.push_back(rec);
      } catch (const std::exception& e) {
        throw IoError(std::string("bad CSV event record: ") + e.what());
      }
    }
    return file;
  }
  throw IoError("unrecognized event file format: " + path);
}

std::uint64_t file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file for digest: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string bytes = buffer.str();
  return fnv1a64(bytes.data(), bytes.size());
}

}  // namespace cpol::io
